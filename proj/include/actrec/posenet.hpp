#ifndef ACTREC_POSENET_HPP
#define ACTREC_POSENET_HPP

#include <string>

#include "actrec/params.hpp"
#include "actrec/tape.hpp"

namespace actrec::pose {

// Convolutional pose stream: three conv stages over the T x W x 3 pose tensor.
// conv1/conv2 run SAME and are each followed by 2x2 max pooling; conv3 runs
// VALID over the remaining (T/4)x(W/4) map, so its output is 1x1xfeat_dim.
struct PoseNetConfig {
    int T = 20;
    int W = 300;
    int c1 = 32;
    int c2 = 64;
    int feat_dim = 1024;  // length of the pose feature vector s
    int classes = 60;
    int k1h = 8, k1w = 3;
    int k2h = 8, k2w = 3;

    // Extent after the two pooling stages (odd sizes round up via -inf padding);
    // the conv3 kernel is constructed to exactly this size, so its VALID output
    // is always 1x1. Equals T/4 and W/4 whenever they divide evenly.
    static int pooled2(int e) { return ((e + 1) / 2 + 1) / 2; }
    int conv3_h() const { return pooled2(T); }
    int conv3_w() const { return pooled2(W); }
    void validate() const;
};

struct PoseNetParams {
    PoseNetConfig cfg;
    Parameter conv1_w, conv1_b;
    Parameter conv2_w, conv2_b;
    Parameter conv3_w, conv3_b;
    Parameter out_w, out_b;

    ParamList all();
    ParamList theta_sk();  // the conv stack, without the class output layer
};

PoseNetParams init_pose_net(const PoseNetConfig& cfg, uint64_t seed);

struct PoseBinding {
    int conv1_w, conv1_b, conv2_w, conv2_b, conv3_w, conv3_b, out_w, out_b;
};
PoseBinding bind_pose(Binder& b, const PoseNetParams& p);

struct PoseForwardDebug {
    ad::Shape after_stage1, after_stage2, after_conv3;
};

// X -> s. Intermediates at full scale: 10x150xc1, 5x75xc2, 1x1xfeat_dim.
int pose_forward(ad::Tape& t, const PoseBinding& b, const ad::Array& X,
                 PoseForwardDebug* debug = nullptr);

// s -> class logits (softmax lives in the loss / evaluation).
int pose_classify(ad::Tape& t, const PoseBinding& b, int s_id);

// Grad-free convenience: runs forward on a scratch tape.
ad::Array pose_features_eval(const PoseNetParams& p, const ad::Array& X);
ad::Array pose_logits_eval(const PoseNetParams& p, const ad::Array& X);

}  // namespace actrec::pose

#endif
