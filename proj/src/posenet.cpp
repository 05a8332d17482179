#include "actrec/posenet.hpp"

#include <cmath>
#include <random>

namespace actrec::pose {

void PoseNetConfig::validate() const {
    if (T <= 0 || W <= 0 || c1 <= 0 || c2 <= 0 || feat_dim <= 0 || classes <= 0)
        fail("pose config: all extents must be positive");
    if (k1h <= 0 || k1w <= 0 || k2h <= 0 || k2w <= 0) fail("pose config: bad kernel size");
    if (conv3_h() <= 0 || conv3_w() <= 0)
        fail("pose config: T=", T, " W=", W, " too small for two pooling stages");
}

ParamList PoseNetParams::all() {
    return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &conv3_w, &conv3_b, &out_w, &out_b};
}

ParamList PoseNetParams::theta_sk() {
    return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &conv3_w, &conv3_b};
}

PoseNetParams init_pose_net(const PoseNetConfig& cfg, uint64_t seed) {
    cfg.validate();
    PoseNetParams p;
    p.cfg = cfg;
    std::mt19937_64 rng(seed);
    auto he = [&](ad::Shape s, int fan_in) {
        return ad::Array::randn(std::move(s), rng, std::sqrt(2.0 / fan_in));
    };
    p.conv1_w = {"pose.conv1.w", he({cfg.k1h, cfg.k1w, 3, cfg.c1}, cfg.k1h * cfg.k1w * 3)};
    p.conv1_b = {"pose.conv1.b", ad::Array::zeros({cfg.c1})};
    p.conv2_w = {"pose.conv2.w", he({cfg.k2h, cfg.k2w, cfg.c1, cfg.c2}, cfg.k2h * cfg.k2w * cfg.c1)};
    p.conv2_b = {"pose.conv2.b", ad::Array::zeros({cfg.c2})};
    p.conv3_w = {"pose.conv3.w",
                 he({cfg.conv3_h(), cfg.conv3_w(), cfg.c2, cfg.feat_dim},
                    cfg.conv3_h() * cfg.conv3_w() * cfg.c2)};
    p.conv3_b = {"pose.conv3.b", ad::Array::zeros({cfg.feat_dim})};
    p.out_w = {"pose.out.w", he({cfg.classes, cfg.feat_dim}, cfg.feat_dim)};
    p.out_b = {"pose.out.b", ad::Array::zeros({cfg.classes})};
    return p;
}

PoseBinding bind_pose(Binder& b, const PoseNetParams& p) {
    return {b.bind(p.conv1_w), b.bind(p.conv1_b), b.bind(p.conv2_w), b.bind(p.conv2_b),
            b.bind(p.conv3_w), b.bind(p.conv3_b), b.bind(p.out_w),   b.bind(p.out_b)};
}

int pose_forward(ad::Tape& t, const PoseBinding& b, const ad::Array& X, PoseForwardDebug* debug) {
    if (X.rank() != 3 || X.dim(2) != 3)
        fail("pose_forward: expected TxWx3 pose tensor, got ", shape_str(X.shape));
    const ad::Array& k3 = t.val(b.conv3_w);
    auto pooled2 = [](int e) { return ((e + 1) / 2 + 1) / 2; };
    if (k3.dim(0) != pooled2(X.dim(0)) || k3.dim(1) != pooled2(X.dim(1)))
        fail("pose_forward: input ", shape_str(X.shape), " does not match conv3 kernel ",
             shape_str(k3.shape));
    int x = t.leaf(X);
    int s1 = t.maxpool2x2(t.relu(t.conv2d(x, b.conv1_w, b.conv1_b, ad::Padding::Same)));
    int s2 = t.maxpool2x2(t.relu(t.conv2d(s1, b.conv2_w, b.conv2_b, ad::Padding::Same)));
    int s3 = t.relu(t.conv2d(s2, b.conv3_w, b.conv3_b, ad::Padding::Valid));
    if (debug) {
        debug->after_stage1 = t.val(s1).shape;
        debug->after_stage2 = t.val(s2).shape;
        debug->after_conv3 = t.val(s3).shape;
    }
    return t.reshape(s3, {t.val(s3).size()});
}

int pose_classify(ad::Tape& t, const PoseBinding& b, int s_id) {
    return t.affine(b.out_w, s_id, b.out_b);
}

ad::Array pose_features_eval(const PoseNetParams& p, const ad::Array& X) {
    ad::Tape t;
    Binder bd(t);
    PoseBinding b = bind_pose(bd, p);
    return t.val(pose_forward(t, b, X));
}

ad::Array pose_logits_eval(const PoseNetParams& p, const ad::Array& X) {
    ad::Tape t;
    Binder bd(t);
    PoseBinding b = bind_pose(bd, p);
    return t.val(pose_classify(t, b, pose_forward(t, b, X)));
}

}  // namespace actrec::pose
