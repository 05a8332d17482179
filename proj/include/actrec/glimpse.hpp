#ifndef ACTREC_GLIMPSE_HPP
#define ACTREC_GLIMPSE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "actrec/params.hpp"
#include "actrec/tape.hpp"

namespace actrec::rgb {

// RGB stream sizing. The glimpse backbone is pluggable behind the
// patch -> feat_dim contract: here two conv(3x3,SAME)+ReLU+pool(2x2) stages and
// an affine head. At full scale feat_dim is 2048 and lstm_hidden 1024.
struct GlimpseConfig {
    int patch_side = 50;
    int patch_channels = 3;
    int c1 = 16, c2 = 32;       // backbone channels
    int feat_dim = 2048;        // glimpse vector length (D_g)
    int attention_points = 4;   // N: both hands of both persons
    int T = 20;
    int lstm_hidden = 1024;
    int pose_feat_dim = 1024;   // length of s
    int spatial_hidden = 256;
    int temporal_hidden = 512;
    int temporal_feat_dim = 0;  // D_u; 0 means lstm_hidden
    int classes = 60;

    int d_u() const { return temporal_feat_dim > 0 ? temporal_feat_dim : lstm_hidden; }
    // two pooling stages, odd extents rounded up by the -inf padding
    int pooled_side() const { return ((patch_side + 1) / 2 + 1) / 2; }
    int backbone_flat() const { return pooled_side() * pooled_side() * c2; }
    void validate() const;
};

// rgb_forward behavior:
//   full        spatial + temporal attention, conditioned on s
//   spatial     spatial attention only, uniform temporal mean pooling
//   sum         no attention, context = row-sum of V_t, mean pooling
//   concat      no attention, context = column concatenation (wider LSTM input)
//   uncond      full, but s replaced by zeros inside both attention networks
enum class RgbVariant { Full, SpatialOnly, NoAttentionSum, NoAttentionConcat, Unconditioned };
RgbVariant parse_variant(const std::string& s);
const char* to_string(RgbVariant v);

struct Image {
    int h = 0, w = 0, c = 0;
    std::vector<ad::Real> pix;  // [y][x][c]
    Image() = default;
    Image(int h_, int w_, int c_) : h(h_), w(w_), c(c_), pix(static_cast<size_t>(h_) * w_ * c_, 0) {}
    ad::Real& at(int y, int x, int ch) { return pix[(static_cast<size_t>(y) * w + x) * c + ch]; }
    const ad::Real& at(int y, int x, int ch) const {
        return pix[(static_cast<size_t>(y) * w + x) * c + ch];
    }
};

// Axis-aligned square crop centered at (px,py); out-of-bounds regions are
// zero-filled and an invalid attention point yields an all-zero patch.
// Total by construction: never throws for side > 0.
ad::Array crop_glimpse(const Image& img, ad::Real px, ad::Real py, int side, bool valid = true);

struct BackboneParams {
    Parameter conv1_w, conv1_b, conv2_w, conv2_b, fc_w, fc_b;
    ParamList all();
};

struct MlpParams {  // affine -> sigmoid -> affine
    Parameter w1, b1, w2, b2;
    ParamList all();
};

struct LstmParams {
    Parameter w_xi, w_hi, b_i, w_xf, w_hf, b_f, w_xg, w_hg, b_g, w_xo, w_ho, b_o;
    ParamList all();
};

struct RgbStreamParams {
    GlimpseConfig cfg;
    RgbVariant built_for = RgbVariant::Full;  // concat widens the LSTM input
    BackboneParams glimpse;                   // frozen during stream training
    LstmParams lstm;
    MlpParams sattn;        // spatial attention
    Parameter u_w, u_b;     // temporal feature map
    MlpParams tattn;        // temporal attention
    Parameter out_w, out_b;

    ParamList all();
    ParamList theta_g();
    int lstm_input_dim() const;
};

RgbStreamParams init_rgb_stream(const GlimpseConfig& cfg, RgbVariant variant, uint64_t seed);

struct BackboneBinding {
    int conv1_w, conv1_b, conv2_w, conv2_b, fc_w, fc_b;
};
struct MlpBinding {
    int w1, b1, w2, b2;
};
struct RgbBinding {
    BackboneBinding glimpse;
    ad::LstmBinding lstm;
    MlpBinding sattn;
    int u_w, u_b;
    MlpBinding tattn;
    int out_w, out_b;
};
RgbBinding bind_rgb(Binder& b, const RgbStreamParams& p);

// patch -> glimpse vector of length feat_dim
int glimpse_features(ad::Tape& t, const GlimpseConfig& cfg, const BackboneBinding& b,
                     const ad::Array& patch);
ad::Array glimpse_features_eval(const RgbStreamParams& p, const ad::Array& patch);

// concat(h, s) -> hidden sigmoid layer -> softmax over the N attention points
int spatial_attention(ad::Tape& t, const MlpBinding& b, int h_prev, int s_id);

// context = V_t p_t
int context_vector(ad::Tape& t, int V_id, int p_id);

// u_t = relu(affine(h_t))
int temporal_features(ad::Tape& t, int u_w, int u_b, int h_id);

// concat(P, s) -> hidden sigmoid layer -> softmax over the T timesteps
int temporal_attention(ad::Tape& t, const MlpBinding& b, int P_id, int s_id);

// pooled = U p'
int temporal_pool(ad::Tape& t, int U_id, int p_id);

// Per-timestep glimpse input, one column per attention point. The column of an
// invalid point is all-zero.
struct FrameColumns {
    std::vector<int> cols;  // N tape ids, each [feat_dim]
};

// Spatial distributions for each timestep plus the temporal distribution used
// for pooling. Variants without spatial attention leave `spatial` empty; mean
// pooling records the uniform distribution it used.
struct AttentionTrace {
    std::vector<std::vector<ad::Real>> spatial;
    std::vector<ad::Real> temporal;
};

struct RgbForwardOptions {
    RgbVariant variant = RgbVariant::Full;
    bool train = false;
    ad::Real dropout_rate = 0.0;
    uint64_t dropout_seed = 0;
    const std::vector<ad::Real>* fixed_spatial = nullptr;  // test hook: pinned p_t
};

// Runs attention + recurrence + pooling + output over prepared per-frame
// feature columns. s_id must be a tape id of the pose feature vector (it is
// zeroed internally for the unconditioned variant). Returns the logits id.
int rgb_forward_columns(ad::Tape& t, const GlimpseConfig& cfg, const RgbBinding& b,
                        const std::vector<FrameColumns>& frames, int s_id,
                        const RgbForwardOptions& opt, AttentionTrace* trace = nullptr);

// Same, but runs the glimpse backbone on raw patches through the tape
// (end-to-end path; also the gradcheck path).
struct GlimpseFrame {
    std::vector<ad::Array> patches;  // N patches, side x side x channels
    std::vector<uint8_t> valid;      // N flags; invalid => zero feature column
};
int rgb_forward_patches(ad::Tape& t, const GlimpseConfig& cfg, const RgbBinding& b,
                        const std::vector<GlimpseFrame>& frames, int s_id,
                        const RgbForwardOptions& opt, AttentionTrace* trace = nullptr);

// Grad-free forward from precomputed feature matrices V_t (shape [feat_dim, N]).
ad::Array rgb_logits_eval(const RgbStreamParams& p, const std::vector<ad::Array>& V,
                          const ad::Array& s, RgbVariant variant, AttentionTrace* trace = nullptr);

}  // namespace actrec::rgb

#endif
