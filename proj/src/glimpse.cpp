#include "actrec/glimpse.hpp"

#include <cmath>
#include <random>

namespace actrec::rgb {

void GlimpseConfig::validate() const {
    if (patch_side <= 0 || patch_channels <= 0 || c1 <= 0 || c2 <= 0 || feat_dim <= 0 ||
        attention_points <= 0 || T <= 0 || lstm_hidden <= 0 || pose_feat_dim <= 0 ||
        spatial_hidden <= 0 || temporal_hidden <= 0 || classes <= 0)
        fail("glimpse config: all extents must be positive");
}

RgbVariant parse_variant(const std::string& s) {
    if (s == "full") return RgbVariant::Full;
    if (s == "spatial") return RgbVariant::SpatialOnly;
    if (s == "sum") return RgbVariant::NoAttentionSum;
    if (s == "concat") return RgbVariant::NoAttentionConcat;
    if (s == "uncond") return RgbVariant::Unconditioned;
    fail("unknown rgb variant '", s, "' (expected full|spatial|sum|concat|uncond)");
}

const char* to_string(RgbVariant v) {
    switch (v) {
        case RgbVariant::Full: return "full";
        case RgbVariant::SpatialOnly: return "spatial";
        case RgbVariant::NoAttentionSum: return "sum";
        case RgbVariant::NoAttentionConcat: return "concat";
        case RgbVariant::Unconditioned: return "uncond";
    }
    return "?";
}

ad::Array crop_glimpse(const Image& img, ad::Real px, ad::Real py, int side, bool valid) {
    ad::Array patch({side, side, img.c > 0 ? img.c : 1});
    if (!valid || img.c == 0) return patch;
    const int cx = static_cast<int>(std::llround(px));
    const int cy = static_cast<int>(std::llround(py));
    const int x0 = cx - side / 2;
    const int y0 = cy - side / 2;
    for (int y = 0; y < side; ++y) {
        const int sy = y0 + y;
        if (sy < 0 || sy >= img.h) continue;
        for (int x = 0; x < side; ++x) {
            const int sx = x0 + x;
            if (sx < 0 || sx >= img.w) continue;
            for (int ch = 0; ch < img.c; ++ch) patch.at(y, x, ch) = img.at(sy, sx, ch);
        }
    }
    return patch;
}

ParamList BackboneParams::all() { return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &fc_w, &fc_b}; }

ParamList MlpParams::all() { return {&w1, &b1, &w2, &b2}; }

ParamList LstmParams::all() {
    return {&w_xi, &w_hi, &b_i, &w_xf, &w_hf, &b_f, &w_xg, &w_hg, &b_g, &w_xo, &w_ho, &b_o};
}

ParamList RgbStreamParams::all() {
    ParamList out = glimpse.all();
    for (Parameter* p : lstm.all()) out.push_back(p);
    for (Parameter* p : sattn.all()) out.push_back(p);
    out.push_back(&u_w);
    out.push_back(&u_b);
    for (Parameter* p : tattn.all()) out.push_back(p);
    out.push_back(&out_w);
    out.push_back(&out_b);
    return out;
}

ParamList RgbStreamParams::theta_g() { return glimpse.all(); }

int RgbStreamParams::lstm_input_dim() const {
    return built_for == RgbVariant::NoAttentionConcat ? cfg.attention_points * cfg.feat_dim
                                                      : cfg.feat_dim;
}

namespace {

ad::Array glorot(ad::Shape s, int fan_in, int fan_out, std::mt19937_64& rng) {
    const ad::Real b = std::sqrt(6.0 / (fan_in + fan_out));
    return ad::Array::uniform(std::move(s), rng, -b, b);
}

MlpParams init_mlp(const std::string& prefix, int in, int hidden, int out, std::mt19937_64& rng) {
    MlpParams m;
    m.w1 = {prefix + ".w1", glorot({hidden, in}, in, hidden, rng)};
    m.b1 = {prefix + ".b1", ad::Array::zeros({hidden})};
    m.w2 = {prefix + ".w2", glorot({out, hidden}, hidden, out, rng)};
    m.b2 = {prefix + ".b2", ad::Array::zeros({out})};
    return m;
}

}  // namespace

RgbStreamParams init_rgb_stream(const GlimpseConfig& cfg, RgbVariant variant, uint64_t seed) {
    cfg.validate();
    RgbStreamParams p;
    p.cfg = cfg;
    p.built_for = variant;
    std::mt19937_64 rng(seed);

    auto he = [&](ad::Shape s, int fan_in) {
        return ad::Array::randn(std::move(s), rng, std::sqrt(2.0 / fan_in));
    };
    const int ch = cfg.patch_channels;
    p.glimpse.conv1_w = {"rgb.glimpse.conv1.w", he({3, 3, ch, cfg.c1}, 9 * ch)};
    p.glimpse.conv1_b = {"rgb.glimpse.conv1.b", ad::Array::zeros({cfg.c1})};
    p.glimpse.conv2_w = {"rgb.glimpse.conv2.w", he({3, 3, cfg.c1, cfg.c2}, 9 * cfg.c1)};
    p.glimpse.conv2_b = {"rgb.glimpse.conv2.b", ad::Array::zeros({cfg.c2})};
    const int flat = cfg.backbone_flat();
    p.glimpse.fc_w = {"rgb.glimpse.fc.w", glorot({cfg.feat_dim, flat}, flat, cfg.feat_dim, rng)};
    p.glimpse.fc_b = {"rgb.glimpse.fc.b", ad::Array::zeros({cfg.feat_dim})};

    const int n = p.lstm_input_dim();
    const int m = cfg.lstm_hidden;
    auto gate_w = [&](const char* name, int rows, int cols) {
        return Parameter{std::string("rgb.lstm.") + name, glorot({rows, cols}, cols, rows, rng)};
    };
    auto gate_b = [&](const char* name, ad::Real fill) {
        return Parameter{std::string("rgb.lstm.") + name, ad::Array::full({m}, fill)};
    };
    p.lstm.w_xi = gate_w("w_xi", m, n);
    p.lstm.w_hi = gate_w("w_hi", m, m);
    p.lstm.b_i = gate_b("b_i", 0.0);
    p.lstm.w_xf = gate_w("w_xf", m, n);
    p.lstm.w_hf = gate_w("w_hf", m, m);
    p.lstm.b_f = gate_b("b_f", 1.0);  // open forget gate at init
    p.lstm.w_xg = gate_w("w_xg", m, n);
    p.lstm.w_hg = gate_w("w_hg", m, m);
    p.lstm.b_g = gate_b("b_g", 0.0);
    p.lstm.w_xo = gate_w("w_xo", m, n);
    p.lstm.w_ho = gate_w("w_ho", m, m);
    p.lstm.b_o = gate_b("b_o", 0.0);

    p.sattn = init_mlp("rgb.sattn", m + cfg.pose_feat_dim, cfg.spatial_hidden,
                       cfg.attention_points, rng);
    p.u_w = {"rgb.u.w", glorot({cfg.d_u(), m}, m, cfg.d_u(), rng)};
    p.u_b = {"rgb.u.b", ad::Array::zeros({cfg.d_u()})};
    p.tattn = init_mlp("rgb.tattn", cfg.attention_points * cfg.T + cfg.pose_feat_dim,
                       cfg.temporal_hidden, cfg.T, rng);
    p.out_w = {"rgb.out.w", glorot({cfg.classes, cfg.d_u()}, cfg.d_u(), cfg.classes, rng)};
    p.out_b = {"rgb.out.b", ad::Array::zeros({cfg.classes})};
    return p;
}

RgbBinding bind_rgb(Binder& bd, const RgbStreamParams& p) {
    auto L = [&](const Parameter& q) { return bd.bind(q); };
    RgbBinding b;
    b.glimpse = {L(p.glimpse.conv1_w), L(p.glimpse.conv1_b), L(p.glimpse.conv2_w),
                 L(p.glimpse.conv2_b), L(p.glimpse.fc_w),    L(p.glimpse.fc_b)};
    b.lstm = {L(p.lstm.w_xi), L(p.lstm.w_hi), L(p.lstm.b_i), L(p.lstm.w_xf),
              L(p.lstm.w_hf), L(p.lstm.b_f),  L(p.lstm.w_xg), L(p.lstm.w_hg),
              L(p.lstm.b_g),  L(p.lstm.w_xo), L(p.lstm.w_ho), L(p.lstm.b_o)};
    b.sattn = {L(p.sattn.w1), L(p.sattn.b1), L(p.sattn.w2), L(p.sattn.b2)};
    b.u_w = L(p.u_w);
    b.u_b = L(p.u_b);
    b.tattn = {L(p.tattn.w1), L(p.tattn.b1), L(p.tattn.w2), L(p.tattn.b2)};
    b.out_w = L(p.out_w);
    b.out_b = L(p.out_b);
    return b;
}

int glimpse_features(ad::Tape& t, const GlimpseConfig& cfg, const BackboneBinding& b,
                     const ad::Array& patch) {
    if (patch.rank() != 3 || patch.dim(0) != cfg.patch_side || patch.dim(1) != cfg.patch_side ||
        patch.dim(2) != cfg.patch_channels)
        fail("glimpse_features: patch ", shape_str(patch.shape), " does not match configured ",
             cfg.patch_side, "x", cfg.patch_side, "x", cfg.patch_channels);
    int x = t.leaf(patch);
    int s1 = t.maxpool2x2(t.relu(t.conv2d(x, b.conv1_w, b.conv1_b, ad::Padding::Same)));
    int s2 = t.maxpool2x2(t.relu(t.conv2d(s1, b.conv2_w, b.conv2_b, ad::Padding::Same)));
    int flat = t.reshape(s2, {t.val(s2).size()});
    return t.affine(b.fc_w, flat, b.fc_b);
}

ad::Array glimpse_features_eval(const RgbStreamParams& p, const ad::Array& patch) {
    ad::Tape t;
    Binder bd(t);
    RgbBinding b = bind_rgb(bd, p);
    return t.val(glimpse_features(t, p.cfg, b.glimpse, patch));
}

int spatial_attention(ad::Tape& t, const MlpBinding& b, int h_prev, int s_id) {
    int in = t.concat(h_prev, s_id);
    int hidden = t.sigmoid(t.affine(b.w1, in, b.b1));
    return t.softmax(t.affine(b.w2, hidden, b.b2), 0);
}

int context_vector(ad::Tape& t, int V_id, int p_id) { return t.matvec(V_id, p_id); }

int temporal_features(ad::Tape& t, int u_w, int u_b, int h_id) {
    return t.relu(t.affine(u_w, h_id, u_b));
}

int temporal_attention(ad::Tape& t, const MlpBinding& b, int P_id, int s_id) {
    int in = t.concat(P_id, s_id);
    int hidden = t.sigmoid(t.affine(b.w1, in, b.b1));
    return t.softmax(t.affine(b.w2, hidden, b.b2), 0);
}

int temporal_pool(ad::Tape& t, int U_id, int p_id) { return t.matvec(U_id, p_id); }

int rgb_forward_columns(ad::Tape& t, const GlimpseConfig& cfg, const RgbBinding& b,
                        const std::vector<FrameColumns>& frames, int s_id,
                        const RgbForwardOptions& opt, AttentionTrace* trace) {
    if (static_cast<int>(frames.size()) != cfg.T)
        fail("rgb_forward: got ", frames.size(), " frames, configured T=", cfg.T);
    const int N = cfg.attention_points;
    for (const FrameColumns& f : frames)
        if (static_cast<int>(f.cols.size()) != N)
            fail("rgb_forward: frame with ", f.cols.size(), " columns, expected N=", N);

    const bool spatial = opt.variant == RgbVariant::Full ||
                         opt.variant == RgbVariant::SpatialOnly ||
                         opt.variant == RgbVariant::Unconditioned;
    const bool temporal =
        opt.variant == RgbVariant::Full || opt.variant == RgbVariant::Unconditioned;
    const bool conditioned = opt.variant != RgbVariant::Unconditioned;

    int s_attn = s_id;
    if (!conditioned) s_attn = t.leaf(ad::Array::zeros({cfg.pose_feat_dim}));

    int h = t.leaf(ad::Array::zeros({cfg.lstm_hidden}));
    int c = t.leaf(ad::Array::zeros({cfg.lstm_hidden}));
    std::vector<int> p_ids;
    std::vector<int> u_ids;
    for (int step = 0; step < cfg.T; ++step) {
        const FrameColumns& f = frames[static_cast<size_t>(step)];
        int context;
        if (spatial) {
            int p;
            if (opt.fixed_spatial) {
                if (static_cast<int>(opt.fixed_spatial->size()) != N)
                    fail("rgb_forward: fixed spatial attention length != N");
                p = t.leaf(ad::Array({N}, *opt.fixed_spatial));
            } else {
                p = spatial_attention(t, b.sattn, h, s_attn);
            }
            p_ids.push_back(p);
            if (trace) trace->spatial.push_back(t.val(p).v);
            int V = t.stack_cols(f.cols);
            context = context_vector(t, V, p);
        } else if (opt.variant == RgbVariant::NoAttentionSum) {
            context = f.cols[0];
            for (int i = 1; i < N; ++i) context = t.add(context, f.cols[static_cast<size_t>(i)]);
        } else {  // concat
            context = f.cols[0];
            for (int i = 1; i < N; ++i) context = t.concat(context, f.cols[static_cast<size_t>(i)]);
        }
        auto [h2, c2] = t.lstm_step(context, h, c, b.lstm);
        h = h2;
        c = c2;
        u_ids.push_back(temporal_features(t, b.u_w, b.u_b, h));
    }

    int U = t.stack_cols(u_ids);
    int pooled;
    if (temporal) {
        int P = p_ids[0];
        for (size_t i = 1; i < p_ids.size(); ++i) P = t.concat(P, p_ids[i]);
        int pt = temporal_attention(t, b.tattn, P, s_attn);
        if (trace) trace->temporal = t.val(pt).v;
        pooled = temporal_pool(t, U, pt);
    } else {
        int uniform = t.leaf(ad::Array::full({cfg.T}, 1.0 / cfg.T));
        if (trace) trace->temporal = t.val(uniform).v;
        pooled = temporal_pool(t, U, uniform);
    }
    if (opt.train && opt.dropout_rate > 0)
        pooled = t.dropout(pooled, opt.dropout_rate, true, opt.dropout_seed);
    return t.affine(b.out_w, pooled, b.out_b);
}

int rgb_forward_patches(ad::Tape& t, const GlimpseConfig& cfg, const RgbBinding& b,
                        const std::vector<GlimpseFrame>& frames, int s_id,
                        const RgbForwardOptions& opt, AttentionTrace* trace) {
    std::vector<FrameColumns> cols(frames.size());
    for (size_t i = 0; i < frames.size(); ++i) {
        const GlimpseFrame& f = frames[i];
        if (f.patches.size() != f.valid.size() ||
            static_cast<int>(f.patches.size()) != cfg.attention_points)
            fail("rgb_forward: frame ", i, " has ", f.patches.size(), " patch slots, expected N=",
                 cfg.attention_points);
        for (int n = 0; n < cfg.attention_points; ++n) {
            if (f.valid[static_cast<size_t>(n)])
                cols[i].cols.push_back(
                    glimpse_features(t, cfg, b.glimpse, f.patches[static_cast<size_t>(n)]));
            else
                cols[i].cols.push_back(t.leaf(ad::Array::zeros({cfg.feat_dim})));
        }
    }
    return rgb_forward_columns(t, cfg, b, cols, s_id, opt, trace);
}

ad::Array rgb_logits_eval(const RgbStreamParams& p, const std::vector<ad::Array>& V,
                          const ad::Array& s, RgbVariant variant, AttentionTrace* trace) {
    ad::Tape t;
    Binder bd(t);
    RgbBinding b = bind_rgb(bd, p);
    std::vector<FrameColumns> frames(V.size());
    for (size_t i = 0; i < V.size(); ++i) {
        const ad::Array& m = V[i];
        if (m.rank() != 2 || m.dim(0) != p.cfg.feat_dim || m.dim(1) != p.cfg.attention_points)
            fail("rgb_logits_eval: V_t must be [", p.cfg.feat_dim, ",", p.cfg.attention_points,
                 "], got ", shape_str(m.shape));
        for (int n = 0; n < m.dim(1); ++n) {
            ad::Array col({m.dim(0)});
            for (int j = 0; j < m.dim(0); ++j) col.at(j) = m.at(j, n);
            frames[i].cols.push_back(t.leaf(std::move(col)));
        }
    }
    RgbForwardOptions opt;
    opt.variant = variant;
    int s_leaf = t.leaf(s);
    return t.val(rgb_forward_columns(t, p.cfg, b, frames, s_leaf, opt, trace));
}

}  // namespace actrec::rgb
