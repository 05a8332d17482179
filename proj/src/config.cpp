#include "actrec/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace actrec::cfg {

namespace {

// The single source of truth for recognized keys.
const std::set<std::string>& registry() {
    static const std::set<std::string> keys = {
        // model
        "classes", "subseq_len", "attention_points", "pose_c1", "pose_c2", "pose_feat_dim",
        "glimpse_patch_side", "glimpse_channels", "glimpse_c1", "glimpse_c2", "glimpse_feat_dim",
        "lstm_hidden", "spatial_hidden", "temporal_hidden", "temporal_feat_dim",
        // training
        "lr", "batch_size", "dropout", "val_fraction", "patience", "max_steps", "eval_every",
        "test_subsequences", "transfer_lr_divisor", "end_to_end", "joint_order",
        // data
        "manifest", "topology", "gen_videos_per_class", "gen_frames", "gen_motion_templates",
        "gen_noise_sigma", "gen_param_jitter", "gen_objects", "gen_pixel_noise", "gen_visibility",
        "gen_with_patches", "gen_template_seed"};
    return keys;
}

}  // namespace

Config Config::full_preset() {
    Config c;
    c.set("classes", "60");
    c.set("subseq_len", "20");
    c.set("attention_points", "4");
    c.set("pose_c1", "32");
    c.set("pose_c2", "64");
    c.set("pose_feat_dim", "1024");
    c.set("glimpse_patch_side", "50");
    c.set("glimpse_channels", "3");
    c.set("glimpse_c1", "16");
    c.set("glimpse_c2", "32");
    c.set("glimpse_feat_dim", "2048");
    c.set("lstm_hidden", "1024");
    c.set("spatial_hidden", "256");
    c.set("temporal_hidden", "512");
    c.set("temporal_feat_dim", "0");
    c.set("lr", "0.0001");
    c.set("batch_size", "64");
    c.set("dropout", "0.5");
    c.set("val_fraction", "0.05");
    c.set("patience", "10");
    c.set("max_steps", "20000");
    c.set("eval_every", "100");
    c.set("test_subsequences", "10");
    c.set("transfer_lr_divisor", "10");
    c.set("end_to_end", "0");
    c.set("joint_order", "topological");
    c.set("manifest", "");
    c.set("topology", "");
    c.set("gen_videos_per_class", "40");
    c.set("gen_frames", "60");
    c.set("gen_motion_templates", "4");
    c.set("gen_noise_sigma", "0.02");
    c.set("gen_param_jitter", "0.15");
    c.set("gen_objects", "6");
    c.set("gen_pixel_noise", "0.05");
    c.set("gen_visibility", "0.4");
    c.set("gen_with_patches", "1");
    c.set("gen_template_seed", "0");
    return c;
}

Config Config::desk_preset() {
    Config c = full_preset();
    c.set("classes", "8");
    c.set("pose_c1", "8");
    c.set("pose_c2", "16");
    c.set("pose_feat_dim", "32");
    c.set("glimpse_patch_side", "32");
    c.set("glimpse_c1", "8");
    c.set("glimpse_c2", "16");
    c.set("glimpse_feat_dim", "64");
    c.set("lstm_hidden", "64");
    c.set("spatial_hidden", "32");
    c.set("temporal_hidden", "32");
    c.set("lr", "0.002");
    c.set("max_steps", "1500");
    c.set("eval_every", "25");
    return c;
}

void Config::set(const std::string& key, const std::string& value) {
    if (!registry().count(key)) fail("config: unknown key '", key, "'");
    kv_[key] = value;
}

void Config::load_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail("config: cannot open '", path, "'");
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::string trimmed;
        for (char ch : line)
            if (!isspace(static_cast<unsigned char>(ch)) || !trimmed.empty()) trimmed += ch;
        while (!trimmed.empty() && isspace(static_cast<unsigned char>(trimmed.back())))
            trimmed.pop_back();
        if (trimmed.empty()) continue;
        auto eq = trimmed.find('=');
        if (eq == std::string::npos)
            fail(path, ":", line_no, ": expected key=value, got '", trimmed, "'");
        std::string key = trimmed.substr(0, eq);
        std::string value = trimmed.substr(eq + 1);
        while (!key.empty() && isspace(static_cast<unsigned char>(key.back()))) key.pop_back();
        size_t vstart = 0;
        while (vstart < value.size() && isspace(static_cast<unsigned char>(value[vstart]))) ++vstart;
        value.erase(0, vstart);
        if (!registry().count(key)) fail(path, ":", line_no, ": unknown key '", key, "'");
        kv_[key] = value;
    }
}

namespace {
const std::string& require(const std::map<std::string, std::string>& kv, const std::string& key) {
    if (!registry().count(key)) fail("config: unknown key '", key, "'");
    auto it = kv.find(key);
    if (it == kv.end()) fail("config: key '", key, "' not set");
    return it->second;
}
}  // namespace

int Config::geti(const std::string& key) const {
    const std::string& v = require(kv_, key);
    try {
        return std::stoi(v);
    } catch (const std::exception&) {
        fail("config: key '", key, "' = '", v, "' is not an integer");
    }
}

ad::Real Config::getr(const std::string& key) const {
    const std::string& v = require(kv_, key);
    try {
        return std::stod(v);
    } catch (const std::exception&) {
        fail("config: key '", key, "' = '", v, "' is not a number");
    }
}

std::string Config::gets(const std::string& key) const { return require(kv_, key); }

bool Config::getb(const std::string& key) const { return geti(key) != 0; }

std::string Config::canonical() const {
    std::ostringstream os;
    for (const auto& [k, v] : kv_) os << k << '=' << v << '\n';
    return os.str();
}

pose::PoseNetConfig Config::pose_config(int tensor_width) const {
    pose::PoseNetConfig p;
    p.T = geti("subseq_len");
    p.W = tensor_width;
    p.c1 = geti("pose_c1");
    p.c2 = geti("pose_c2");
    p.feat_dim = geti("pose_feat_dim");
    p.classes = geti("classes");
    p.validate();
    return p;
}

rgb::GlimpseConfig Config::glimpse_config() const {
    rgb::GlimpseConfig g;
    g.patch_side = geti("glimpse_patch_side");
    g.patch_channels = geti("glimpse_channels");
    g.c1 = geti("glimpse_c1");
    g.c2 = geti("glimpse_c2");
    g.feat_dim = geti("glimpse_feat_dim");
    g.attention_points = geti("attention_points");
    g.T = geti("subseq_len");
    g.lstm_hidden = geti("lstm_hidden");
    g.pose_feat_dim = geti("pose_feat_dim");
    g.spatial_hidden = geti("spatial_hidden");
    g.temporal_hidden = geti("temporal_hidden");
    g.temporal_feat_dim = geti("temporal_feat_dim");
    g.classes = geti("classes");
    g.validate();
    return g;
}

data::SyntheticSpec Config::synthetic_spec(const skel::SkeletonTopology& topo, uint64_t seed) const {
    data::SyntheticSpec s;
    s.classes = geti("classes");
    s.videos_per_class = geti("gen_videos_per_class");
    s.frames = geti("gen_frames");
    s.motion_templates = geti("gen_motion_templates");
    s.topology = topo;
    s.noise_sigma = getr("gen_noise_sigma");
    s.param_jitter = getr("gen_param_jitter");
    s.objects = geti("gen_objects");
    s.patch_side = geti("glimpse_patch_side");
    s.patch_channels = geti("glimpse_channels");
    s.pixel_noise = getr("gen_pixel_noise");
    s.visibility = getr("gen_visibility");
    s.with_patches = getb("gen_with_patches");
    s.template_seed = static_cast<uint64_t>(geti("gen_template_seed"));
    s.seed = seed;
    s.validate();
    return s;
}

}  // namespace actrec::cfg
