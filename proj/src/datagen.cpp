#include "actrec/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace actrec::data {

namespace fs = std::filesystem;

void SyntheticSpec::validate() const {
    if (classes < 2) fail("synthetic spec: need at least 2 classes, got ", classes);
    if (videos_per_class < 1 || frames < 1) fail("synthetic spec: empty dataset");
    if (motion_templates < 1) fail("synthetic spec: need at least one motion template");
    if (noise_sigma < 0) fail("synthetic spec: noise sigma must be >= 0");
    if (visibility <= 0 || visibility > 1) fail("synthetic spec: visibility must be in (0,1]");
    if (objects < 2) fail("synthetic spec: object vocabulary needs at least 2 entries");
    for (int c = 0; c < classes; ++c)
        if (object_of(c) >= objects)
            fail("synthetic spec: class ", c, " needs object ", object_of(c),
                 " but vocabulary has ", objects);
    topology.validate();
    // the attention-discriminative pairs must exist
    bool has_pair = false;
    for (int a = 0; a < classes && !has_pair; ++a)
        for (int b = a + 1; b < classes && !has_pair; ++b)
            has_pair = a % motion_templates == b % motion_templates &&
                       (active_hand(a) != active_hand(b) || object_of(a) != object_of(b));
    if (!has_pair)
        fail("synthetic spec: no class pair shares a motion template with a different ",
             "hand-object assignment (classes=", classes, ", templates=", motion_templates, ")");
}

std::vector<std::pair<int, int>> hand_slots(const skel::SkeletonTopology& topo) {
    int lh = topo.index_of("left_hand");
    int rh = topo.index_of("right_hand");
    if (lh < 0 || rh < 0) fail("topology must name 'left_hand' and 'right_hand' joints");
    return {{0, lh}, {0, rh}, {1, lh}, {1, rh}};
}

namespace {

struct Vec3 {
    ad::Real x = 0, y = 0, z = 0;
};

// Template-level motion parameters; per-joint values diffuse down the tree so
// neighboring joints move coherently.
struct MotionTemplate {
    ad::Real freq = 1.0;
    std::vector<Vec3> dir;
    std::vector<ad::Real> amp;
    std::vector<ad::Real> phase;
};

std::vector<int> bfs_order(const skel::SkeletonTopology& topo, std::vector<int>& parent) {
    auto adj = topo.adjacency();
    parent.assign(static_cast<size_t>(topo.joints), -1);
    std::vector<int> order{topo.root};
    std::vector<char> seen(static_cast<size_t>(topo.joints), 0);
    seen[static_cast<size_t>(topo.root)] = 1;
    for (size_t i = 0; i < order.size(); ++i)
        for (int v : adj[static_cast<size_t>(order[i])])
            if (!seen[static_cast<size_t>(v)]) {
                seen[static_cast<size_t>(v)] = 1;
                parent[static_cast<size_t>(v)] = order[i];
                order.push_back(v);
            }
    return order;
}

Vec3 random_unit(std::mt19937_64& rng) {
    std::normal_distribution<ad::Real> n(0, 1);
    Vec3 v{n(rng), n(rng), n(rng)};
    ad::Real len = std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z) + 1e-12;
    return {v.x / len, v.y / len, v.z / len};
}

// Rest pose shared by every template of a family.
std::vector<Vec3> base_pose(const SyntheticSpec& spec) {
    std::vector<int> parent;
    auto order = bfs_order(spec.topology, parent);
    std::mt19937_64 rng(derive_seed(spec.template_seed, "base-pose"));
    std::vector<Vec3> base(static_cast<size_t>(spec.topology.joints));
    for (int j : order) {
        if (parent[static_cast<size_t>(j)] < 0) continue;
        Vec3 d = random_unit(rng);
        const Vec3& p = base[static_cast<size_t>(parent[static_cast<size_t>(j)])];
        base[static_cast<size_t>(j)] = {p.x + 0.25 * d.x, p.y + 0.25 * d.y, p.z + 0.25 * d.z};
    }
    return base;
}

MotionTemplate motion_template(const SyntheticSpec& spec, int m) {
    std::mt19937_64 rng(derive_seed(spec.template_seed, "template", static_cast<uint64_t>(m)));
    std::vector<int> parent;
    auto order = bfs_order(spec.topology, parent);
    MotionTemplate t;
    t.freq = 0.8 + 0.45 * (m % 5);
    t.dir.resize(static_cast<size_t>(spec.topology.joints));
    t.amp.resize(static_cast<size_t>(spec.topology.joints));
    t.phase.resize(static_cast<size_t>(spec.topology.joints));
    std::uniform_real_distribution<ad::Real> amp_u(0.05, 0.3);
    std::uniform_real_distribution<ad::Real> jitter(-0.35, 0.35);
    std::uniform_real_distribution<ad::Real> phase0(0, 2 * M_PI);
    for (int j : order) {
        size_t sj = static_cast<size_t>(j);
        int p = parent[sj];
        if (p < 0) {
            t.dir[sj] = random_unit(rng);
            t.amp[sj] = 0.02;  // the root barely moves
            t.phase[sj] = phase0(rng);
            continue;
        }
        // diffuse from the parent so limbs swing together
        Vec3 fresh = random_unit(rng);
        size_t sp = static_cast<size_t>(p);
        Vec3 d{0.75 * t.dir[sp].x + 0.25 * fresh.x, 0.75 * t.dir[sp].y + 0.25 * fresh.y,
               0.75 * t.dir[sp].z + 0.25 * fresh.z};
        ad::Real len = std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z) + 1e-12;
        t.dir[sj] = {d.x / len, d.y / len, d.z / len};
        t.amp[sj] = 0.7 * t.amp[sp] + 0.3 * amp_u(rng);
        t.phase[sj] = t.phase[sp] + jitter(rng);
    }
    return t;
}

}  // namespace

ad::Array render_patch(const SyntheticSpec& spec, int slot, int object) {
    const int S = spec.patch_side, C = spec.patch_channels;
    ad::Array patch({S, S, C});
    // per-slot neutral tint so the glimpse content identifies the hand it came from
    static const ad::Real tint[4][3] = {
        {0.20, 0.20, 0.20}, {0.32, 0.24, 0.18}, {0.18, 0.30, 0.24}, {0.26, 0.18, 0.32}};
    for (int y = 0; y < S; ++y)
        for (int x = 0; x < S; ++x)
            for (int c = 0; c < C; ++c) patch.at(y, x, c) = tint[slot % 4][c % 3];
    if (object < 0) return patch;

    // object identity = shape x color
    static const ad::Real palette[6][3] = {{0.95, 0.15, 0.10}, {0.10, 0.25, 0.95},
                                           {0.15, 0.85, 0.20}, {0.95, 0.85, 0.10},
                                           {0.85, 0.15, 0.90}, {0.10, 0.85, 0.85}};
    const ad::Real* col = palette[object % 6];
    const int shape = object % 4;
    const ad::Real cx = (S - 1) / 2.0, cy = (S - 1) / 2.0, r = S * 0.30;
    for (int y = 0; y < S; ++y)
        for (int x = 0; x < S; ++x) {
            const ad::Real dx = x - cx, dy = y - cy;
            bool inside = false;
            switch (shape) {
                case 0: inside = std::abs(dx) <= r && std::abs(dy) <= r; break;          // square
                case 1: inside = dx * dx + dy * dy <= r * r; break;                      // disc
                case 2: inside = std::abs(dx) + std::abs(dy) <= r * 1.2; break;          // diamond
                case 3:                                                                   // cross
                    inside = (std::abs(dx) <= r * 0.4 && std::abs(dy) <= r) ||
                             (std::abs(dy) <= r * 0.4 && std::abs(dx) <= r);
                    break;
            }
            if (inside)
                for (int c = 0; c < C; ++c) patch.at(y, x, c) = col[c % 3];
        }
    return patch;
}

Sample generate_sample(const SyntheticSpec& spec, int label, uint64_t video_seed) {
    if (label < 0 || label >= spec.classes) fail("generate_sample: label ", label, " out of range");
    const int K = spec.topology.joints;
    const int F = spec.frames;
    const int m = label % spec.motion_templates;
    const int obj = spec.object_of(label);
    const int active = spec.active_hand(label);

    MotionTemplate tpl = motion_template(spec, m);
    std::vector<Vec3> base = base_pose(spec);

    // per-video subject variability: smooth jitter of the template parameters
    std::mt19937_64 jit_rng(derive_seed(video_seed, "jitter"));
    std::uniform_real_distribution<ad::Real> ju(-spec.param_jitter, spec.param_jitter);
    const ad::Real freq = tpl.freq * (1.0 + 0.3 * ju(jit_rng));
    std::vector<ad::Real> amp(static_cast<size_t>(K)), phase(static_cast<size_t>(K));
    for (int j = 0; j < K; ++j) {
        amp[static_cast<size_t>(j)] = tpl.amp[static_cast<size_t>(j)] * (1.0 + ju(jit_rng));
        phase[static_cast<size_t>(j)] = tpl.phase[static_cast<size_t>(j)] + 0.8 * ju(jit_rng);
    }

    std::mt19937_64 trans_rng(derive_seed(video_seed, "translation"));
    std::uniform_real_distribution<ad::Real> tu(-0.5, 0.5);
    const Vec3 world{tu(trans_rng), tu(trans_rng), tu(trans_rng)};

    Sample s;
    s.label = label;
    s.skeleton = skel::SkeletonSequence(F, 2, K);
    const ad::Real omega = 2 * M_PI * freq / 20.0;  // freq cycles per 20 frames
    for (int f = 0; f < F; ++f) {
        std::mt19937_64 noise_rng(derive_seed(video_seed, "noise", static_cast<uint64_t>(f)));
        std::normal_distribution<ad::Real> nd(0.0, spec.noise_sigma);
        for (int p = 0; p < 2; ++p) {
            s.skeleton.set_present(f, p, true);
            const ad::Real person_shift = p == 0 ? 0.0 : 1.2;
            const ad::Real person_phase = p == 0 ? 0.0 : M_PI / 3;
            for (int j = 0; j < K; ++j) {
                size_t sj = static_cast<size_t>(j);
                const ad::Real osc =
                    amp[sj] * std::sin(omega * f + phase[sj] + person_phase);
                skel::JointObs o;
                o.x = world.x + person_shift + base[sj].x + osc * tpl.dir[sj].x + nd(noise_rng);
                o.y = world.y + base[sj].y + osc * tpl.dir[sj].y + nd(noise_rng);
                o.z = world.z + base[sj].z + osc * tpl.dir[sj].z + nd(noise_rng);
                o.px = 160.0 + 100.0 * o.x;
                o.py = 120.0 - 100.0 * o.y;
                s.skeleton.at(f, p, j) = o;
            }
        }
    }

    // visibility window for the carried object
    std::mt19937_64 win_rng(derive_seed(video_seed, "window"));
    const int win_len = std::max(1, static_cast<int>(std::lround(spec.visibility * F)));
    std::uniform_int_distribution<int> wu(0, std::max(0, F - win_len));
    const int w0 = wu(win_rng);
    s.active_hand.assign(static_cast<size_t>(F), -1);
    for (int f = w0; f < std::min(F, w0 + win_len); ++f) s.active_hand[static_cast<size_t>(f)] = active;

    if (spec.with_patches) {
        const int S = spec.patch_side, C = spec.patch_channels, N = 4;
        s.patches.resize(static_cast<size_t>(F) * N * S * S * C);
        for (int f = 0; f < F; ++f) {
            const bool shown = s.active_hand[static_cast<size_t>(f)] >= 0;
            for (int slot = 0; slot < N; ++slot) {
                ad::Array patch =
                    render_patch(spec, slot, shown && slot == active ? obj : -1);
                std::mt19937_64 pix_rng(derive_seed(
                    video_seed, "pixels", static_cast<uint64_t>(f) * N + static_cast<uint64_t>(slot)));
                std::uniform_real_distribution<ad::Real> pn(-spec.pixel_noise, spec.pixel_noise);
                float* dst = s.patches.data() +
                             (static_cast<size_t>(f) * N + static_cast<size_t>(slot)) * S * S * C;
                for (int i = 0; i < patch.size(); ++i) {
                    ad::Real v = std::clamp(patch.at(i) + pn(pix_rng), 0.0, 1.0);
                    dst[i] = static_cast<float>(v);
                }
            }
        }
    }
    return s;
}

Dataset generate_dataset(const SyntheticSpec& spec) {
    spec.validate();
    Dataset ds;
    ds.classes = spec.classes;
    ds.patch_side = spec.patch_side;
    ds.patch_channels = spec.patch_channels;
    ds.topology = spec.topology;
    for (int c = 0; c < spec.classes; ++c)
        for (int i = 0; i < spec.videos_per_class; ++i) {
            uint64_t vseed = derive_seed(spec.seed, "video",
                                         static_cast<uint64_t>(c) * 100000 + static_cast<uint64_t>(i));
            Sample s = generate_sample(spec, c, vseed);
            s.id = cat("c", c, "_v", i);
            ds.samples.push_back(std::move(s));
        }
    return ds;
}

// ---------------------------------------------------------------------------
// persistence

namespace {

void save_patches(const std::string& path, const Sample& s, const Dataset& ds) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail("patches: cannot open '", path, "' for writing");
    const int frames = s.skeleton.frames;
    f << "side=" << ds.patch_side << " channels=" << ds.patch_channels << " frames=" << frames
      << " slots=4 active=";
    for (int i = 0; i < frames; ++i) {
        if (i) f << ',';
        f << s.active_hand[static_cast<size_t>(i)];
    }
    f << '\n';
    // raw little-endian float32, row-major
    for (float v : s.patches) {
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        char b[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                     static_cast<char>((bits >> 16) & 0xff), static_cast<char>((bits >> 24) & 0xff)};
        f.write(b, 4);
    }
}

void load_patches(const std::string& path, Sample& s, int& side, int& channels) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail("patches: cannot open '", path, "'");
    std::string header;
    if (!std::getline(f, header)) fail(path, ":1: empty patch file");
    long long frames = -1, slots = -1;
    std::string active_csv;
    {
        std::istringstream is(header);
        std::string tok;
        long long sd = -1, ch = -1;
        while (is >> tok) {
            if (tok.rfind("side=", 0) == 0) sd = std::stoll(tok.substr(5));
            else if (tok.rfind("channels=", 0) == 0) ch = std::stoll(tok.substr(9));
            else if (tok.rfind("frames=", 0) == 0) frames = std::stoll(tok.substr(7));
            else if (tok.rfind("slots=", 0) == 0) slots = std::stoll(tok.substr(6));
            else if (tok.rfind("active=", 0) == 0) active_csv = tok.substr(7);
            else fail(path, ":1: unknown header field '", tok, "'");
        }
        if (sd < 1 || ch < 1 || frames < 1 || slots != 4)
            fail(path, ":1: bad patch header '", header, "'");
        side = static_cast<int>(sd);
        channels = static_cast<int>(ch);
    }
    s.active_hand.clear();
    {
        std::istringstream is(active_csv);
        std::string tok;
        while (std::getline(is, tok, ',')) s.active_hand.push_back(std::stoi(tok));
        if (static_cast<long long>(s.active_hand.size()) != frames)
            fail(path, ":1: active list has ", s.active_hand.size(), " entries for ", frames,
                 " frames");
    }
    const size_t n = static_cast<size_t>(frames) * 4 * side * side * channels;
    std::vector<unsigned char> raw((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
    if (raw.size() != n * 4)
        fail(path, ": payload is ", raw.size(), " bytes, header implies ", n * 4);
    s.patches.resize(n);
    for (size_t i = 0; i < n; ++i) {
        uint32_t bits = static_cast<uint32_t>(raw[4 * i]) | (static_cast<uint32_t>(raw[4 * i + 1]) << 8) |
                        (static_cast<uint32_t>(raw[4 * i + 2]) << 16) |
                        (static_cast<uint32_t>(raw[4 * i + 3]) << 24);
        float v;
        std::memcpy(&v, &bits, 4);
        s.patches[i] = v;
    }
}

}  // namespace

void save_dataset(const std::string& dir, const Dataset& ds) {
    fs::create_directories(fs::path(dir) / "videos");
    save_topology((fs::path(dir) / "topology.txt").string(), ds.topology);
    std::ofstream mf(fs::path(dir) / "manifest.txt");
    if (!mf) fail("manifest: cannot open '", dir, "/manifest.txt' for writing");
    mf << "classes=" << ds.classes << " patch_side=" << ds.patch_side
       << " patch_channels=" << ds.patch_channels << " topology=topology.txt\n";
    for (const Sample& s : ds.samples) {
        std::string skel_rel = "videos/" + s.id + ".skel";
        std::string patch_rel = s.patches.empty() ? "-" : "videos/" + s.id + ".patch";
        skel::save_skeleton((fs::path(dir) / skel_rel).string(), s.skeleton);
        if (!s.patches.empty()) save_patches((fs::path(dir) / patch_rel).string(), s, ds);
        mf << s.id << ' ' << s.label << ' ' << skel_rel << ' ' << patch_rel << '\n';
    }
}

Dataset load_dataset(const std::string& manifest_path) {
    std::ifstream f(manifest_path);
    if (!f) fail("manifest: cannot open '", manifest_path, "'");
    const fs::path dir = fs::path(manifest_path).parent_path();
    Dataset ds;
    std::string line;
    int line_no = 1;
    if (!std::getline(f, line)) fail(manifest_path, ":1: empty manifest");
    {
        std::istringstream is(line);
        std::string tok, topo_rel;
        while (is >> tok) {
            if (tok.rfind("classes=", 0) == 0) ds.classes = std::stoi(tok.substr(8));
            else if (tok.rfind("patch_side=", 0) == 0) ds.patch_side = std::stoi(tok.substr(11));
            else if (tok.rfind("patch_channels=", 0) == 0)
                ds.patch_channels = std::stoi(tok.substr(15));
            else if (tok.rfind("topology=", 0) == 0) topo_rel = tok.substr(9);
            else fail(manifest_path, ":1: unknown manifest field '", tok, "'");
        }
        if (ds.classes < 1 || topo_rel.empty())
            fail(manifest_path, ":1: bad manifest header '", line, "'");
        ds.topology = skel::load_topology((dir / topo_rel).string());
    }
    std::set<std::string> ids;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream is(line);
        Sample s;
        std::string skel_rel, patch_rel;
        if (!(is >> s.id >> s.label >> skel_rel >> patch_rel))
            fail(manifest_path, ":", line_no, ": malformed manifest line '", line, "'");
        if (!ids.insert(s.id).second)
            fail(manifest_path, ":", line_no, ": duplicate video id '", s.id, "'");
        if (s.label < 0 || s.label >= ds.classes)
            fail(manifest_path, ":", line_no, ": label ", s.label, " outside 0..", ds.classes - 1);
        s.skeleton = skel::load_skeleton((dir / skel_rel).string());
        if (patch_rel != "-") {
            int side = 0, ch = 0;
            load_patches((dir / patch_rel).string(), s, side, ch);
            if (side != ds.patch_side || ch != ds.patch_channels)
                fail(manifest_path, ":", line_no, ": patch geometry ", side, "x", side, "x", ch,
                     " does not match manifest header");
            if (static_cast<int>(s.active_hand.size()) != s.skeleton.frames)
                fail(manifest_path, ":", line_no, ": patch frames != skeleton frames");
        } else {
            s.active_hand.assign(static_cast<size_t>(s.skeleton.frames), -1);
        }
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

}  // namespace actrec::data
