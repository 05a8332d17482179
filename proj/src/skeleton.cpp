#include "actrec/skeleton.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace actrec::skel {

std::vector<std::vector<int>> SkeletonTopology::adjacency() const {
    std::vector<std::vector<int>> adj(static_cast<size_t>(joints));
    for (auto [a, b] : edges) {
        if (a < 0 || a >= joints || b < 0 || b >= joints)
            fail("topology: edge (", a, ",", b, ") references joint outside 0..", joints - 1);
        adj[static_cast<size_t>(a)].push_back(b);
        adj[static_cast<size_t>(b)].push_back(a);
    }
    for (auto& n : adj) std::sort(n.begin(), n.end());
    return adj;
}

void SkeletonTopology::validate() const {
    if (joints <= 0) fail("topology: joint count must be positive");
    if (root < 0 || root >= joints) fail("topology: root ", root, " outside 0..", joints - 1);
    if (static_cast<int>(edges.size()) != joints - 1)
        fail("topology: ", edges.size(), " edges cannot form a tree over ", joints, " joints");
    auto adj = adjacency();
    std::vector<char> seen(static_cast<size_t>(joints), 0);
    std::vector<int> stack{root};
    seen[static_cast<size_t>(root)] = 1;
    int visited = 0;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        ++visited;
        for (int v : adj[static_cast<size_t>(u)])
            if (!seen[static_cast<size_t>(v)]) {
                seen[static_cast<size_t>(v)] = 1;
                stack.push_back(v);
            }
    }
    if (visited != joints) fail("topology: joint graph is disconnected or cyclic");
    if (!names.empty() && static_cast<int>(names.size()) != joints)
        fail("topology: ", names.size(), " names for ", joints, " joints");
    if (!tour_override.empty() && static_cast<int>(tour_override.size()) != 2 * joints)
        fail("topology: tour override length ", tour_override.size(), ", expected ", 2 * joints);
}

int SkeletonTopology::index_of(const std::string& name) const {
    for (size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    return -1;
}

namespace {

// Shared DFS walker; `emit_on_return` switches between the Euler tour and preorder.
std::vector<int> dfs_tour(const SkeletonTopology& topo, bool emit_on_return) {
    auto adj = topo.adjacency();
    std::vector<int> tour;
    struct Frame {
        int node, parent;
        size_t next_child;
    };
    std::vector<Frame> stack{{topo.root, -1, 0}};
    tour.push_back(topo.root);
    while (!stack.empty()) {
        Frame& f = stack.back();
        auto& nbrs = adj[static_cast<size_t>(f.node)];
        bool descended = false;
        while (f.next_child < nbrs.size()) {
            int c = nbrs[f.next_child++];
            if (c == f.parent) continue;
            stack.push_back({c, f.node, 0});
            tour.push_back(c);
            descended = true;
            break;
        }
        if (!descended) {
            stack.pop_back();
            if (emit_on_return && !stack.empty()) tour.push_back(stack.back().node);
        }
    }
    return tour;
}

}  // namespace

std::vector<int> build_euler_tour(const SkeletonTopology& topo) {
    topo.validate();
    if (!topo.tour_override.empty()) return topo.tour_override;
    std::vector<int> tour = dfs_tour(topo, /*emit_on_return=*/true);  // 2K-1 entries
    tour.push_back(topo.root);                                        // close: length 2K
    return tour;
}

std::vector<int> build_preorder_tour(const SkeletonTopology& topo) {
    topo.validate();
    std::vector<int> tour = dfs_tour(topo, /*emit_on_return=*/false);  // K entries
    tour.push_back(topo.root);                                         // K+1
    return tour;
}

std::vector<int> random_joint_order(const SkeletonTopology& topo, uint64_t seed) {
    topo.validate();
    std::vector<int> order(static_cast<size_t>(topo.joints));
    for (int i = 0; i < topo.joints; ++i) order[static_cast<size_t>(i)] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

JointOrder parse_joint_order(const std::string& s) {
    if (s == "topological") return JointOrder::Topological;
    if (s == "no-double") return JointOrder::NoDoubleEntries;
    if (s == "random") return JointOrder::Random;
    fail("unknown joint order '", s, "' (expected topological|no-double|random)");
}

const char* to_string(JointOrder o) {
    switch (o) {
        case JointOrder::Topological: return "topological";
        case JointOrder::NoDoubleEntries: return "no-double";
        case JointOrder::Random: return "random";
    }
    return "?";
}

std::vector<int> tour_for_order(const SkeletonTopology& topo, JointOrder order, uint64_t seed) {
    switch (order) {
        case JointOrder::Topological: return build_euler_tour(topo);
        case JointOrder::NoDoubleEntries: return build_preorder_tour(topo);
        case JointOrder::Random: return random_joint_order(topo, seed);
    }
    fail("tour_for_order: bad order");
}

SkeletonSequence normalize_sequence(const SkeletonSequence& seq, const SkeletonTopology& topo) {
    topo.validate();
    if (seq.joints != topo.joints)
        fail("normalize: sequence has ", seq.joints, " joints, topology ", topo.joints);
    SkeletonSequence out = seq;
    for (int f = 0; f < seq.frames; ++f) {
        bool any = false;
        for (int p = 0; p < seq.persons; ++p) any = any || seq.is_present(f, p);
        if (!any) fail("normalize: no person present in frame ", f);
        const JointObs origin = seq.at(f, 0, topo.root);
        for (int p = 0; p < seq.persons; ++p) {
            if (!seq.is_present(f, p)) continue;  // absent persons stay all-zero
            for (int k = 0; k < seq.joints; ++k) {
                JointObs& j = out.at(f, p, k);
                j.x -= origin.x;
                j.y -= origin.y;
                j.z -= origin.z;
            }
        }
    }
    return out;
}

ad::Array encode_pose_tensor(const SkeletonSequence& seq, const std::vector<int>& tour) {
    for (int j : tour)
        if (j < 0 || j >= seq.joints) fail("encode: tour references joint ", j, " >= ", seq.joints);
    const int T = seq.frames;
    const int L = static_cast<int>(tour.size());
    const int W = seq.persons * L * 3;
    ad::Array X({T, W, 3});
    for (int t = 0; t < T; ++t) {
        for (int p = 0; p < seq.persons; ++p) {
            for (int e = 0; e < L; ++e) {
                const JointObs& j = seq.at(t, p, tour[static_cast<size_t>(e)]);
                const int col = (p * L + e) * 3;
                X.at(t, col + 0, 0) = j.x;
                X.at(t, col + 1, 0) = j.y;
                X.at(t, col + 2, 0) = j.z;
            }
        }
    }
    // velocities: first backward difference, row 0 zero
    for (int t = 1; t < T; ++t)
        for (int w = 0; w < W; ++w) X.at(t, w, 1) = X.at(t, w, 0) - X.at(t - 1, w, 0);
    // accelerations: backward difference of velocities, rows 0-1 zero
    for (int t = 2; t < T; ++t)
        for (int w = 0; w < W; ++w) X.at(t, w, 2) = X.at(t, w, 1) - X.at(t - 1, w, 1);
    return X;
}

std::vector<int> sample_subsequence(int video_length, int T, uint64_t seed) {
    if (T <= 0) fail("sample_subsequence: T must be positive, got ", T);
    if (video_length < 1) fail("sample_subsequence: empty video");
    std::vector<int> idx(static_cast<size_t>(T));
    if (video_length <= T) {
        for (int i = 0; i < T; ++i) idx[static_cast<size_t>(i)] = std::min(i, video_length - 1);
        return idx;
    }
    std::mt19937_64 rng(seed);
    for (int i = 0; i < T; ++i) {
        const int lo = static_cast<int>(static_cast<long long>(i) * video_length / T);
        const int hi = static_cast<int>(static_cast<long long>(i + 1) * video_length / T);
        std::uniform_int_distribution<int> u(lo, hi - 1);
        idx[static_cast<size_t>(i)] = u(rng);
    }
    return idx;
}

SkeletonSequence slice_frames(const SkeletonSequence& seq, const std::vector<int>& idx) {
    SkeletonSequence out(static_cast<int>(idx.size()), seq.persons, seq.joints);
    for (size_t i = 0; i < idx.size(); ++i) {
        int f = idx[i];
        if (f < 0 || f >= seq.frames) fail("slice_frames: index ", f, " outside 0..", seq.frames - 1);
        for (int p = 0; p < seq.persons; ++p) {
            out.set_present(static_cast<int>(i), p, seq.is_present(f, p));
            for (int k = 0; k < seq.joints; ++k) out.at(static_cast<int>(i), p, k) = seq.at(f, p, k);
        }
    }
    return out;
}

SkeletonSequence remap_topology(const SkeletonSequence& seq, const SkeletonTopology& source,
                                const SkeletonTopology& target, const JointMap& map) {
    source.validate();
    target.validate();
    if (seq.joints != source.joints)
        fail("remap: sequence joints ", seq.joints, " vs source topology ", source.joints);
    struct Resolved {
        int a = -1, b = -1;  // b >= 0 means midpoint
    };
    std::vector<Resolved> res(static_cast<size_t>(target.joints), Resolved{});
    std::vector<char> covered(static_cast<size_t>(target.joints), 0);
    for (const JointMapEntry& e : map) {
        int ti = target.index_of(e.target);
        if (ti < 0) fail("remap: map entry for unknown target joint '", e.target, "'");
        int a = source.index_of(e.source_a);
        if (a < 0) fail("remap: unknown source joint '", e.source_a, "'");
        int b = -1;
        if (!e.source_b.empty()) {
            b = source.index_of(e.source_b);
            if (b < 0) fail("remap: unknown source joint '", e.source_b, "'");
        }
        res[static_cast<size_t>(ti)] = {a, b};
        covered[static_cast<size_t>(ti)] = 1;
    }
    for (int k = 0; k < target.joints; ++k)
        if (!covered[static_cast<size_t>(k)])
            fail("remap: target joint '",
                 target.names.empty() ? std::to_string(k) : target.names[static_cast<size_t>(k)],
                 "' has no mapping");

    SkeletonSequence out(seq.frames, seq.persons, target.joints);
    for (int f = 0; f < seq.frames; ++f)
        for (int p = 0; p < seq.persons; ++p) {
            out.set_present(f, p, seq.is_present(f, p));
            if (!seq.is_present(f, p)) continue;
            for (int k = 0; k < target.joints; ++k) {
                const Resolved& r = res[static_cast<size_t>(k)];
                JointObs j = seq.at(f, p, r.a);
                if (r.b >= 0) {
                    const JointObs& o = seq.at(f, p, r.b);
                    j.x = (j.x + o.x) / 2;
                    j.y = (j.y + o.y) / 2;
                    j.z = (j.z + o.z) / 2;
                    j.px = (j.px + o.px) / 2;
                    j.py = (j.py + o.py) / 2;
                }
                out.at(f, p, k) = j;
            }
        }
    return out;
}

// ---------------------------------------------------------------------------
// file formats

namespace {

[[noreturn]] void file_fail(const std::string& path, int line_no, const std::string& what) {
    fail(path, ":", line_no, ": ", what);
}

bool parse_kv(const std::string& token, const std::string& key, long long& out) {
    if (token.rfind(key + "=", 0) != 0) return false;
    try {
        out = std::stoll(token.substr(key.size() + 1));
    } catch (const std::exception&) {
        return false;
    }
    return true;
}

}  // namespace

SkeletonTopology load_topology(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail("topology: cannot open '", path, "'");
    SkeletonTopology topo;
    std::string line;
    int line_no = 0;
    if (!std::getline(f, line)) file_fail(path, 1, "empty topology file");
    ++line_no;
    {
        std::istringstream is(line);
        std::string t1, t2;
        is >> t1 >> t2;
        long long k = -1, r = -1;
        if (!parse_kv(t1, "joints", k) || !parse_kv(t2, "root", r))
            file_fail(path, line_no, "expected 'joints=<K> root=<r>', got '" + line + "'");
        topo.joints = static_cast<int>(k);
        topo.root = static_cast<int>(r);
    }
    if (topo.joints <= 0) file_fail(path, line_no, "joint count must be positive");
    topo.names.assign(static_cast<size_t>(topo.joints), "");
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream is(line);
        std::string first;
        is >> first;
        if (first == "name") {
            int idx;
            std::string nm;
            if (!(is >> idx >> nm) || idx < 0 || idx >= topo.joints)
                file_fail(path, line_no, "bad name line '" + line + "'");
            topo.names[static_cast<size_t>(idx)] = nm;
        } else if (first == "tour") {
            int v;
            while (is >> v) topo.tour_override.push_back(v);
        } else {
            std::istringstream es(line);
            int a, b;
            if (!(es >> a >> b)) file_fail(path, line_no, "bad edge line '" + line + "'");
            topo.edges.emplace_back(a, b);
        }
    }
    bool any_name = false;
    for (const auto& n : topo.names) any_name = any_name || !n.empty();
    if (!any_name) topo.names.clear();
    topo.validate();
    return topo;
}

void save_topology(const std::string& path, const SkeletonTopology& topo) {
    topo.validate();
    std::ofstream f(path);
    if (!f) fail("topology: cannot open '", path, "' for writing");
    f << "joints=" << topo.joints << " root=" << topo.root << '\n';
    for (auto [a, b] : topo.edges) f << a << ' ' << b << '\n';
    for (size_t i = 0; i < topo.names.size(); ++i)
        if (!topo.names[i].empty()) f << "name " << i << ' ' << topo.names[i] << '\n';
    if (!topo.tour_override.empty()) {
        f << "tour";
        for (int v : topo.tour_override) f << ' ' << v;
        f << '\n';
    }
}

SkeletonSequence load_skeleton(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail("skeleton: cannot open '", path, "'");
    std::string line;
    int line_no = 0;
    if (!std::getline(f, line)) file_fail(path, 1, "empty skeleton file");
    ++line_no;
    long long frames = -1, persons = -1, joints = -1;
    {
        std::istringstream is(line);
        std::string t1, t2, t3;
        is >> t1 >> t2 >> t3;
        if (!parse_kv(t1, "frames", frames) || !parse_kv(t2, "persons", persons) ||
            !parse_kv(t3, "joints", joints))
            file_fail(path, line_no, "expected 'frames=<T> persons=<P> joints=<K>'");
    }
    if (frames < 1 || persons < 1 || persons > 2 || joints < 1)
        file_fail(path, line_no, "bad header values '" + line + "'");
    SkeletonSequence seq(static_cast<int>(frames), static_cast<int>(persons),
                         static_cast<int>(joints));
    for (int fr = 0; fr < seq.frames; ++fr)
        for (int p = 0; p < seq.persons; ++p) {
            bool person_present = false;
            for (int k = 0; k < seq.joints; ++k) {
                if (!std::getline(f, line))
                    file_fail(path, line_no + 1,
                              cat("truncated: expected ", frames, " frames x ", persons,
                                  " persons x ", joints, " joint lines"));
                ++line_no;
                std::istringstream is(line);
                int ji;
                JointObs j;
                int present;
                if (!(is >> ji >> j.x >> j.y >> j.z >> j.px >> j.py >> present))
                    file_fail(path, line_no, "malformed joint line '" + line + "'");
                if (ji != k) file_fail(path, line_no, cat("expected joint index ", k, ", got ", ji));
                seq.at(fr, p, k) = j;
                person_present = person_present || present != 0;
            }
            seq.set_present(fr, p, person_present);
        }
    return seq;
}

void save_skeleton(const std::string& path, const SkeletonSequence& seq) {
    std::ofstream f(path);
    if (!f) fail("skeleton: cannot open '", path, "' for writing");
    f << "frames=" << seq.frames << " persons=" << seq.persons << " joints=" << seq.joints << '\n';
    f << std::setprecision(17);
    for (int fr = 0; fr < seq.frames; ++fr)
        for (int p = 0; p < seq.persons; ++p) {
            const int present = seq.is_present(fr, p) ? 1 : 0;
            for (int k = 0; k < seq.joints; ++k) {
                const JointObs& j = seq.at(fr, p, k);
                f << k << ' ' << j.x << ' ' << j.y << ' ' << j.z << ' ' << j.px << ' ' << j.py << ' '
                  << present << '\n';
            }
        }
}

JointMap load_joint_map(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail("joint map: cannot open '", path, "'");
    JointMap map;
    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream is(line);
        JointMapEntry e;
        std::string eq, kind;
        is >> e.target >> eq >> kind;
        if (eq != "=") file_fail(path, line_no, "expected '<target> = ...', got '" + line + "'");
        if (kind == "midpoint") {
            if (!(is >> e.source_a >> e.source_b))
                file_fail(path, line_no, "midpoint needs two source joints");
        } else {
            e.source_a = kind;
        }
        map.push_back(std::move(e));
    }
    return map;
}

}  // namespace actrec::skel
