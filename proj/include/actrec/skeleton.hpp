#ifndef ACTREC_SKELETON_HPP
#define ACTREC_SKELETON_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "actrec/array.hpp"

namespace actrec::skel {

// Body tree over K joints. The joint order of pose tensor columns is a walk
// over this tree (see build_euler_tour); an explicit tour override in the
// topology file pins the limb visiting order when it matters.
struct SkeletonTopology {
    int joints = 0;
    int root = 0;
    std::vector<std::pair<int, int>> edges;  // parent/child pairs, tree
    std::vector<std::string> names;          // may be empty; else size == joints
    std::vector<int> tour_override;          // optional, length 2*joints

    // Throws unless edges form a connected tree (K-1 edges, acyclic) and root < K.
    void validate() const;
    std::vector<std::vector<int>> adjacency() const;
    int index_of(const std::string& name) const;  // -1 when unknown
};

struct JointObs {
    ad::Real x = 0, y = 0, z = 0;  // meters
    ad::Real px = 0, py = 0;       // pixels, optional
};

// Per-frame, per-person joint observations. Absent persons carry all-zero
// coordinates and a false presence flag.
struct SkeletonSequence {
    int frames = 0;
    int persons = 0;
    int joints = 0;
    std::vector<JointObs> data;      // [frame][person][joint]
    std::vector<uint8_t> present;    // [frame][person]

    SkeletonSequence() = default;
    SkeletonSequence(int f, int p, int k)
        : frames(f), persons(p), joints(k),
          data(static_cast<size_t>(f) * p * k),
          present(static_cast<size_t>(f) * p, 0) {}

    JointObs& at(int f, int p, int k) { return data[(static_cast<size_t>(f) * persons + p) * joints + k]; }
    const JointObs& at(int f, int p, int k) const {
        return data[(static_cast<size_t>(f) * persons + p) * joints + k];
    }
    bool is_present(int f, int p) const { return present[static_cast<size_t>(f) * persons + p] != 0; }
    void set_present(int f, int p, bool v) { present[static_cast<size_t>(f) * persons + p] = v ? 1 : 0; }
};

// Depth-first walk from the root that emits each joint on entry and again after
// each child's subtree returns, plus one extra closing root entry: length 2K,
// every tree edge traversed exactly twice, consecutive entries adjacent except
// the final (equal) closing pair. Children are visited in ascending index order
// unless the topology carries an explicit override.
std::vector<int> build_euler_tour(const SkeletonTopology& topo);

// DFS preorder plus a closing root entry: length K+1. The column layout for the
// "no double entries" ordering ablation.
std::vector<int> build_preorder_tour(const SkeletonTopology& topo);

// Seeded random permutation of the K joints; the random-ordering ablation.
std::vector<int> random_joint_order(const SkeletonTopology& topo, uint64_t seed);

enum class JointOrder { Topological, NoDoubleEntries, Random };
JointOrder parse_joint_order(const std::string& s);
const char* to_string(JointOrder o);
std::vector<int> tour_for_order(const SkeletonTopology& topo, JointOrder order, uint64_t seed);

// Translates every present person's joints to a body-centered frame by
// subtracting person 0's root joint per frame. Pixel coordinates are left
// untouched. A frame with no present person is rejected.
SkeletonSequence normalize_sequence(const SkeletonSequence& seq, const SkeletonTopology& topo);

// Pose tensor X: shape T x W x 3 with W = persons * |tour| * 3. Channel 0 holds
// coordinates laid out in tour order ((x,y,z) in consecutive columns per tour
// entry, person 0's block before person 1's); channel 1 holds first backward
// differences (row 0 zero); channel 2 second differences (rows 0-1 zero).
ad::Array encode_pose_tensor(const SkeletonSequence& seq, const std::vector<int>& tour);

// Splits the video into T equal spans and draws one frame uniformly per span;
// videos shorter than T pad by repeating the last frame. Deterministic in seed.
std::vector<int> sample_subsequence(int video_length, int T, uint64_t seed);

SkeletonSequence slice_frames(const SkeletonSequence& seq, const std::vector<int>& idx);

// Joint name remapping between topologies; targets are either copied from a
// source joint or synthesized as the midpoint of two source joints.
struct JointMapEntry {
    std::string target;
    std::string source_a;
    std::string source_b;  // empty: plain copy; else midpoint of a and b
};
using JointMap = std::vector<JointMapEntry>;

SkeletonSequence remap_topology(const SkeletonSequence& seq, const SkeletonTopology& source,
                                const SkeletonTopology& target, const JointMap& map);

// --- file formats ----------------------------------------------------------
// Topology: `joints=<K> root=<r>`, then `<parent> <child>` edge lines, then
// `name <index> <string>` lines, then an optional `tour <i0> <i1> ...` line.
SkeletonTopology load_topology(const std::string& path);
void save_topology(const std::string& path, const SkeletonTopology& topo);

// Skeleton: header `frames=<T> persons=<P> joints=<K>`, then per frame and
// person one line per joint: `joint_index x y z px py present`.
SkeletonSequence load_skeleton(const std::string& path);
void save_skeleton(const std::string& path, const SkeletonSequence& seq);

// Joint map: lines `<target> = <source>` or `<target> = midpoint <a> <b>`.
JointMap load_joint_map(const std::string& path);

}  // namespace actrec::skel

#endif
