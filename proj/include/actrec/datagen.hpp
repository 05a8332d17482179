#ifndef ACTREC_DATAGEN_HPP
#define ACTREC_DATAGEN_HPP

#include <string>
#include <vector>

#include "actrec/array.hpp"
#include "actrec/skeleton.hpp"

namespace actrec::data {

// Synthetic multimodal task. Classes are (motion template, hand-object) pairs:
//   template m(c) = c % motion_templates  -> drives every joint's trajectory
//   active hand H(c) = m(c) % 4           -> which hand slot carries the object
//   object o(c) = c / motion_templates    -> which object it carries
// Classes sharing a template differ only in the object on the active hand, so
// they are indistinguishable from pose alone: the attention-discriminative
// pairs. The object is visible only inside a per-video window (`visibility`
// fraction of frames); all other hand slots always show their neutral patch.
struct SyntheticSpec {
    int classes = 8;
    int videos_per_class = 40;
    int frames = 60;
    int motion_templates = 4;
    skel::SkeletonTopology topology;  // needs left_hand / right_hand joint names
    ad::Real noise_sigma = 0.01;      // iid joint noise, meters
    ad::Real param_jitter = 0.15;     // per-video template parameter variability
    int objects = 6;                  // object vocabulary size (>= distinct o(c))
    int patch_side = 32;
    int patch_channels = 3;
    ad::Real pixel_noise = 0.05;
    ad::Real visibility = 0.4;        // fraction of frames with the object shown
    bool with_patches = true;
    uint64_t template_seed = 0;       // class-definition family; change for a disjoint class set
    uint64_t seed = 1;

    void validate() const;
    int active_hand(int label) const { return (label % motion_templates) % 4; }
    int object_of(int label) const { return label / motion_templates; }
};

struct Sample {
    std::string id;
    int label = -1;
    skel::SkeletonSequence skeleton;
    // [frame][slot][y][x][c], float-quantized so disk round trips are exact
    std::vector<float> patches;
    std::vector<int> active_hand;  // per frame; -1 outside the visibility window
    // filled by the glimpse feature pass: {frames, slots, feat_dim}
    ad::Array glimpse_feats;

    int patch_offset(int frame, int slot, int side, int channels, int slots) const {
        return ((frame * slots + slot) * side) * side * channels;
    }
};

struct Dataset {
    int classes = 0;
    int patch_side = 0;
    int patch_channels = 0;
    skel::SkeletonTopology topology;
    std::vector<Sample> samples;
    // hash of the backbone parameters the glimpse_feats were computed with
    uint64_t feats_fingerprint = 0;
};

// The four attention points: (person, joint) of both hands of both persons.
std::vector<std::pair<int, int>> hand_slots(const skel::SkeletonTopology& topo);

// One video; deterministic in video_seed alone (given the spec), so generation
// is parallelizable per video and paired classes can be compared draw-for-draw.
Sample generate_sample(const SyntheticSpec& spec, int label, uint64_t video_seed);

Dataset generate_dataset(const SyntheticSpec& spec);

// Renders one patch: per-slot neutral background, optionally an object, no noise.
ad::Array render_patch(const SyntheticSpec& spec, int slot, int object /*-1 = neutral*/);

// Manifest: one line per sample `id class skeleton_path patches_path` with paths
// relative to the manifest; patches_path `-` when patches were not generated.
void save_dataset(const std::string& dir, const Dataset& ds);
Dataset load_dataset(const std::string& manifest_path);

}  // namespace actrec::data

#endif
