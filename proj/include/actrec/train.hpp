#ifndef ACTREC_TRAIN_HPP
#define ACTREC_TRAIN_HPP

#include <optional>
#include <string>
#include <vector>

#include "actrec/datagen.hpp"
#include "actrec/glimpse.hpp"
#include "actrec/posenet.hpp"

namespace actrec::train {

enum class Stage { Pose, Rgb };
enum class Stream { Pose, Rgb, Fused };
Stream parse_stream(const std::string& s);
const char* to_string(Stream s);

struct TrainConfig {
    Stage stage = Stage::Pose;
    rgb::RgbVariant variant = rgb::RgbVariant::Full;
    skel::JointOrder joint_order = skel::JointOrder::Topological;
    bool end_to_end = false;  // ablation: joint training with nothing frozen

    ad::Real lr = 1e-4;
    int batch_size = 64;
    ad::Real dropout = 0.5;
    ad::Real val_fraction = 0.05;
    int patience = 10;  // early-stopping rounds without validation improvement
    int max_steps = 2000;
    int eval_every = 25;
    int subseq_len = 20;       // T
    int test_subsequences = 10;
    ad::Real transfer_lr_divisor = 10.0;
    uint64_t seed = 1;

    std::string canonical() const;
    uint64_t hash() const { return fnv1a64(canonical()); }
};

// Both streams plus the column layout their pose tensors were built with.
// The tour is part of the model: evaluation must encode inputs identically.
struct ModelParams {
    std::optional<pose::PoseNetParams> pose;
    std::optional<rgb::RgbStreamParams> rgb;
    std::vector<int> tour;

    ParamList all();
    int classes() const;
};

void save_model(const std::string& path, const ModelParams& m);
ModelParams load_model(const std::string& path);

struct TrainLogEntry {
    long long step;
    ad::Real loss, train_acc, val_acc;
};

struct TrainLog {
    std::vector<TrainLogEntry> entries;
    std::vector<std::string> train_ids, val_ids;
    ad::Real best_val = -1;
    long long best_step = 0;
    long long steps_run = 0;
    std::string to_text() const;  // lines: step loss train_acc val_acc
};

struct StageResult {
    ModelParams model;
    TrainLog log;
};

// Elementwise logit-level fusion of the two streams.
ad::Array fuse_logits(const ad::Array& pose_logits, const ad::Array& rgb_logits);

// Runs the glimpse backbone over every patch of every sample, storing
// {frames, 4, feat_dim} per sample. A slot whose person is absent in a frame
// gets a zero column. Patches can be dropped afterwards to cap memory.
void precompute_glimpse_features(data::Dataset& ds, const rgb::RgbStreamParams& params,
                                 bool drop_patches);

// Pose stage: trains the conv pose stream + its class layer with Adam and
// cross-entropy, one freshly sampled subsequence per video per epoch, an
// internal validation split for early stopping (best weights restored).
StageResult train_pose_stage(const data::Dataset& ds, pose::PoseNetConfig cfg,
                             const TrainConfig& tc);

// RGB stage: requires the pose checkpoint; trains attention, LSTM, temporal
// and output parameters with the pose stream and glimpse backbone frozen.
// With end_to_end set, everything trains jointly through the patches.
StageResult train_rgb_stage(data::Dataset& ds, const ModelParams& pose_model,
                            rgb::GlimpseConfig cfg, const TrainConfig& tc);

struct EvalReport {
    std::string stream, variant, order;
    uint64_t seed = 0;
    uint64_t config_hash = 0;
    int classes = 0, total = 0;
    std::vector<std::vector<int>> confusion;  // [true][predicted]
    std::vector<ad::Real> per_class_acc;
    ad::Real overall = 0;
    std::string to_text() const;
};

// Per video: draws test_subsequences seeded subsequences, averages the
// requested stream's logits (fused = pose + rgb), predicts the argmax with
// ties broken toward the lowest class index.
EvalReport evaluate(data::Dataset& ds, const ModelParams& model, const TrainConfig& tc,
                    Stream stream);

// Spatial attention argmax vs. the generator's ground-truth active hand over
// discriminative frames of the drawn subsequences. Returns hit fraction.
ad::Real attention_localization(data::Dataset& ds, const ModelParams& model,
                                const TrainConfig& tc);

// Initializes a model for `target_classes` from a source checkpoint: class
// output layers are re-initialized when the class count differs, everything
// trains at lr / transfer_lr_divisor. The target dataset must already be
// expressed in the model's topology (see remap_dataset).
StageResult transfer_finetune(const ModelParams& source, const data::Dataset& target,
                              const TrainConfig& tc);

data::Dataset remap_dataset(const data::Dataset& ds, const skel::SkeletonTopology& model_topo,
                            const skel::JointMap& map);

struct AblationRow {
    std::string group, name;
    EvalReport report;
};

// The declared comparison matrix: three joint orders on the pose stream, four
// RGB variants, conditioned vs unconditioned attention, and the three streams,
// all under identical seeds. 12 rows, never silently skipped.
std::vector<AblationRow> run_ablation_matrix(data::Dataset& ds, pose::PoseNetConfig pose_cfg,
                                             rgb::GlimpseConfig glimpse_cfg, const TrainConfig& tc);
std::string ablation_table(const std::vector<AblationRow>& rows);

// One record per sequence: id, per-step spatial distributions, the temporal
// distribution, predicted and true class.
std::string export_traces(data::Dataset& ds, const ModelParams& model, const TrainConfig& tc);

// Deterministic split helper (stratified by class).
void split_dataset(const data::Dataset& ds, ad::Real test_fraction, uint64_t seed,
                   std::vector<int>& train_idx, std::vector<int>& test_idx);
data::Dataset subset(const data::Dataset& ds, const std::vector<int>& idx);

}  // namespace actrec::train

#endif
