#ifndef RRNN_PIPELINE_HPP_
#define RRNN_PIPELINE_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rrnn/bptt.hpp"
#include "rrnn/eval.hpp"
#include "rrnn/optim.hpp"
#include "rrnn/protocols.hpp"

namespace rrnn {

enum class Task { pose, video };

std::string_view to_string(Task task);
Task parse_task(std::string_view name);

struct TaskConfig {
    TrainConfig train;
    std::size_t clip_len = 10;
    // Train on frontal inputs too (their targets are all frontal).
    bool include_frontal = true;

    // pose: α = 0.1, β = 0.  video: α = 0, β = 1.
    static TaskConfig defaults(Task task);
};

struct TrainedModel {
    Task task = Task::pose;
    ModelParams params;
    Normalizer norm;
    // Class name for every row of the head; empty without a head.
    std::vector<std::string> labels;
    TaskConfig config;
    // Not persisted.
    TrainHistory history;
};

std::vector<SequenceSample> pose_training_samples(std::span<const SubjectPoseSet> sets,
                                                  const Normalizer& norm, bool include_frontal,
                                                  const LabelIndex* labels = nullptr);

TrainedModel train_pose_model(std::span<const SubjectPoseSet> train_sets, const TaskConfig& cfg,
                              const EpochCallback& on_epoch = {});

// The head always has one row per training subject, so with β = 0 it stays
// at its initial value.
TrainedModel train_video_model(std::span<const VideoTrack> train_tracks, const TaskConfig& cfg,
                               const EpochCallback& on_epoch = {});

VideoClassifier video_classifier(const TrainedModel& model);

inline constexpr const char* kModelHeader = "rrnn-model v1";

void write_model(std::ostream& out, const TrainedModel& model);
TrainedModel read_model(std::istream& in);
void save_model(const std::string& path, const TrainedModel& model);
TrainedModel load_model(const std::string& path);

struct GradCheckOptions {
    std::size_t input_dim = 3;
    std::size_t hidden_dim = 4;
    std::size_t classes = 3;
    std::size_t steps = 4;
    std::uint64_t seed = 1;
    double step = 1e-5;
    double tolerance = 1e-4;
    // Adds 1 to the first entry of the named gradient block before checking.
    std::optional<std::string> corrupt;
};

struct GradCheckCase {
    double alpha = 0.0;
    double beta = 0.0;
    GradCheckResult result;
};

struct GradCheckSummary {
    std::vector<GradCheckCase> cases;
    std::size_t worst = 0;
    bool passed = false;
};

// A random model and sample of the requested shape.
struct GradCheckProblem {
    ModelParams params;
    SequenceSample sample;
};
GradCheckProblem random_problem(std::size_t d, std::size_t h, std::size_t c, std::size_t steps,
                                std::uint64_t seed);

// Checks every (α, β) ∈ {0, 0.1, 1}².
GradCheckSummary run_gradcheck(const GradCheckOptions& options);
std::string format_gradcheck(const GradCheckSummary& summary);

struct AblationOptions {
    std::vector<double> alphas;
    std::vector<double> betas;
    std::size_t k = 1;
    Metric metric = Metric::euclidean;
    std::size_t gallery_pose = PoseGrid::kFrontal;
    VideoProtocol video;
};

struct AblationRow {
    double alpha = 0.0;
    double beta = 0.0;
    double mean = 0.0;
    double stddev = 0.0;
    std::optional<PoseReport> pose;
};

struct AblationReport {
    Task task = Task::pose;
    std::vector<AblationRow> rows;
    // Raw-feature nearest neighbor, pose task only.
    std::optional<PoseReport> raw_baseline;
};

// Every (α, β) grid point is trained from the same seed.
AblationReport run_pose_ablation(const PoseDataset& data, const TaskConfig& base,
                                 const AblationOptions& options);
AblationReport run_video_ablation(std::span<const VideoTrack> tracks, const TaskConfig& base,
                                  const AblationOptions& options);
std::string format_ablation(const AblationReport& report);
std::string ablation_records(const AblationReport& report);

}  // namespace rrnn

#endif  // RRNN_PIPELINE_HPP_
