#ifndef RRNN_EVAL_HPP_
#define RRNN_EVAL_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rrnn/model.hpp"
#include "rrnn/protocols.hpp"

namespace rrnn {

struct Embedding {
    Vector vector;
    std::string source_id;
};

// Mean of the hidden states over the sequence.
Embedding embed(const SequenceSample& sample, const ModelParams& p, std::string source_id = {});

enum class Metric { euclidean, cosine };

Metric parse_metric(std::string_view name);
double distance(const Vector& a, const Vector& b, Metric metric);

struct GalleryEntry {
    Vector embedding;
    std::string label;
};

// Majority label among the k nearest gallery entries. Ties go to the label
// with the smaller mean distance among those neighbors, then to the smaller
// label.
std::string knn_classify(std::span<const GalleryEntry> gallery, const Vector& probe,
                         std::size_t k, Metric metric = Metric::euclidean);

// Maps a raw image feature to the vector used for matching.
using FeatureEmbedder = std::function<Vector(const Vector&)>;

FeatureEmbedder model_embedder(ModelParams params, Normalizer norm);
FeatureEmbedder raw_embedder();

struct PoseReport {
    std::size_t gallery_pose = PoseGrid::kFrontal;
    // Accuracy per probe pose; empty for the gallery pose.
    std::array<std::optional<double>, PoseGrid::kCount> per_pose{};
    std::array<std::size_t, PoseGrid::kCount> probes{};
    // Mean of the per-pose accuracies.
    double average = 0.0;
};

using CrossPoseReport = std::array<PoseReport, PoseGrid::kCount>;

// Gallery: the first image at `gallery_pose` of every subject. Probes: every
// image at any other pose.
PoseReport pose_experiment(std::span<const SubjectPoseSet> test_sets, std::size_t gallery_pose,
                           const FeatureEmbedder& embedder, std::size_t k = 1,
                           Metric metric = Metric::euclidean);

CrossPoseReport cross_pose_experiment(std::span<const SubjectPoseSet> test_sets,
                                      const FeatureEmbedder& embedder, std::size_t k = 1,
                                      Metric metric = Metric::euclidean);

// Mean class posterior over every timestep of every clip.
Vector video_score(std::span<const SequenceSample> clips, const ModelParams& p);
std::size_t predict_class(const Vector& score);

// Components needed to classify a raw video track.
struct VideoClassifier {
    ModelParams params;
    Normalizer norm;
    LabelIndex labels;
    std::size_t clip_len = 10;

    std::size_t predict(const VideoTrack& track) const;
};

double video_accuracy(std::span<const VideoTrack> tracks, const VideoClassifier& model);

struct VideoReport {
    std::vector<double> trials;
    double mean = 0.0;
    double stddev = 0.0;  // population standard deviation over trials
};

VideoReport summarize_trials(std::vector<double> accuracies);

struct VideoProtocol {
    std::size_t trials = 10;
    std::uint64_t seed = 0;
    // Tracks per subject used for training; the rest are tested.
    std::size_t train_tracks_per_subject = 1;
};

struct TrackSplit {
    std::vector<VideoTrack> train;
    std::vector<VideoTrack> test;
};

// Per subject: a random `train_per_subject` tracks train, the rest test.
TrackSplit split_tracks(std::span<const VideoTrack> tracks, std::size_t train_per_subject,
                        std::uint64_t seed);

using VideoFitter = std::function<VideoClassifier(std::span<const VideoTrack> train)>;

// Retrains on a fresh random split for every trial.
VideoReport video_experiment(std::span<const VideoTrack> tracks, const VideoFitter& fit,
                             const VideoProtocol& protocol);

// Fixed model: each trial scores a random half (rounded up) of every
// subject's tracks.
VideoReport video_experiment(std::span<const VideoTrack> tracks, const VideoClassifier& model,
                             std::size_t trials, std::uint64_t seed);

// Plain-text tables and `key,accuracy` record streams.
std::string format_pose_report(const PoseReport& report, std::string_view title);
// One row per report; all reports must share a gallery pose.
std::string format_pose_table(std::span<const std::pair<std::string, PoseReport>> rows);
std::string pose_records(const PoseReport& report);
std::string format_cross_pose(const CrossPoseReport& report);
std::string cross_pose_records(const CrossPoseReport& report);
std::string format_video_report(const VideoReport& report);
std::string video_records(const VideoReport& report);

}  // namespace rrnn

#endif  // RRNN_EVAL_HPP_
