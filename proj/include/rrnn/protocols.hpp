#ifndef RRNN_PROTOCOLS_HPP_
#define RRNN_PROTOCOLS_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rrnn/dataset.hpp"
#include "rrnn/linalg.hpp"
#include "rrnn/model.hpp"

namespace rrnn {

// Seven head poses from −45° to +45° in 15° steps; index 3 is frontal.
struct PoseGrid {
    static constexpr std::size_t kCount = 7;
    static constexpr std::size_t kFrontal = 3;
    static constexpr std::array<int, kCount> kAngles = {-45, -30, -15, 0, 15, 30, 45};
    // Decoding sequences are the longest walk to frontal (3 steps) plus one
    // terminal frontal state.
    static constexpr std::size_t kSequenceLength = 4;

    static bool valid(std::size_t pose) { return pose < kCount; }
    static std::string label(std::size_t pose);
};

using PosePath = std::array<std::size_t, PoseGrid::kSequenceLength>;

// Poses walked from `input_pose` toward frontal (input excluded), padded with
// frontal, followed by a terminal frontal.
PosePath pose_target_path(std::size_t input_pose);

// One capture of a subject at several poses.
struct SubjectPoseSet {
    std::string set_id;
    std::string subject_id;
    std::map<std::size_t, Vector> features;  // pose index -> feature
};

struct VideoTrack {
    std::string track_id;
    std::string subject_id;
    std::vector<Vector> frames;
};

// Per-dimension affine map of the training range onto [−0.9, 0.9], the part
// of the decoder's tanh range that is reachable without saturation.
class Normalizer {
public:
    static constexpr double kRange = 0.9;

    Normalizer() = default;
    Normalizer(Vector min, Vector max);

    static Normalizer fit(std::span<const Vector> features);

    std::size_t dim() const noexcept { return min_.size(); }
    const Vector& min() const noexcept { return min_; }
    const Vector& max() const noexcept { return max_; }

    // Values outside the training range are clamped to ±0.9. Constant
    // dimensions map to 0.
    Vector apply(const Vector& x) const;
    Vector invert(const Vector& y) const;

    friend bool operator==(const Normalizer&, const Normalizer&) = default;

private:
    Vector min_;
    Vector max_;
};

// Input: the normalized feature at `input_pose` repeated four times. Targets:
// normalized features along pose_target_path; global target: their mean.
SequenceSample build_pose_training_sample(const SubjectPoseSet& set, std::size_t input_pose,
                                          const Normalizer& norm,
                                          std::optional<std::size_t> label = std::nullopt);

// A single still image turned into a four-step virtual sequence.
SequenceSample build_pose_test_sequence(const Vector& feature, const Normalizer& norm);

// Non-overlapping windows of clip_len frames. A trailing remainder is kept
// when it holds at least clip_len/2 frames; a track shorter than clip_len is
// kept whole. Every target is the clip's mean normalized frame.
SequenceSample build_video_clip(std::span<const Vector> frames, const Normalizer& norm,
                                std::optional<std::size_t> label);
std::vector<SequenceSample> build_video_clips(const VideoTrack& track, std::size_t clip_len,
                                              const Normalizer& norm,
                                              std::optional<std::size_t> label = std::nullopt);
// [begin, end) frame ranges produced by the clip rule.
std::vector<std::pair<std::size_t, std::size_t>> clip_ranges(std::size_t frames,
                                                             std::size_t clip_len);

struct PoseDataset {
    std::vector<SubjectPoseSet> train;
    std::vector<SubjectPoseSet> test;
};

struct PoseSynthConfig {
    std::size_t subjects = 40;
    std::size_t dim = 16;
    double noise_sigma = 0.3;
    std::uint64_t seed = 0;
    // Independent captures of every pose per subject.
    std::size_t sessions = 2;
    // Rotation per 15° pose step, in radians.
    double pose_rotation = 0.1;
    // Norm of the shared appearance shift per pose step.
    double pose_shift = 2.0;
};

// Identity vectors pushed through a pose-dependent linear map shared by all
// subjects, plus a shared per-pose shift and Gaussian noise. The first
// ⌈n/2⌉ subjects form the training split.
PoseDataset synth_pose_dataset(const PoseSynthConfig& cfg);

struct VideoSynthConfig {
    std::size_t subjects = 10;
    std::size_t tracks_per_subject = 3;
    std::size_t frames = 25;
    std::size_t dim = 16;
    double noise_sigma = 0.3;
    // Standard deviation of the per-frame step of the view parameter.
    double walk_step = 0.15;
    std::uint64_t seed = 0;
    double view_rotation = 0.3;
};

// Tracks whose frames follow a smooth random walk of a view parameter.
std::vector<VideoTrack> synth_video_dataset(const VideoSynthConfig& cfg);

// Conversions between feature tables and grouped structures. Groups are
// returned in order of first appearance.
FeatureTable to_table(std::span<const SubjectPoseSet> sets);
FeatureTable to_table(std::span<const VideoTrack> tracks);
std::vector<SubjectPoseSet> group_pose_sets(const FeatureTable& table);
std::vector<VideoTrack> group_video_tracks(const FeatureTable& table);

// First ⌈n/2⌉ distinct subjects (in order of appearance) train, the rest test.
PoseDataset split_pose_subjects(std::vector<SubjectPoseSet> sets);

// Stable mapping of subject labels to class indices, in order of first use.
class LabelIndex {
public:
    LabelIndex() = default;
    explicit LabelIndex(std::vector<std::string> labels);

    std::size_t intern(const std::string& label);
    std::optional<std::size_t> find(const std::string& label) const;
    std::size_t at(const std::string& label) const;
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    std::size_t size() const noexcept { return labels_.size(); }

private:
    std::vector<std::string> labels_;
    std::map<std::string, std::size_t> index_;
};

}  // namespace rrnn

#endif  // RRNN_PROTOCOLS_HPP_
