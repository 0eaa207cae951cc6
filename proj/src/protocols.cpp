#include "rrnn/protocols.hpp"

#include <algorithm>
#include <set>

#include "rrnn/error.hpp"

namespace rrnn {

std::string PoseGrid::label(std::size_t pose) {
    if (!valid(pose)) {
        throw Error(ErrorCode::out_of_range, "invalid pose index " + std::to_string(pose));
    }
    const int angle = kAngles[pose];
    return (angle > 0 ? "+" : "") + std::to_string(angle);
}

PosePath pose_target_path(std::size_t input_pose) {
    if (!PoseGrid::valid(input_pose)) {
        throw Error(ErrorCode::out_of_range, "invalid pose index " + std::to_string(input_pose) +
                                                 " (expected 0.." +
                                                 std::to_string(PoseGrid::kCount - 1) + ")");
    }
    PosePath path;
    path.fill(PoseGrid::kFrontal);
    std::size_t pose = input_pose;
    for (std::size_t t = 0; t + 1 < path.size() && pose != PoseGrid::kFrontal; ++t) {
        pose = pose < PoseGrid::kFrontal ? pose + 1 : pose - 1;
        path[t] = pose;
    }
    return path;
}

Normalizer::Normalizer(Vector min, Vector max) : min_(std::move(min)), max_(std::move(max)) {
    if (min_.size() != max_.size()) {
        throw Error(ErrorCode::shape, "normalizer min/max lengths differ");
    }
    for (std::size_t i = 0; i < min_.size(); ++i) {
        if (!(max_[i] >= min_[i])) {
            throw Error(ErrorCode::invalid_argument,
                        "normalizer max < min in dimension " + std::to_string(i));
        }
    }
}

Normalizer Normalizer::fit(std::span<const Vector> features) {
    if (features.empty()) {
        throw Error(ErrorCode::empty_input, "fit_normalizer: no training features");
    }
    Vector lo = features.front();
    Vector hi = features.front();
    for (const Vector& f : features) {
        if (f.size() != lo.size()) {
            throw Error(ErrorCode::shape, "fit_normalizer: mixed feature dimensions");
        }
        for (std::size_t i = 0; i < f.size(); ++i) {
            lo[i] = std::min(lo[i], f[i]);
            hi[i] = std::max(hi[i], f[i]);
        }
    }
    return Normalizer(std::move(lo), std::move(hi));
}

Vector Normalizer::apply(const Vector& x) const {
    if (x.size() != dim()) {
        throw Error(ErrorCode::shape, "normalizer of dimension " + std::to_string(dim()) +
                                          " applied to feature of dimension " +
                                          std::to_string(x.size()));
    }
    Vector y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double span = max_[i] - min_[i];
        if (span == 0.0) {
            y[i] = 0.0;
            continue;
        }
        const double v = -kRange + 2.0 * kRange * (x[i] - min_[i]) / span;
        y[i] = std::clamp(v, -kRange, kRange);
    }
    return y;
}

Vector Normalizer::invert(const Vector& y) const {
    if (y.size() != dim()) {
        throw Error(ErrorCode::shape, "normalizer dimension mismatch in invert");
    }
    Vector x(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double span = max_[i] - min_[i];
        x[i] = min_[i] + (y[i] + kRange) / (2.0 * kRange) * span;
    }
    return x;
}

SequenceSample build_pose_training_sample(const SubjectPoseSet& set, std::size_t input_pose,
                                          const Normalizer& norm,
                                          std::optional<std::size_t> label) {
    auto feature_at = [&](std::size_t pose) -> const Vector& {
        const auto it = set.features.find(pose);
        if (it == set.features.end()) {
            throw Error(ErrorCode::missing_field, "set '" + set.set_id + "' of subject '" +
                                                      set.subject_id + "' has no image at pose " +
                                                      PoseGrid::label(pose));
        }
        return it->second;
    };
    const PosePath path = pose_target_path(input_pose);

    SequenceSample sample;
    sample.inputs.assign(PoseGrid::kSequenceLength, norm.apply(feature_at(input_pose)));
    std::vector<Vector> targets;
    targets.reserve(path.size());
    for (std::size_t pose : path) {
        targets.push_back(norm.apply(feature_at(pose)));
    }
    sample.global_target = mean_of(targets);
    sample.targets = std::move(targets);
    sample.label = label;
    return sample;
}

SequenceSample build_pose_test_sequence(const Vector& feature, const Normalizer& norm) {
    SequenceSample sample;
    sample.inputs.assign(PoseGrid::kSequenceLength, norm.apply(feature));
    return sample;
}

std::vector<std::pair<std::size_t, std::size_t>> clip_ranges(std::size_t frames,
                                                             std::size_t clip_len) {
    if (clip_len == 0) {
        throw Error(ErrorCode::invalid_argument, "clip length must be at least 1");
    }
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    if (frames == 0) {
        return ranges;
    }
    if (frames < clip_len) {
        ranges.emplace_back(0, frames);
        return ranges;
    }
    std::size_t begin = 0;
    for (; begin + clip_len <= frames; begin += clip_len) {
        ranges.emplace_back(begin, begin + clip_len);
    }
    const std::size_t rest = frames - begin;
    if (rest > 0 && 2 * rest >= clip_len) {
        ranges.emplace_back(begin, frames);
    }
    return ranges;
}

SequenceSample build_video_clip(std::span<const Vector> frames, const Normalizer& norm,
                                std::optional<std::size_t> label) {
    if (frames.empty()) {
        throw Error(ErrorCode::empty_input, "video clip has no frames");
    }
    SequenceSample sample;
    sample.inputs.reserve(frames.size());
    for (const Vector& f : frames) {
        sample.inputs.push_back(norm.apply(f));
    }
    sample.targets = std::vector<Vector>(frames.size(), mean_of(sample.inputs));
    sample.label = label;
    return sample;
}

std::vector<SequenceSample> build_video_clips(const VideoTrack& track, std::size_t clip_len,
                                              const Normalizer& norm,
                                              std::optional<std::size_t> label) {
    if (track.frames.empty()) {
        throw Error(ErrorCode::empty_input, "track '" + track.track_id + "' has no frames");
    }
    std::vector<SequenceSample> clips;
    for (const auto& [begin, end] : clip_ranges(track.frames.size(), clip_len)) {
        clips.push_back(build_video_clip(
            std::span<const Vector>(track.frames).subspan(begin, end - begin), norm, label));
    }
    return clips;
}

FeatureTable to_table(std::span<const SubjectPoseSet> sets) {
    FeatureTable table;
    for (const SubjectPoseSet& set : sets) {
        for (const auto& [pose, feature] : set.features) {
            if (table.dim == 0) {
                table.dim = feature.size();
            }
            table.records.push_back(
                {set.set_id, set.subject_id, static_cast<std::int64_t>(pose), feature});
        }
    }
    return table;
}

FeatureTable to_table(std::span<const VideoTrack> tracks) {
    FeatureTable table;
    for (const VideoTrack& track : tracks) {
        for (std::size_t t = 0; t < track.frames.size(); ++t) {
            if (table.dim == 0) {
                table.dim = track.frames[t].size();
            }
            table.records.push_back({track.track_id, track.subject_id,
                                     static_cast<std::int64_t>(t), track.frames[t]});
        }
    }
    return table;
}

namespace {

template <typename Group>
Group& group_for(std::vector<Group>& groups, std::map<std::string, std::size_t>& index,
                 const FeatureRecord& rec) {
    const auto [it, inserted] = index.try_emplace(rec.sample_id, groups.size());
    if (inserted) {
        groups.emplace_back();
    }
    return groups[it->second];
}

}  // namespace

std::vector<SubjectPoseSet> group_pose_sets(const FeatureTable& table) {
    std::vector<SubjectPoseSet> sets;
    std::map<std::string, std::size_t> index;
    for (const FeatureRecord& rec : table.records) {
        if (rec.tag < 0 || !PoseGrid::valid(static_cast<std::size_t>(rec.tag))) {
            throw Error(ErrorCode::parse, "record '" + rec.sample_id + "': pose tag " +
                                              std::to_string(rec.tag) + " outside 0..6");
        }
        SubjectPoseSet& set = group_for(sets, index, rec);
        if (set.set_id.empty()) {
            set.set_id = rec.sample_id;
            set.subject_id = rec.subject;
        } else if (set.subject_id != rec.subject) {
            throw Error(ErrorCode::parse, "set '" + rec.sample_id +
                                              "' mixes subjects '" + set.subject_id + "' and '" +
                                              rec.subject + "'");
        }
        const auto pose = static_cast<std::size_t>(rec.tag);
        if (!set.features.emplace(pose, rec.feature).second) {
            throw Error(ErrorCode::parse, "set '" + rec.sample_id + "' repeats pose " +
                                              PoseGrid::label(pose));
        }
    }
    return sets;
}

std::vector<VideoTrack> group_video_tracks(const FeatureTable& table) {
    std::vector<VideoTrack> tracks;
    std::vector<std::vector<std::pair<std::int64_t, const Vector*>>> frames;
    std::map<std::string, std::size_t> index;
    for (const FeatureRecord& rec : table.records) {
        const auto [it, inserted] = index.try_emplace(rec.sample_id, tracks.size());
        if (inserted) {
            tracks.push_back({rec.sample_id, rec.subject, {}});
            frames.emplace_back();
        } else if (tracks[it->second].subject_id != rec.subject) {
            throw Error(ErrorCode::parse, "track '" + rec.sample_id + "' mixes subjects '" +
                                              tracks[it->second].subject_id + "' and '" +
                                              rec.subject + "'");
        }
        frames[it->second].emplace_back(rec.tag, &rec.feature);
    }
    for (std::size_t k = 0; k < tracks.size(); ++k) {
        auto& list = frames[k];
        std::stable_sort(list.begin(), list.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t i = 1; i < list.size(); ++i) {
            if (list[i].first == list[i - 1].first) {
                throw Error(ErrorCode::parse, "track '" + tracks[k].track_id +
                                                  "' repeats frame " +
                                                  std::to_string(list[i].first));
            }
        }
        for (const auto& entry : list) {
            tracks[k].frames.push_back(*entry.second);
        }
    }
    return tracks;
}

PoseDataset split_pose_subjects(std::vector<SubjectPoseSet> sets) {
    std::vector<std::string> order;
    std::set<std::string> seen;
    for (const auto& set : sets) {
        if (seen.insert(set.subject_id).second) {
            order.push_back(set.subject_id);
        }
    }
    const std::size_t n_train = (order.size() + 1) / 2;
    const std::set<std::string> train_subjects(order.begin(), order.begin() + n_train);
    PoseDataset out;
    for (auto& set : sets) {
        (train_subjects.contains(set.subject_id) ? out.train : out.test).push_back(std::move(set));
    }
    return out;
}

LabelIndex::LabelIndex(std::vector<std::string> labels) {
    for (auto& label : labels) {
        if (index_.contains(label)) {
            throw Error(ErrorCode::invalid_argument, "duplicate class label '" + label + "'");
        }
        intern(label);
    }
}

std::size_t LabelIndex::intern(const std::string& label) {
    const auto [it, inserted] = index_.try_emplace(label, labels_.size());
    if (inserted) {
        labels_.push_back(label);
    }
    return it->second;
}

std::optional<std::size_t> LabelIndex::find(const std::string& label) const {
    const auto it = index_.find(label);
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::size_t LabelIndex::at(const std::string& label) const {
    const auto found = find(label);
    if (!found) {
        throw Error(ErrorCode::out_of_range, "unknown class label '" + label + "'");
    }
    return *found;
}

}  // namespace rrnn
