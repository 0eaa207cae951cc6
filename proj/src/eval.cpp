#include "rrnn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "rrnn/error.hpp"

namespace rrnn {

namespace {

std::string fixed(double value, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, value);
    return buf;
}

std::string pad_left(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

// Groups track indices by subject, in order of first appearance.
std::vector<std::vector<std::size_t>> tracks_by_subject(std::span<const VideoTrack> tracks) {
    std::vector<std::vector<std::size_t>> groups;
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < tracks.size(); ++i) {
        const auto [it, inserted] = index.try_emplace(tracks[i].subject_id, groups.size());
        if (inserted) {
            groups.emplace_back();
        }
        groups[it->second].push_back(i);
    }
    return groups;
}

}  // namespace

Embedding embed(const SequenceSample& sample, const ModelParams& p, std::string source_id) {
    const ForwardTrace trace = forward(sample, p);
    return Embedding{mean_of(trace.hidden), std::move(source_id)};
}

Metric parse_metric(std::string_view name) {
    if (name == "euclidean") {
        return Metric::euclidean;
    }
    if (name == "cosine") {
        return Metric::cosine;
    }
    throw Error(ErrorCode::invalid_argument,
                "unknown metric '" + std::string(name) + "' (expected euclidean or cosine)");
}

double distance(const Vector& a, const Vector& b, Metric metric) {
    if (metric == Metric::euclidean) {
        return euclidean_distance(a, b);
    }
    const double denom = std::sqrt(dot(a, a) * dot(b, b));
    return denom == 0.0 ? 1.0 : 1.0 - dot(a, b) / denom;
}

std::string knn_classify(std::span<const GalleryEntry> gallery, const Vector& probe,
                         std::size_t k, Metric metric) {
    if (gallery.empty()) {
        throw Error(ErrorCode::empty_input, "knn_classify: empty gallery");
    }
    if (k == 0) {
        throw Error(ErrorCode::invalid_argument, "knn_classify: k must be at least 1");
    }
    std::vector<std::pair<double, std::size_t>> ranked;
    ranked.reserve(gallery.size());
    for (std::size_t i = 0; i < gallery.size(); ++i) {
        ranked.emplace_back(distance(gallery[i].embedding, probe, metric), i);
    }
    const std::size_t kk = std::min(k, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(kk),
                      ranked.end());

    struct Vote {
        std::size_t count = 0;
        double distance_sum = 0.0;
    };
    std::map<std::string, Vote> votes;
    for (std::size_t i = 0; i < kk; ++i) {
        Vote& v = votes[gallery[ranked[i].second].label];
        ++v.count;
        v.distance_sum += ranked[i].first;
    }
    // std::map iterates labels in ascending order, so strict comparisons
    // leave the smaller label in place on a full tie.
    const std::string* best = nullptr;
    Vote best_vote;
    for (const auto& [label, vote] : votes) {
        const double mean = vote.distance_sum / static_cast<double>(vote.count);
        const double best_mean =
            best ? best_vote.distance_sum / static_cast<double>(best_vote.count) : 0.0;
        if (!best || vote.count > best_vote.count ||
            (vote.count == best_vote.count && mean < best_mean)) {
            best = &label;
            best_vote = vote;
        }
    }
    return *best;
}

FeatureEmbedder model_embedder(ModelParams params, Normalizer norm) {
    if (norm.dim() != params.input_dim()) {
        throw Error(ErrorCode::shape, "model expects d=" + std::to_string(params.input_dim()) +
                                          " but normalizer has d=" +
                                          std::to_string(norm.dim()));
    }
    return [params = std::move(params), norm = std::move(norm)](const Vector& feature) {
        return embed(build_pose_test_sequence(feature, norm), params).vector;
    };
}

FeatureEmbedder raw_embedder() {
    return [](const Vector& feature) { return feature; };
}

PoseReport pose_experiment(std::span<const SubjectPoseSet> test_sets, std::size_t gallery_pose,
                           const FeatureEmbedder& embedder, std::size_t k, Metric metric) {
    if (!PoseGrid::valid(gallery_pose)) {
        throw Error(ErrorCode::out_of_range,
                    "invalid gallery pose index " + std::to_string(gallery_pose));
    }
    if (test_sets.empty()) {
        throw Error(ErrorCode::empty_input, "pose experiment: no test subjects");
    }

    std::vector<GalleryEntry> gallery;
    std::map<std::string, const Vector*> enrolled;
    std::vector<std::string> subjects;
    for (const SubjectPoseSet& set : test_sets) {
        if (std::find(subjects.begin(), subjects.end(), set.subject_id) == subjects.end()) {
            subjects.push_back(set.subject_id);
        }
        const auto it = set.features.find(gallery_pose);
        if (it != set.features.end() && !enrolled.contains(set.subject_id)) {
            enrolled.emplace(set.subject_id, &it->second);
            gallery.push_back({embedder(it->second), set.subject_id});
        }
    }
    for (const std::string& subject : subjects) {
        if (!enrolled.contains(subject)) {
            throw Error(ErrorCode::missing_field, "subject '" + subject +
                                                      "' has no gallery image at pose " +
                                                      PoseGrid::label(gallery_pose));
        }
    }

    PoseReport report;
    report.gallery_pose = gallery_pose;
    std::array<std::size_t, PoseGrid::kCount> correct{};
    for (const SubjectPoseSet& set : test_sets) {
        for (const auto& [pose, feature] : set.features) {
            if (pose == gallery_pose) {
                continue;
            }
            ++report.probes[pose];
            if (knn_classify(gallery, embedder(feature), k, metric) == set.subject_id) {
                ++correct[pose];
            }
        }
    }
    double sum = 0.0;
    std::size_t columns = 0;
    for (std::size_t pose = 0; pose < PoseGrid::kCount; ++pose) {
        if (pose == gallery_pose || report.probes[pose] == 0) {
            continue;
        }
        const double acc =
            static_cast<double>(correct[pose]) / static_cast<double>(report.probes[pose]);
        report.per_pose[pose] = acc;
        sum += acc;
        ++columns;
    }
    report.average = columns ? sum / static_cast<double>(columns) : 0.0;
    return report;
}

CrossPoseReport cross_pose_experiment(std::span<const SubjectPoseSet> test_sets,
                                      const FeatureEmbedder& embedder, std::size_t k,
                                      Metric metric) {
    // Embeddings do not depend on the gallery choice; compute them once.
    std::map<const Vector*, Vector> cache;
    for (const auto& set : test_sets) {
        for (const auto& [pose, feature] : set.features) {
            cache.emplace(&feature, embedder(feature));
        }
    }
    const FeatureEmbedder cached = [&](const Vector& feature) {
        const auto it = cache.find(&feature);
        return it != cache.end() ? it->second : embedder(feature);
    };
    CrossPoseReport out;
    for (std::size_t g = 0; g < PoseGrid::kCount; ++g) {
        out[g] = pose_experiment(test_sets, g, cached, k, metric);
    }
    return out;
}

Vector video_score(std::span<const SequenceSample> clips, const ModelParams& p) {
    if (!p.has_head()) {
        throw Error(ErrorCode::no_head, "video_score: model has no class head");
    }
    if (clips.empty()) {
        throw Error(ErrorCode::empty_input, "video_score: no clips");
    }
    Vector score(p.classes());
    std::size_t steps = 0;
    for (const SequenceSample& clip : clips) {
        const ForwardTrace trace = forward(clip, p);
        for (const Vector& s : trace.hidden) {
            axpy(1.0, class_posterior(s, p), score);
            ++steps;
        }
    }
    for (double& x : score) {
        x /= static_cast<double>(steps);
    }
    return score;
}

std::size_t predict_class(const Vector& score) {
    if (score.empty()) {
        throw Error(ErrorCode::empty_input, "predict_class: empty score");
    }
    return static_cast<std::size_t>(std::max_element(score.begin(), score.end()) - score.begin());
}

std::size_t VideoClassifier::predict(const VideoTrack& track) const {
    return predict_class(video_score(build_video_clips(track, clip_len, norm), params));
}

double video_accuracy(std::span<const VideoTrack> tracks, const VideoClassifier& model) {
    if (tracks.empty()) {
        throw Error(ErrorCode::empty_input, "video accuracy: no test tracks");
    }
    std::size_t correct = 0;
    for (const VideoTrack& track : tracks) {
        const auto truth = model.labels.find(track.subject_id);
        if (!truth) {
            throw Error(ErrorCode::out_of_range,
                        "track '" + track.track_id + "' has subject '" + track.subject_id +
                            "' unknown to the model");
        }
        if (model.predict(track) == *truth) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(tracks.size());
}

VideoReport summarize_trials(std::vector<double> accuracies) {
    VideoReport report;
    report.trials = std::move(accuracies);
    if (report.trials.empty()) {
        return report;
    }
    const double n = static_cast<double>(report.trials.size());
    report.mean = std::accumulate(report.trials.begin(), report.trials.end(), 0.0) / n;
    double var = 0.0;
    for (double a : report.trials) {
        var += (a - report.mean) * (a - report.mean);
    }
    report.stddev = std::sqrt(var / n);
    return report;
}

TrackSplit split_tracks(std::span<const VideoTrack> tracks, std::size_t train_per_subject,
                        std::uint64_t seed) {
    const auto groups = tracks_by_subject(tracks);
    if (groups.size() < 2) {
        throw Error(ErrorCode::invalid_argument, "video protocol needs at least 2 subjects");
    }
    std::mt19937_64 rng(seed);
    TrackSplit split;
    for (auto group : groups) {
        if (group.size() <= train_per_subject) {
            throw Error(ErrorCode::invalid_argument,
                        "subject '" + tracks[group.front()].subject_id + "' has " +
                            std::to_string(group.size()) + " tracks; need more than " +
                            std::to_string(train_per_subject) + " to hold out a test track");
        }
        std::shuffle(group.begin(), group.end(), rng);
        for (std::size_t i = 0; i < group.size(); ++i) {
            (i < train_per_subject ? split.train : split.test).push_back(tracks[group[i]]);
        }
    }
    return split;
}

VideoReport video_experiment(std::span<const VideoTrack> tracks, const VideoFitter& fit,
                             const VideoProtocol& protocol) {
    if (protocol.trials == 0) {
        throw Error(ErrorCode::invalid_argument, "video protocol needs at least one trial");
    }
    std::mt19937_64 seeds(protocol.seed);
    std::vector<double> accuracies;
    for (std::size_t trial = 0; trial < protocol.trials; ++trial) {
        const TrackSplit split = split_tracks(tracks, protocol.train_tracks_per_subject, seeds());
        const VideoClassifier model = fit(split.train);
        accuracies.push_back(video_accuracy(split.test, model));
    }
    return summarize_trials(std::move(accuracies));
}

VideoReport video_experiment(std::span<const VideoTrack> tracks, const VideoClassifier& model,
                             std::size_t trials, std::uint64_t seed) {
    if (trials == 0) {
        throw Error(ErrorCode::invalid_argument, "video evaluation needs at least one trial");
    }
    const auto groups = tracks_by_subject(tracks);
    if (groups.size() < 2) {
        throw Error(ErrorCode::invalid_argument, "video evaluation needs at least 2 subjects");
    }
    std::mt19937_64 rng(seed);
    std::vector<double> accuracies;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        std::vector<VideoTrack> chosen;
        for (auto group : groups) {
            std::shuffle(group.begin(), group.end(), rng);
            const std::size_t take = (group.size() + 1) / 2;
            for (std::size_t i = 0; i < take; ++i) {
                chosen.push_back(tracks[group[i]]);
            }
        }
        accuracies.push_back(video_accuracy(chosen, model));
    }
    return summarize_trials(std::move(accuracies));
}

std::string format_pose_report(const PoseReport& report, std::string_view title) {
    const std::pair<std::string, PoseReport> row{std::string(title), report};
    return format_pose_table(std::span(&row, 1));
}

std::string format_pose_table(std::span<const std::pair<std::string, PoseReport>> rows) {
    constexpr std::size_t kCol = 8;
    if (rows.empty()) {
        return {};
    }
    std::size_t label_width = 12;
    for (const auto& [label, report] : rows) {
        label_width = std::max(label_width, label.size() + 2);
    }
    const std::size_t gallery = rows.front().second.gallery_pose;
    std::ostringstream out;
    out << pad_right("gallery " + PoseGrid::label(gallery), label_width);
    for (std::size_t pose = 0; pose < PoseGrid::kCount; ++pose) {
        if (pose != gallery) {
            out << pad_left(PoseGrid::label(pose), kCol);
        }
    }
    out << pad_left("Average", 10) << '\n';
    for (const auto& [label, report] : rows) {
        if (report.gallery_pose != gallery) {
            throw Error(ErrorCode::invalid_argument, "pose table rows use different galleries");
        }
        out << pad_right(label, label_width);
        for (std::size_t pose = 0; pose < PoseGrid::kCount; ++pose) {
            if (pose == gallery) {
                continue;
            }
            const auto& cell = report.per_pose[pose];
            out << pad_left(cell ? fixed(100.0 * *cell, 1) + "%" : std::string("-"), kCol);
        }
        out << pad_left(fixed(100.0 * report.average, 1) + "%", 10) << '\n';
    }
    return out.str();
}

std::string pose_records(const PoseReport& report) {
    std::ostringstream out;
    for (std::size_t pose = 0; pose < PoseGrid::kCount; ++pose) {
        if (report.per_pose[pose]) {
            out << PoseGrid::label(pose) << ',' << fixed(*report.per_pose[pose], 6) << '\n';
        }
    }
    out << "average," << fixed(report.average, 6) << '\n';
    return out.str();
}

std::string format_cross_pose(const CrossPoseReport& report) {
    constexpr std::size_t kCol = 8;
    std::ostringstream out;
    out << pad_right("gallery\\probe", 14);
    for (std::size_t pose = 0; pose < PoseGrid::kCount; ++pose) {
        out << pad_left(PoseGrid::label(pose), kCol);
    }
    out << pad_left("Average", kCol + 1) << '\n';
    for (std::size_t g = 0; g < PoseGrid::kCount; ++g) {
        out << pad_right(PoseGrid::label(g), 14);
        for (std::size_t q = 0; q < PoseGrid::kCount; ++q) {
            const auto& cell = report[g].per_pose[q];
            out << pad_left(cell ? fixed(*cell, 4) : std::string("-"), kCol);
        }
        out << pad_left(fixed(report[g].average, 4), kCol + 1) << '\n';
    }
    return out.str();
}

std::string cross_pose_records(const CrossPoseReport& report) {
    std::ostringstream out;
    for (std::size_t g = 0; g < PoseGrid::kCount; ++g) {
        for (std::size_t q = 0; q < PoseGrid::kCount; ++q) {
            if (report[g].per_pose[q]) {
                out << PoseGrid::label(g) << '/' << PoseGrid::label(q) << ','
                    << fixed(*report[g].per_pose[q], 6) << '\n';
            }
        }
        out << PoseGrid::label(g) << "/average," << fixed(report[g].average, 6) << '\n';
    }
    return out.str();
}

std::string format_video_report(const VideoReport& report) {
    std::ostringstream out;
    out << pad_right("trial", 8) << pad_left("accuracy", 10) << '\n';
    for (std::size_t i = 0; i < report.trials.size(); ++i) {
        out << pad_right(std::to_string(i + 1), 8)
            << pad_left(fixed(100.0 * report.trials[i], 1) + "%", 10) << '\n';
    }
    out << "mean " << fixed(100.0 * report.mean, 1) << " +/- " << fixed(100.0 * report.stddev, 1)
        << '\n';
    return out.str();
}

std::string video_records(const VideoReport& report) {
    std::ostringstream out;
    for (std::size_t i = 0; i < report.trials.size(); ++i) {
        out << (i + 1) << ',' << fixed(report.trials[i], 6) << '\n';
    }
    out << "mean," << fixed(report.mean, 6) << '\n';
    out << "std," << fixed(report.stddev, 6) << '\n';
    return out.str();
}

}  // namespace rrnn
