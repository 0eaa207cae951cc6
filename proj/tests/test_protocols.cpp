#include <gtest/gtest.h>

#include <cstdlib>
#include <random>
#include <set>

#include "rrnn/eval.hpp"
#include "rrnn/protocols.hpp"
#include "support.hpp"

using rrnn::ErrorCode;
using rrnn::Normalizer;
using rrnn::PoseGrid;
using rrnn::PosePath;
using rrnn::SequenceSample;
using rrnn::SubjectPoseSet;
using rrnn::Vector;
using rrnn::VideoTrack;
using rrnn::testing::code_of;

namespace {

// Index of an angle in the pose grid.
std::size_t at(int angle) {
    for (std::size_t i = 0; i < PoseGrid::kCount; ++i) {
        if (PoseGrid::kAngles[i] == angle) {
            return i;
        }
    }
    throw std::invalid_argument("angle");
}

// Pose p's feature is the vector (p, p, p) so targets are easy to read back.
SubjectPoseSet labelled_set() {
    SubjectPoseSet set{"s_e0", "s", {}};
    for (std::size_t p = 0; p < PoseGrid::kCount; ++p) {
        const double v = static_cast<double>(p);
        set.features.emplace(p, Vector{v, v, v});
    }
    return set;
}

Normalizer identity_like() {
    return Normalizer(Vector{-0.9, -0.9, -0.9}, Vector{0.9, 0.9, 0.9});
}

}  // namespace

TEST(PosePath, Examples) {
    EXPECT_EQ(rrnn::pose_target_path(at(-45)), (PosePath{at(-30), at(-15), at(0), at(0)}));
    EXPECT_EQ(rrnn::pose_target_path(at(0)), (PosePath{at(0), at(0), at(0), at(0)}));
    EXPECT_EQ(rrnn::pose_target_path(at(30)), (PosePath{at(15), at(0), at(0), at(0)}));
    EXPECT_EQ(code_of([] { rrnn::pose_target_path(7); }), ErrorCode::out_of_range);
}

TEST(PosePath, StructuralInvariantsForEveryPose) {
    for (std::size_t pose = 0; pose < PoseGrid::kCount; ++pose) {
        const PosePath path = rrnn::pose_target_path(pose);
        EXPECT_EQ(path.size(), 4u);
        EXPECT_EQ(path.back(), PoseGrid::kFrontal);
        std::size_t prev = pose;
        for (std::size_t p : path) {
            const int step = std::abs(static_cast<int>(p) - static_cast<int>(prev));
            EXPECT_TRUE(step == 1 || (step == 0 && p == PoseGrid::kFrontal))
                << "pose " << pose << " step " << prev << "->" << p;
            prev = p;
        }
        const PosePath mirror = rrnn::pose_target_path(PoseGrid::kCount - 1 - pose);
        for (std::size_t t = 0; t < path.size(); ++t) {
            EXPECT_EQ(PoseGrid::kAngles[path[t]], -PoseGrid::kAngles[mirror[t]]);
        }
    }
}

TEST(PoseGridLabels, SignedAngles) {
    EXPECT_EQ(PoseGrid::label(0), "-45");
    EXPECT_EQ(PoseGrid::label(3), "0");
    EXPECT_EQ(PoseGrid::label(5), "+30");
}

TEST(PoseTrainingSample, WalksTowardFrontal) {
    const SubjectPoseSet set = labelled_set();
    const Normalizer norm = identity_like();
    const SequenceSample s = rrnn::build_pose_training_sample(set, at(-45), norm);
    ASSERT_EQ(s.length(), 4u);
    for (const Vector& x : s.inputs) {
        EXPECT_EQ(x, norm.apply(set.features.at(at(-45))));
    }
    const std::size_t expected[] = {at(-30), at(-15), at(0), at(0)};
    for (std::size_t t = 0; t < 4; ++t) {
        EXPECT_EQ((*s.targets)[t], norm.apply(set.features.at(expected[t])));
    }
    EXPECT_EQ(*s.global_target, rrnn::mean_of(*s.targets));
    EXPECT_FALSE(s.label.has_value());
}

TEST(PoseTrainingSample, FrontalInputTargetsFrontal) {
    const SubjectPoseSet set = labelled_set();
    const Normalizer norm = identity_like();
    const SequenceSample s = rrnn::build_pose_training_sample(set, at(0), norm, 4);
    const Vector frontal = norm.apply(set.features.at(at(0)));
    for (const Vector& t : *s.targets) {
        EXPECT_EQ(t, frontal);
    }
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_NEAR((*s.global_target)[i], frontal[i], 1e-15);
    }
    EXPECT_EQ(s.label, 4u);
}

TEST(PoseTrainingSample, MissingPoseIsNamed) {
    SubjectPoseSet set = labelled_set();
    set.features.erase(at(-15));
    std::string msg;
    EXPECT_EQ(code_of([&] { rrnn::build_pose_training_sample(set, at(-45), identity_like()); },
                      &msg),
              ErrorCode::missing_field);
    EXPECT_NE(msg.find("-15"), std::string::npos) << msg;
    EXPECT_NO_THROW(rrnn::build_pose_training_sample(set, at(30), identity_like()));
}

TEST(PoseTestSequence, FourIdenticalClampedInputs) {
    const Normalizer norm(Vector{0.0, 0.0}, Vector{10.0, 10.0});
    const SequenceSample s = rrnn::build_pose_test_sequence(Vector{5.0, 25.0}, norm);
    ASSERT_EQ(s.length(), 4u);
    for (const Vector& x : s.inputs) {
        EXPECT_EQ(x, (Vector{0.0, 0.9}));
    }
    const SequenceSample low = rrnn::build_pose_test_sequence(Vector{-1.0, 10.0}, norm);
    EXPECT_EQ(low.inputs[0], (Vector{-0.9, 0.9}));
}

TEST(NormalizerTest, Examples) {
    const std::vector<Vector> one{Vector{3.0, -1.0}};
    const Normalizer single = Normalizer::fit(one);
    EXPECT_EQ(single.apply(Vector{3.0, -1.0}), (Vector{0.0, 0.0}));
    EXPECT_EQ(single.apply(Vector{100.0, 5.0}), (Vector{0.0, 0.0}));

    const std::vector<Vector> range{Vector{0.0}, Vector{10.0}};
    const Normalizer norm = Normalizer::fit(range);
    EXPECT_NEAR(norm.apply(Vector{5.0})[0], 0.0, 1e-15);
    EXPECT_EQ(norm.apply(Vector{10.0})[0], 0.9);
    EXPECT_EQ(norm.apply(Vector{0.0})[0], -0.9);

    EXPECT_EQ(code_of([] { Normalizer::fit(std::vector<Vector>{}); }), ErrorCode::empty_input);
    EXPECT_EQ(code_of([&] { norm.apply(Vector{1.0, 2.0}); }), ErrorCode::shape);
}

TEST(NormalizerTest, RoundTripAndRange) {
    std::mt19937_64 rng(3);
    std::vector<Vector> train;
    for (int i = 0; i < 30; ++i) {
        train.push_back(rrnn::testing::uniform_vector(5, rng, 4.0));
    }
    const Normalizer norm = Normalizer::fit(train);
    for (const Vector& v : train) {
        const Vector y = norm.apply(v);
        for (double x : y) {
            EXPECT_GE(x, -0.9);
            EXPECT_LE(x, 0.9);
        }
        const Vector back = norm.invert(y);
        for (std::size_t i = 0; i < v.size(); ++i) {
            EXPECT_NEAR(back[i], v[i], 1e-12);
        }
    }
    for (int i = 0; i < 200; ++i) {
        for (double x : norm.apply(rrnn::testing::uniform_vector(5, rng, 50.0))) {
            EXPECT_GE(x, -0.9);
            EXPECT_LE(x, 0.9);
        }
    }
}

TEST(VideoClips, RemainderRule) {
    using Ranges = std::vector<std::pair<std::size_t, std::size_t>>;
    EXPECT_EQ(rrnn::clip_ranges(25, 10), (Ranges{{0, 10}, {10, 20}, {20, 25}}));
    EXPECT_EQ(rrnn::clip_ranges(24, 10), (Ranges{{0, 10}, {10, 20}}));
    EXPECT_EQ(rrnn::clip_ranges(7, 10), (Ranges{{0, 7}}));
    EXPECT_EQ(rrnn::clip_ranges(10, 10), (Ranges{{0, 10}}));
    EXPECT_EQ(rrnn::clip_ranges(3, 1), (Ranges{{0, 1}, {1, 2}, {2, 3}}));
    EXPECT_EQ(code_of([] { rrnn::clip_ranges(5, 0); }), ErrorCode::invalid_argument);
}

TEST(VideoClips, CoverageInvariants) {
    for (std::size_t frames = 1; frames <= 60; ++frames) {
        for (std::size_t len = 1; len <= 15; ++len) {
            const auto ranges = rrnn::clip_ranges(frames, len);
            ASSERT_FALSE(ranges.empty());
            std::size_t expected_begin = 0;
            for (const auto& [b, e] : ranges) {
                EXPECT_EQ(b, expected_begin);
                EXPECT_GT(e, b);
                EXPECT_LE(e, frames);
                EXPECT_LE(e - b, std::max(len, std::size_t{1}));
                expected_begin = e;
            }
            const std::size_t dropped = frames - expected_begin;
            EXPECT_LT(2 * dropped, len) << frames << "/" << len;
        }
    }
}

TEST(VideoClips, SamplesFollowTrackOrderAndTargetTheMean) {
    VideoTrack track{"t", "s", {}};
    for (int i = 0; i < 25; ++i) {
        track.frames.push_back(Vector{0.01 * i, -0.02 * i});
    }
    const Normalizer norm(Vector{-1.0, -1.0}, Vector{1.0, 1.0});
    const auto clips = rrnn::build_video_clips(track, 10, norm, 2);
    ASSERT_EQ(clips.size(), 3u);
    std::size_t frame = 0;
    for (const auto& clip : clips) {
        EXPECT_EQ(clip.label, 2u);
        const Vector mean = rrnn::mean_of(clip.inputs);
        for (std::size_t t = 0; t < clip.length(); ++t) {
            EXPECT_EQ(clip.inputs[t], norm.apply(track.frames[frame++]));
            EXPECT_EQ((*clip.targets)[t], mean);
        }
    }
    EXPECT_EQ(frame, 25u);
}

TEST(VideoClips, IdenticalFramesAndShortTracks) {
    VideoTrack same{"t", "s", std::vector<Vector>(10, Vector{0.3, -0.4})};
    const Normalizer norm(Vector{-1.0, -1.0}, Vector{1.0, 1.0});
    const auto clips = rrnn::build_video_clips(same, 10, norm);
    ASSERT_EQ(clips.size(), 1u);
    for (std::size_t t = 0; t < 10; ++t) {
        for (std::size_t i = 0; i < 2; ++i) {
            EXPECT_NEAR((*clips[0].targets)[t][i], clips[0].inputs[t][i], 1e-15);
        }
    }

    VideoTrack short_track{"t", "s", std::vector<Vector>(7, Vector{0.1, 0.1})};
    const auto short_clips = rrnn::build_video_clips(short_track, 10, norm);
    ASSERT_EQ(short_clips.size(), 1u);
    EXPECT_EQ(short_clips[0].length(), 7u);

    VideoTrack empty{"t", "s", {}};
    EXPECT_EQ(code_of([&] { rrnn::build_video_clips(empty, 10, norm); }), ErrorCode::empty_input);
}

TEST(SynthPose, DeterministicAndSplitByHalf) {
    rrnn::PoseSynthConfig cfg;
    cfg.subjects = 9;
    cfg.dim = 6;
    cfg.seed = 4;
    const auto a = rrnn::synth_pose_dataset(cfg);
    const auto b = rrnn::synth_pose_dataset(cfg);
    EXPECT_EQ(rrnn::to_table(a.train), rrnn::to_table(b.train));
    EXPECT_EQ(rrnn::to_table(a.test), rrnn::to_table(b.test));

    std::set<std::string> train_subjects;
    std::set<std::string> test_subjects;
    for (const auto& s : a.train) {
        train_subjects.insert(s.subject_id);
        EXPECT_EQ(s.features.size(), PoseGrid::kCount);
    }
    for (const auto& s : a.test) {
        test_subjects.insert(s.subject_id);
    }
    EXPECT_EQ(train_subjects.size(), 5u);
    EXPECT_EQ(test_subjects.size(), 4u);
    for (const auto& s : test_subjects) {
        EXPECT_FALSE(train_subjects.contains(s));
    }
    EXPECT_EQ(a.train.size(), 5u * cfg.sessions);
}

TEST(SynthPose, NoiselessSessionsAreIdentical) {
    rrnn::PoseSynthConfig cfg;
    cfg.subjects = 4;
    cfg.dim = 4;
    cfg.noise_sigma = 0.0;
    const auto data = rrnn::synth_pose_dataset(cfg);
    ASSERT_GE(data.train.size(), 2u);
    EXPECT_EQ(data.train[0].subject_id, data.train[1].subject_id);
    EXPECT_EQ(data.train[0].features, data.train[1].features);
}

TEST(SynthPose, NoiselessFrontalProbesMatchRawGallery) {
    rrnn::PoseSynthConfig cfg;
    cfg.subjects = 12;
    cfg.dim = 8;
    cfg.noise_sigma = 0.0;
    const auto data = rrnn::synth_pose_dataset(cfg);
    std::vector<rrnn::GalleryEntry> gallery;
    for (const auto& set : data.test) {
        if (set.set_id.ends_with("_e0")) {
            gallery.push_back({set.features.at(PoseGrid::kFrontal), set.subject_id});
        }
    }
    for (const auto& set : data.test) {
        EXPECT_EQ(rrnn::knn_classify(gallery, set.features.at(PoseGrid::kFrontal), 1),
                  set.subject_id);
    }
}

TEST(SynthPose, ParameterRangeErrors) {
    rrnn::PoseSynthConfig cfg;
    cfg.subjects = 3;
    EXPECT_EQ(code_of([&] { rrnn::synth_pose_dataset(cfg); }), ErrorCode::invalid_argument);
    cfg.subjects = 4;
    cfg.dim = 3;
    EXPECT_EQ(code_of([&] { rrnn::synth_pose_dataset(cfg); }), ErrorCode::invalid_argument);
    cfg.dim = 4;
    cfg.noise_sigma = -1.0;
    EXPECT_EQ(code_of([&] { rrnn::synth_pose_dataset(cfg); }), ErrorCode::invalid_argument);
}

TEST(SynthVideo, ShapeAndDeterminism) {
    rrnn::VideoSynthConfig cfg;
    cfg.subjects = 10;
    cfg.tracks_per_subject = 3;
    cfg.frames = 25;
    cfg.seed = 1;
    const auto a = rrnn::synth_video_dataset(cfg);
    EXPECT_EQ(a.size(), 30u);
    for (const auto& t : a) {
        EXPECT_EQ(t.frames.size(), 25u);
    }
    EXPECT_EQ(rrnn::to_table(a), rrnn::to_table(rrnn::synth_video_dataset(cfg)));

    cfg.frames = 1;
    for (const auto& t : rrnn::synth_video_dataset(cfg)) {
        EXPECT_EQ(t.frames.size(), 1u);
    }
}

TEST(SynthVideo, StillTracksWithoutNoiseOrWalk) {
    rrnn::VideoSynthConfig cfg;
    cfg.subjects = 3;
    cfg.noise_sigma = 0.0;
    cfg.walk_step = 0.0;
    for (const auto& t : rrnn::synth_video_dataset(cfg)) {
        for (const auto& f : t.frames) {
            EXPECT_EQ(f, t.frames.front());
        }
    }
}

TEST(Grouping, RoundTripsThroughTables) {
    rrnn::PoseSynthConfig pose;
    pose.subjects = 4;
    pose.dim = 4;
    const auto data = rrnn::synth_pose_dataset(pose);
    const auto table = rrnn::to_table(data.train);
    const auto sets = rrnn::group_pose_sets(table);
    EXPECT_EQ(rrnn::to_table(sets), table);

    rrnn::VideoSynthConfig video;
    video.subjects = 3;
    video.frames = 5;
    const auto tracks = rrnn::synth_video_dataset(video);
    auto vtable = rrnn::to_table(tracks);
    std::reverse(vtable.records.begin(), vtable.records.end());
    const auto regrouped = rrnn::group_video_tracks(vtable);
    ASSERT_EQ(regrouped.size(), tracks.size());
    for (const auto& t : regrouped) {
        const auto it = std::find_if(tracks.begin(), tracks.end(),
                                     [&](const VideoTrack& o) { return o.track_id == t.track_id; });
        ASSERT_NE(it, tracks.end());
        EXPECT_EQ(t.frames, it->frames);
    }
}

TEST(Grouping, RejectsInconsistentRecords) {
    rrnn::FeatureTable table;
    table.dim = 1;
    table.records.push_back({"a", "s1", 0, Vector{1.0}});
    table.records.push_back({"a", "s2", 1, Vector{1.0}});
    EXPECT_EQ(code_of([&] { rrnn::group_pose_sets(table); }), ErrorCode::parse);
    EXPECT_EQ(code_of([&] { rrnn::group_video_tracks(table); }), ErrorCode::parse);

    table.records[1].subject = "s1";
    table.records[1].tag = 0;
    EXPECT_EQ(code_of([&] { rrnn::group_pose_sets(table); }), ErrorCode::parse);
    EXPECT_EQ(code_of([&] { rrnn::group_video_tracks(table); }), ErrorCode::parse);

    table.records[1].tag = 9;
    EXPECT_EQ(code_of([&] { rrnn::group_pose_sets(table); }), ErrorCode::parse);
}

TEST(Labels, StableIndices) {
    rrnn::LabelIndex labels;
    EXPECT_EQ(labels.intern("b"), 0u);
    EXPECT_EQ(labels.intern("a"), 1u);
    EXPECT_EQ(labels.intern("b"), 0u);
    EXPECT_EQ(labels.at("a"), 1u);
    EXPECT_FALSE(labels.find("c").has_value());
    EXPECT_EQ(code_of([&] { labels.at("c"); }), ErrorCode::out_of_range);
    EXPECT_EQ(code_of([] { rrnn::LabelIndex({"x", "x"}); }), ErrorCode::invalid_argument);
}
