#include "rrnn/pipeline.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "rrnn/error.hpp"

namespace rrnn {

std::string_view to_string(Task task) {
    return task == Task::pose ? "pose" : "video";
}

Task parse_task(std::string_view name) {
    if (name == "pose") {
        return Task::pose;
    }
    if (name == "video") {
        return Task::video;
    }
    throw Error(ErrorCode::invalid_argument,
                "unknown task '" + std::string(name) + "' (expected pose or video)");
}

TaskConfig TaskConfig::defaults(Task task) {
    TaskConfig cfg;
    if (task == Task::pose) {
        cfg.train.alpha = 0.1;
        cfg.train.beta = 0.0;
    } else {
        cfg.train.alpha = 0.0;
        cfg.train.beta = 1.0;
    }
    return cfg;
}

std::vector<SequenceSample> pose_training_samples(std::span<const SubjectPoseSet> sets,
                                                  const Normalizer& norm, bool include_frontal,
                                                  const LabelIndex* labels) {
    std::vector<SequenceSample> samples;
    for (const SubjectPoseSet& set : sets) {
        std::optional<std::size_t> label;
        if (labels) {
            label = labels->at(set.subject_id);
        }
        for (const auto& [pose, feature] : set.features) {
            if (pose == PoseGrid::kFrontal && !include_frontal) {
                continue;
            }
            samples.push_back(build_pose_training_sample(set, pose, norm, label));
        }
    }
    return samples;
}

TrainedModel train_pose_model(std::span<const SubjectPoseSet> train_sets, const TaskConfig& cfg,
                              const EpochCallback& on_epoch) {
    if (train_sets.empty()) {
        throw Error(ErrorCode::empty_input, "pose training: no training subjects");
    }
    std::vector<Vector> features;
    for (const auto& set : train_sets) {
        for (const auto& [pose, feature] : set.features) {
            features.push_back(feature);
        }
    }
    TrainedModel model;
    model.task = Task::pose;
    model.config = cfg;
    model.norm = Normalizer::fit(features);

    LabelIndex labels;
    const bool supervised = cfg.train.beta > 0.0;
    if (supervised) {
        for (const auto& set : train_sets) {
            labels.intern(set.subject_id);
        }
    }
    const auto samples =
        pose_training_samples(train_sets, model.norm, cfg.include_frontal,
                              supervised ? &labels : nullptr);
    if (samples.empty()) {
        throw Error(ErrorCode::empty_input, "pose training: no usable training samples");
    }
    TrainConfig tc = cfg.train;
    tc.classes = supervised ? labels.size() : 0;
    TrainResult result = train(samples, tc, on_epoch);
    model.params = std::move(result.params);
    model.history = std::move(result.history);
    model.labels = labels.labels();
    return model;
}

TrainedModel train_video_model(std::span<const VideoTrack> train_tracks, const TaskConfig& cfg,
                               const EpochCallback& on_epoch) {
    if (train_tracks.empty()) {
        throw Error(ErrorCode::empty_input, "video training: no training tracks");
    }
    std::vector<Vector> frames;
    LabelIndex labels;
    for (const auto& track : train_tracks) {
        labels.intern(track.subject_id);
        frames.insert(frames.end(), track.frames.begin(), track.frames.end());
    }
    if (labels.size() < 2) {
        throw Error(ErrorCode::invalid_argument, "video training needs at least 2 subjects");
    }
    TrainedModel model;
    model.task = Task::video;
    model.config = cfg;
    model.norm = Normalizer::fit(frames);

    std::vector<SequenceSample> samples;
    for (const auto& track : train_tracks) {
        auto clips = build_video_clips(track, cfg.clip_len, model.norm,
                                       labels.at(track.subject_id));
        std::move(clips.begin(), clips.end(), std::back_inserter(samples));
    }
    TrainConfig tc = cfg.train;
    tc.classes = labels.size();
    TrainResult result = train(samples, tc, on_epoch);
    model.params = std::move(result.params);
    model.history = std::move(result.history);
    model.labels = labels.labels();
    return model;
}

VideoClassifier video_classifier(const TrainedModel& model) {
    if (!model.params.has_head()) {
        throw Error(ErrorCode::no_head, "model has no class head");
    }
    return VideoClassifier{model.params, model.norm, LabelIndex(model.labels),
                           model.config.clip_len};
}

// ---------------------------------------------------------------------------
// Model file

namespace {

Error model_error(std::size_t line, const std::string& msg) {
    return Error(ErrorCode::parse, "model line " + std::to_string(line) + ": " + msg);
}

void write_values(std::ostream& out, std::string_view name, std::span<const double> values) {
    out << name;
    for (double x : values) {
        out << ' ' << format_real(x);
    }
    out << '\n';
}

class LineReader {
public:
    LineReader(std::istream& in, std::size_t consumed) : in_(in), line_no_(consumed) { }

    std::vector<std::string> expect(std::string_view key) {
        std::string line;
        if (!std::getline(in_, line)) {
            throw model_error(line_no_ + 1, "unexpected end of file, expected '" +
                                                std::string(key) + "'");
        }
        ++line_no_;
        std::istringstream ss(line);
        std::vector<std::string> tokens;
        std::string tok;
        while (ss >> tok) {
            tokens.push_back(tok);
        }
        if (tokens.empty() || tokens.front() != key) {
            throw model_error(line_no_, "expected '" + std::string(key) + "'");
        }
        tokens.erase(tokens.begin());
        return tokens;
    }

    std::size_t line() const { return line_no_; }

private:
    std::istream& in_;
    std::size_t line_no_;
};

std::map<std::string, std::string> key_values(const std::vector<std::string>& tokens,
                                              std::size_t line) {
    std::map<std::string, std::string> kv;
    for (const auto& tok : tokens) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) {
            throw model_error(line, "expected key=value, found '" + tok + "'");
        }
        kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return kv;
}

template <typename T>
T parse_count(const std::map<std::string, std::string>& kv, const std::string& key,
              std::size_t line) {
    const auto it = kv.find(key);
    if (it == kv.end()) {
        throw model_error(line, "missing '" + key + "'");
    }
    T value{};
    const auto& s = it->second;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw model_error(line, "invalid value for '" + key + "': '" + s + "'");
    }
    return value;
}

double parse_key_real(const std::map<std::string, std::string>& kv, const std::string& key,
                      std::size_t line) {
    const auto it = kv.find(key);
    if (it == kv.end()) {
        throw model_error(line, "missing '" + key + "'");
    }
    try {
        return parse_real(it->second);
    } catch (const Error& e) {
        throw model_error(line, key + ": " + e.what());
    }
}

void read_values(LineReader& reader, std::string_view key, std::span<double> dst) {
    const auto tokens = reader.expect(key);
    if (tokens.size() != dst.size()) {
        throw model_error(reader.line(), std::string(key) + " has " +
                                             std::to_string(tokens.size()) + " values, expected " +
                                             std::to_string(dst.size()));
    }
    for (std::size_t i = 0; i < dst.size(); ++i) {
        try {
            dst[i] = parse_real(tokens[i]);
        } catch (const Error& e) {
            throw model_error(reader.line(), e.what());
        }
    }
}

}  // namespace

void write_model(std::ostream& out, const TrainedModel& model) {
    const ModelParams& p = model.params;
    const TrainConfig& tc = model.config.train;
    out << kModelHeader << '\n';
    out << "task " << to_string(model.task) << '\n';
    out << "dims d=" << p.input_dim() << " h=" << p.hidden_dim() << " c=" << p.classes() << '\n';
    out << "labels";
    for (const auto& label : model.labels) {
        out << ' ' << label;
    }
    out << '\n';
    out << "hyper alpha=" << format_real(tc.alpha) << " beta=" << format_real(tc.beta)
        << " hidden=" << tc.hidden << " optimizer=" << to_string(tc.optimizer)
        << " lr=" << format_real(tc.learning_rate) << " momentum=" << format_real(tc.momentum)
        << " beta1=" << format_real(tc.adam_beta1) << " beta2=" << format_real(tc.adam_beta2)
        << " eps=" << format_real(tc.adam_epsilon) << " batch=" << tc.batch_size
        << " epochs=" << tc.epochs << " seed=" << tc.seed
        << " init_scale=" << format_real(tc.init_scale) << " clip_len=" << model.config.clip_len
        << " include_frontal=" << (model.config.include_frontal ? 1 : 0) << '\n';
    write_values(out, "norm_min", model.norm.min().values());
    write_values(out, "norm_max", model.norm.max().values());
    for (const auto& block : p.blocks()) {
        write_values(out, block.name, block.values);
    }
}

TrainedModel read_model(std::istream& in) {
    std::string header;
    if (!std::getline(in, header) || header != kModelHeader) {
        throw model_error(1, std::string("expected header '") + kModelHeader + "'");
    }
    LineReader reader(in, 1);
    TrainedModel model;

    const auto task = reader.expect("task");
    if (task.size() != 1) {
        throw model_error(reader.line(), "expected 'task pose|video'");
    }
    model.task = parse_task(task[0]);

    const auto dims_tokens = reader.expect("dims");
    const std::size_t dims_line = reader.line();
    const auto dims = key_values(dims_tokens, dims_line);
    const auto d = parse_count<std::size_t>(dims, "d", dims_line);
    const auto h = parse_count<std::size_t>(dims, "h", dims_line);
    const auto c = parse_count<std::size_t>(dims, "c", dims_line);
    try {
        model.params = ModelParams(d, h, c);
    } catch (const Error& e) {
        throw model_error(dims_line, e.what());
    }

    model.labels = reader.expect("labels");
    if (model.labels.size() != c) {
        throw model_error(reader.line(), std::to_string(model.labels.size()) +
                                             " labels for c=" + std::to_string(c));
    }

    const auto hyper_tokens = reader.expect("hyper");
    const std::size_t lh = reader.line();
    const auto hyper = key_values(hyper_tokens, lh);
    TrainConfig& tc = model.config.train;
    tc.alpha = parse_key_real(hyper, "alpha", lh);
    tc.beta = parse_key_real(hyper, "beta", lh);
    tc.hidden = parse_count<std::size_t>(hyper, "hidden", lh);
    const auto opt = hyper.find("optimizer");
    if (opt == hyper.end()) {
        throw model_error(lh, "missing 'optimizer'");
    }
    tc.optimizer = parse_optimizer(opt->second);
    tc.learning_rate = parse_key_real(hyper, "lr", lh);
    tc.momentum = parse_key_real(hyper, "momentum", lh);
    tc.adam_beta1 = parse_key_real(hyper, "beta1", lh);
    tc.adam_beta2 = parse_key_real(hyper, "beta2", lh);
    tc.adam_epsilon = parse_key_real(hyper, "eps", lh);
    tc.batch_size = parse_count<std::size_t>(hyper, "batch", lh);
    tc.epochs = parse_count<std::size_t>(hyper, "epochs", lh);
    tc.seed = parse_count<std::uint64_t>(hyper, "seed", lh);
    tc.init_scale = parse_key_real(hyper, "init_scale", lh);
    tc.classes = c;
    model.config.clip_len = parse_count<std::size_t>(hyper, "clip_len", lh);
    model.config.include_frontal = parse_count<int>(hyper, "include_frontal", lh) != 0;

    Vector lo(d);
    Vector hi(d);
    read_values(reader, "norm_min", lo.values());
    read_values(reader, "norm_max", hi.values());
    model.norm = Normalizer(std::move(lo), std::move(hi));
    for (auto& block : model.params.blocks()) {
        read_values(reader, block.name, block.values);
    }
    return model;
}

void save_model(const std::string& path, const TrainedModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::io, "cannot open '" + path + "' for writing");
    }
    write_model(out, model);
    out.flush();
    if (!out) {
        throw Error(ErrorCode::io, "write to '" + path + "' failed");
    }
}

TrainedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io, "cannot open '" + path + "' for reading");
    }
    try {
        return read_model(in);
    } catch (const Error& e) {
        throw Error(e.code(), path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Gradient check

GradCheckProblem random_problem(std::size_t d, std::size_t h, std::size_t c, std::size_t steps,
                                std::uint64_t seed) {
    if (steps == 0) {
        throw Error(ErrorCode::invalid_argument, "gradcheck: sequence length must be >= 1");
    }
    if (c < 2) {
        throw Error(ErrorCode::invalid_argument, "gradcheck: need at least 2 classes");
    }
    GradCheckProblem prob;
    prob.params = init_params(d, h, c, seed, 1.0);
    std::mt19937_64 rng(seed ^ 0xA5A5A5A5DEADBEEFULL);
    std::uniform_real_distribution<double> small(-0.5, 0.5);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> target(-0.9, 0.9);
    for (Vector* b : {&prob.params.b1, &prob.params.b2, &prob.params.b3}) {
        for (double& x : *b) {
            x = small(rng);
        }
    }
    auto draw = [&](auto& dist) {
        Vector v(d);
        for (double& x : v) {
            x = dist(rng);
        }
        return v;
    };
    std::vector<Vector> targets;
    for (std::size_t t = 0; t < steps; ++t) {
        prob.sample.inputs.push_back(draw(unit));
        targets.push_back(draw(target));
    }
    prob.sample.targets = std::move(targets);
    prob.sample.global_target = draw(target);
    prob.sample.label = std::uniform_int_distribution<std::size_t>(0, c - 1)(rng);
    return prob;
}

GradCheckSummary run_gradcheck(const GradCheckOptions& options) {
    const GradCheckProblem prob = random_problem(options.input_dim, options.hidden_dim,
                                                 options.classes, options.steps, options.seed);
    GradCheckSummary summary;
    for (double alpha : {0.0, 0.1, 1.0}) {
        for (double beta : {0.0, 0.1, 1.0}) {
            Gradients analytic = backward(prob.sample, prob.params,
                                          forward(prob.sample, prob.params), alpha, beta);
            if (options.corrupt) {
                bool found = false;
                for (auto& block : analytic.blocks()) {
                    if (block.name == *options.corrupt ||
                        "d" + std::string(block.name) == *options.corrupt) {
                        if (block.values.empty()) {
                            throw Error(ErrorCode::invalid_argument,
                                        "cannot corrupt empty block " + *options.corrupt);
                        }
                        block.values[0] += 1.0;
                        found = true;
                    }
                }
                if (!found) {
                    throw Error(ErrorCode::invalid_argument,
                                "unknown parameter '" + *options.corrupt + "'");
                }
            }
            summary.cases.push_back({alpha, beta,
                                     grad_check(prob.sample, prob.params, alpha, beta,
                                                options.step, analytic)});
        }
    }
    for (std::size_t i = 0; i < summary.cases.size(); ++i) {
        if (summary.cases[i].result.max_error > summary.cases[summary.worst].result.max_error) {
            summary.worst = i;
        }
    }
    summary.passed = summary.cases[summary.worst].result.max_error <= options.tolerance;
    return summary;
}

std::string format_gradcheck(const GradCheckSummary& summary) {
    std::ostringstream out;
    char buf[160];
    for (const auto& c : summary.cases) {
        std::snprintf(buf, sizeof buf, "alpha=%-4g beta=%-4g max_rel_error=%.3e (%s[%zu])\n",
                      c.alpha, c.beta, c.result.max_error, c.result.worst_param.c_str(),
                      c.result.worst_index);
        out << buf;
    }
    const auto& w = summary.cases[summary.worst];
    std::snprintf(buf, sizeof buf,
                  "worst: alpha=%g beta=%g param=%s index=%zu analytic=%.10g numeric=%.10g "
                  "max_rel_error=%.3e\n",
                  w.alpha, w.beta, w.result.worst_param.c_str(), w.result.worst_index,
                  w.result.analytic, w.result.numeric, w.result.max_error);
    out << buf << (summary.passed ? "PASS" : "FAIL") << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// Ablation

AblationReport run_pose_ablation(const PoseDataset& data, const TaskConfig& base,
                                 const AblationOptions& options) {
    AblationReport report;
    report.task = Task::pose;
    report.raw_baseline =
        pose_experiment(data.test, options.gallery_pose, raw_embedder(), options.k, options.metric);
    for (double beta : options.betas) {
        for (double alpha : options.alphas) {
            TaskConfig cfg = base;
            cfg.train.alpha = alpha;
            cfg.train.beta = beta;
            const TrainedModel model = train_pose_model(data.train, cfg);
            PoseReport pr = pose_experiment(data.test, options.gallery_pose,
                                            model_embedder(model.params, model.norm), options.k,
                                            options.metric);
            report.rows.push_back({alpha, beta, pr.average, 0.0, pr});
        }
    }
    return report;
}

AblationReport run_video_ablation(std::span<const VideoTrack> tracks, const TaskConfig& base,
                                  const AblationOptions& options) {
    AblationReport report;
    report.task = Task::video;
    for (double beta : options.betas) {
        for (double alpha : options.alphas) {
            TaskConfig cfg = base;
            cfg.train.alpha = alpha;
            cfg.train.beta = beta;
            const VideoFitter fit = [&cfg](std::span<const VideoTrack> train) {
                return video_classifier(train_video_model(train, cfg));
            };
            const VideoReport vr = video_experiment(tracks, fit, options.video);
            report.rows.push_back({alpha, beta, vr.mean, vr.stddev, std::nullopt});
        }
    }
    return report;
}

std::string format_ablation(const AblationReport& report) {
    char buf[128];
    if (report.task == Task::pose) {
        std::vector<std::pair<std::string, PoseReport>> rows;
        if (report.raw_baseline) {
            rows.emplace_back("raw features", *report.raw_baseline);
        }
        for (const auto& row : report.rows) {
            std::snprintf(buf, sizeof buf, "alpha=%g beta=%g", row.alpha, row.beta);
            rows.emplace_back(buf, *row.pose);
        }
        return format_pose_table(rows);
    }
    std::ostringstream out;
    out << "alpha  beta   accuracy\n";
    for (const auto& row : report.rows) {
        std::snprintf(buf, sizeof buf, "%-6g %-6g %5.1f +/- %.1f\n", row.alpha, row.beta,
                      100.0 * row.mean, 100.0 * row.stddev);
        out << buf;
    }
    return out.str();
}

std::string ablation_records(const AblationReport& report) {
    std::ostringstream out;
    char buf[128];
    if (report.raw_baseline) {
        std::snprintf(buf, sizeof buf, "raw,%.6f\n", report.raw_baseline->average);
        out << buf;
    }
    for (const auto& row : report.rows) {
        std::snprintf(buf, sizeof buf, "alpha=%g beta=%g,%.6f\n", row.alpha, row.beta, row.mean);
        out << buf;
    }
    return out.str();
}

}  // namespace rrnn
