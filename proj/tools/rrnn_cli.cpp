#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rrnn/rrnn.h"

namespace {

enum ExitCode { kSuccess = 0, kUsage = 1, kData = 2, kNumeric = 3 };

enum class LogLevel { quiet, info, debug };

LogLevel log_level = LogLevel::info;

void read_log_level() {
    const char* env = std::getenv("RRNN_LOG");
    if (env == nullptr || *env == '\0') {
        return;
    }
    const std::string value(env);
    if (value == "quiet") {
        log_level = LogLevel::quiet;
    } else if (value == "info") {
        log_level = LogLevel::info;
    } else if (value == "debug") {
        log_level = LogLevel::debug;
    } else {
        std::cerr << "warning: ignoring RRNN_LOG=" << value << " (expected quiet|info|debug)\n";
    }
}

bool logging(LogLevel level) {
    return static_cast<int>(log_level) >= static_cast<int>(level);
}

// Raised after a C call fails; carries the status for the exit code.
struct Failure {
    rrnn_status status;
    std::string message;
};

void check(rrnn_status status) {
    if (status != RRNN_OK) {
        throw Failure{status, rrnn_last_error()};
    }
}

int exit_code_for(rrnn_status status) {
    switch (status) {
        case RRNN_OK: return kSuccess;
        case RRNN_ERR_INVALID_ARGUMENT: return kUsage;
        case RRNN_ERR_NUMERIC: return kNumeric;
        default: return kData;
    }
}

struct DatasetDeleter {
    void operator()(rrnn_dataset* p) const { rrnn_dataset_free(p); }
};
struct ModelDeleter {
    void operator()(rrnn_model* p) const { rrnn_model_free(p); }
};
struct ReportDeleter {
    void operator()(rrnn_report* p) const { rrnn_report_free(p); }
};
struct StringDeleter {
    void operator()(char* p) const { rrnn_string_free(p); }
};

using Dataset = std::unique_ptr<rrnn_dataset, DatasetDeleter>;
using Model = std::unique_ptr<rrnn_model, ModelDeleter>;
using Report = std::unique_ptr<rrnn_report, ReportDeleter>;
using OwnedString = std::unique_ptr<char, StringDeleter>;

Dataset load_dataset(const std::string& path) {
    rrnn_dataset* raw = nullptr;
    check(rrnn_dataset_load(path.c_str(), &raw));
    return Dataset(raw);
}

Model load_model(const std::string& path) {
    rrnn_model* raw = nullptr;
    check(rrnn_model_load(path.c_str(), &raw));
    return Model(raw);
}

// Calls `fill` with a string out-parameter and takes ownership of the result.
template <typename F>
std::string take(F&& fill) {
    char* text = nullptr;
    const rrnn_status status = fill(&text);
    OwnedString owned(text);
    check(status);
    return owned ? std::string(owned.get()) : std::string();
}

void print_report(const rrnn_report* report, const std::string& records_path) {
    std::cout << take([&](char** text) { return rrnn_report_table(report, text); });
    if (records_path.empty()) {
        return;
    }
    const std::string body =
        take([&](char** text) { return rrnn_report_records(report, text); });
    if (records_path == "-") {
        std::cout << '\n' << body;
        return;
    }
    std::ofstream out(records_path);
    out << body;
    if (!out) {
        throw Failure{RRNN_ERR_IO, records_path + ": cannot write records"};
    }
}

std::vector<double> parse_grid(const std::string& text, const char* flag) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(item, &used));
            if (used != item.size()) {
                throw std::invalid_argument(item);
            }
        } catch (const std::exception&) {
            throw Failure{RRNN_ERR_INVALID_ARGUMENT,
                          std::string(flag) + ": not a number: '" + item + "'"};
        }
    }
    if (values.empty()) {
        throw Failure{RRNN_ERR_INVALID_ARGUMENT, std::string(flag) + " is empty"};
    }
    return values;
}

const std::map<std::string, rrnn_task> kTasks{{"pose", RRNN_TASK_POSE}, {"video", RRNN_TASK_VIDEO}};
const std::map<std::string, rrnn_optimizer> kOptimizers{{"sgd", RRNN_OPTIMIZER_SGD},
                                                        {"adam", RRNN_OPTIMIZER_ADAM}};
const std::map<std::string, rrnn_metric> kMetrics{{"euclidean", RRNN_METRIC_EUCLIDEAN},
                                                  {"cosine", RRNN_METRIC_COSINE}};
const std::map<std::string, rrnn_subjects> kSubjects{
    {"train", RRNN_SUBJECTS_TRAIN}, {"test", RRNN_SUBJECTS_TEST}, {"all", RRNN_SUBJECTS_ALL}};

// Flags that override the per-task training defaults.
struct TrainFlags {
    std::optional<double> alpha;
    std::optional<double> beta;
    std::optional<std::size_t> hidden;
    std::optional<double> lr;
    std::optional<double> momentum;
    std::optional<std::size_t> epochs;
    std::optional<std::size_t> batch;
    std::optional<std::uint64_t> seed;
    std::optional<rrnn_optimizer> optimizer;
    std::optional<double> init_scale;
    std::optional<std::size_t> threads;
    std::optional<std::size_t> clip_len;
    std::optional<rrnn_subjects> subjects;
    bool exclude_frontal = false;

    void attach(CLI::App& app, bool with_grid_params) {
        if (with_grid_params) {
            app.add_option("--alpha", alpha, "weight of the sequence-statistic loss");
            app.add_option("--beta", beta, "weight of the discriminative loss");
        }
        app.add_option("--hidden", hidden, "hidden state size")->check(CLI::PositiveNumber);
        app.add_option("--lr", lr, "learning rate")->check(CLI::NonNegativeNumber);
        app.add_option("--momentum", momentum, "SGD momentum")->check(CLI::Range(0.0, 1.0));
        app.add_option("--epochs", epochs, "training epochs");
        app.add_option("--batch", batch, "mini-batch size")->check(CLI::PositiveNumber);
        app.add_option("--seed", seed, "training seed");
        app.add_option("--optimizer", optimizer, "sgd or adam")
            ->transform(CLI::CheckedTransformer(kOptimizers, CLI::ignore_case));
        app.add_option("--init-scale", init_scale, "initialization scale");
        app.add_option("--threads", threads, "worker threads per batch")
            ->check(CLI::PositiveNumber);
        app.add_option("--clip-len", clip_len, "video clip length")->check(CLI::PositiveNumber);
        app.add_option("--train-subjects", subjects, "pose subjects to train on: train|all")
            ->transform(CLI::CheckedTransformer(kSubjects, CLI::ignore_case));
        app.add_flag("--exclude-frontal", exclude_frontal, "skip frontal inputs in pose training");
    }

    rrnn_train_config resolve(rrnn_task task) const {
        rrnn_train_config cfg;
        rrnn_train_config_defaults(task, &cfg);
        if (alpha) cfg.alpha = *alpha;
        if (beta) cfg.beta = *beta;
        if (hidden) cfg.hidden = *hidden;
        if (lr) cfg.learning_rate = *lr;
        if (momentum) cfg.momentum = *momentum;
        if (epochs) cfg.epochs = *epochs;
        if (batch) cfg.batch_size = *batch;
        if (seed) cfg.seed = *seed;
        if (optimizer) cfg.optimizer = *optimizer;
        if (init_scale) cfg.init_scale = *init_scale;
        if (threads) cfg.threads = *threads;
        if (clip_len) cfg.clip_len = *clip_len;
        if (subjects) cfg.subjects = *subjects;
        if (exclude_frontal) cfg.include_frontal = 0;
        return cfg;
    }
};

void log_config(const rrnn_train_config& c) {
    if (!logging(LogLevel::debug)) {
        return;
    }
    std::fprintf(stderr,
                 "config alpha=%g beta=%g hidden=%zu optimizer=%s lr=%g momentum=%g batch=%zu "
                 "epochs=%zu seed=%llu init_scale=%g threads=%zu clip_len=%zu "
                 "include_frontal=%d\n",
                 c.alpha, c.beta, c.hidden, c.optimizer == RRNN_OPTIMIZER_SGD ? "sgd" : "adam",
                 c.learning_rate, c.momentum, c.batch_size, c.epochs,
                 static_cast<unsigned long long>(c.seed), c.init_scale, c.threads, c.clip_len,
                 c.include_frontal);
}

struct EpochLog {
    std::ostream* history = nullptr;
};

void on_epoch(void* user, size_t epoch, double f1, double f2, double f3, double total) {
    auto* log = static_cast<EpochLog*>(user);
    if (logging(LogLevel::info)) {
        std::printf("epoch %zu f1=%.6g f2=%.6g f3=%.6g total=%.6g\n", epoch, f1, f2, f3,
                    total);
        std::fflush(stdout);
    }
    if (log->history) {
        char line[160];
        std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g,%.17g\n", epoch, f1, f2, f3,
                      total);
        *log->history << line;
    }
}

void setup_synth(CLI::App& root) {
    auto* synth = root.add_subcommand("synth", "write a synthetic dataset");
    synth->require_subcommand(1);

    auto pose = std::make_shared<rrnn_pose_synth_params>();
    rrnn_pose_synth_defaults(pose.get());
    auto pose_out = std::make_shared<std::string>();
    auto* p = synth->add_subcommand("pose", "subjects photographed at seven poses");
    p->add_option("--subjects", pose->subjects, "number of subjects")->capture_default_str();
    p->add_option("--dim", pose->dim, "feature dimension")->capture_default_str();
    p->add_option("--sessions", pose->sessions, "capture sets per subject")
        ->capture_default_str();
    p->add_option("--noise", pose->noise_sigma, "per-image noise sigma")->capture_default_str();
    p->add_option("--pose-rotation", pose->pose_rotation, "view rotation per pose step")
        ->capture_default_str();
    p->add_option("--pose-shift", pose->pose_shift, "shared offset per pose step")
        ->capture_default_str();
    p->add_option("--seed", pose->seed, "generator seed")->capture_default_str();
    p->add_option("--out,-o", *pose_out, "output path")->required();
    p->callback([pose, pose_out] {
        rrnn_dataset* raw = nullptr;
        check(rrnn_dataset_synth_pose(pose.get(), &raw));
        Dataset data(raw);
        check(rrnn_dataset_save(data.get(), pose_out->c_str()));
        size_t records = 0;
        size_t groups = 0;
        check(rrnn_dataset_info(data.get(), nullptr, &records, &groups));
        if (logging(LogLevel::info)) {
            std::cerr << "wrote " << records << " images in " << groups << " capture sets to "
                      << *pose_out << '\n';
        }
    });

    auto video = std::make_shared<rrnn_video_synth_params>();
    rrnn_video_synth_defaults(video.get());
    auto video_out = std::make_shared<std::string>();
    auto* v = synth->add_subcommand("video", "subjects filmed in several tracks");
    v->add_option("--subjects", video->subjects, "number of subjects")->capture_default_str();
    v->add_option("--clips", video->tracks_per_subject, "tracks per subject")
        ->capture_default_str();
    v->add_option("--frames", video->frames, "frames per track")->capture_default_str();
    v->add_option("--dim", video->dim, "feature dimension")->capture_default_str();
    v->add_option("--noise", video->noise_sigma, "per-frame noise sigma")->capture_default_str();
    v->add_option("--walk-step", video->walk_step, "view random-walk step")
        ->capture_default_str();
    v->add_option("--view-rotation", video->view_rotation, "view rotation scale")
        ->capture_default_str();
    v->add_option("--seed", video->seed, "generator seed")->capture_default_str();
    v->add_option("--out,-o", *video_out, "output path")->required();
    v->callback([video, video_out] {
        rrnn_dataset* raw = nullptr;
        check(rrnn_dataset_synth_video(video.get(), &raw));
        Dataset data(raw);
        check(rrnn_dataset_save(data.get(), video_out->c_str()));
        size_t records = 0;
        size_t groups = 0;
        check(rrnn_dataset_info(data.get(), nullptr, &records, &groups));
        if (logging(LogLevel::info)) {
            std::cerr << "wrote " << records << " frames in " << groups << " tracks to "
                      << *video_out << '\n';
        }
    });
}

void setup_train(CLI::App& root) {
    struct Args {
        rrnn_task task = RRNN_TASK_POSE;
        std::string data;
        std::string out;
        std::string history;
        TrainFlags flags;
    };
    auto args = std::make_shared<Args>();
    auto* cmd = root.add_subcommand("train", "train a model");
    cmd->add_option("task", args->task, "pose or video")
        ->required()
        ->transform(CLI::CheckedTransformer(kTasks, CLI::ignore_case));
    cmd->add_option("--data,-d", args->data, "dataset path")->required();
    cmd->add_option("--out,-o", args->out, "model output path")->required();
    cmd->add_option("--history", args->history, "write per-epoch losses as CSV");
    args->flags.attach(*cmd, true);
    cmd->callback([args] {
        const Dataset data = load_dataset(args->data);
        const rrnn_train_config cfg = args->flags.resolve(args->task);
        log_config(cfg);
        std::ofstream history;
        EpochLog log;
        if (!args->history.empty()) {
            history.open(args->history);
            if (!history) {
                throw Failure{RRNN_ERR_IO, args->history + ": cannot open for writing"};
            }
            history << "epoch,f1,f2,f3,total\n";
            log.history = &history;
        }
        rrnn_model* raw = nullptr;
        check(rrnn_train(args->task, data.get(), &cfg, on_epoch, &log, &raw));
        const Model model(raw);
        check(rrnn_model_save(model.get(), args->out.c_str()));
        if (history && !history.flush()) {
            throw Failure{RRNN_ERR_IO, args->history + ": write failed"};
        }
        if (logging(LogLevel::info)) {
            std::cerr << "saved model to " << args->out << '\n';
        }
    });
}

struct EvalFlags {
    std::size_t k = 1;
    rrnn_metric metric = RRNN_METRIC_EUCLIDEAN;
    int gallery_pose = 3;
    std::size_t trials = 10;
    std::uint64_t seed = 0;

    void attach(CLI::App& app) {
        app.add_option("--k", k, "neighbors for pose matching")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        app.add_option("--metric", metric, "euclidean or cosine")
            ->transform(CLI::CheckedTransformer(kMetrics, CLI::ignore_case));
        app.add_option("--gallery-pose", gallery_pose, "gallery pose index, 3 is frontal")
            ->check(CLI::Range(0, 6))
            ->capture_default_str();
        app.add_option("--trials", trials, "video trials")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
    }
};

void setup_eval(CLI::App& root) {
    struct Args {
        rrnn_task task = RRNN_TASK_POSE;
        std::string model;
        std::string data;
        std::string records;
        bool cross_pose = false;
        bool raw = false;
        rrnn_subjects subjects = RRNN_SUBJECTS_TEST;
        EvalFlags eval;
    };
    auto args = std::make_shared<Args>();
    auto* cmd = root.add_subcommand("eval", "evaluate a model");
    cmd->add_option("task", args->task, "pose or video")
        ->required()
        ->transform(CLI::CheckedTransformer(kTasks, CLI::ignore_case));
    cmd->add_option("--model,-m", args->model, "model path");
    cmd->add_option("--data,-d", args->data, "dataset path")->required();
    cmd->add_option("--records", args->records, "write key,accuracy records (- for stdout)");
    cmd->add_flag("--cross-pose", args->cross_pose, "pose: every gallery pose");
    cmd->add_flag("--raw", args->raw, "pose: match raw features instead of a model");
    cmd->add_option("--subjects", args->subjects, "pose subjects: train|test|all")
        ->transform(CLI::CheckedTransformer(kSubjects, CLI::ignore_case));
    cmd->add_option("--seed", args->eval.seed, "video trial seed");
    args->eval.attach(*cmd);
    cmd->callback([args] {
        rrnn_eval_options options;
        rrnn_eval_options_defaults(&options);
        options.subjects = args->subjects;
        options.gallery_pose = args->eval.gallery_pose;
        options.cross_pose = args->cross_pose ? 1 : 0;
        options.k = args->eval.k;
        options.metric = args->eval.metric;
        options.trials = args->eval.trials;
        options.seed = args->eval.seed;

        const Dataset data = load_dataset(args->data);
        rrnn_report* raw = nullptr;
        if (args->raw) {
            if (args->task != RRNN_TASK_POSE) {
                throw Failure{RRNN_ERR_INVALID_ARGUMENT, "--raw applies to the pose task only"};
            }
            check(rrnn_evaluate_raw(data.get(), &options, &raw));
        } else {
            if (args->model.empty()) {
                throw Failure{RRNN_ERR_INVALID_ARGUMENT, "--model is required"};
            }
            const Model model = load_model(args->model);
            rrnn_task model_task = RRNN_TASK_POSE;
            check(rrnn_model_info(model.get(), &model_task, nullptr, nullptr, nullptr));
            if (model_task != args->task) {
                throw Failure{RRNN_ERR_INVALID_ARGUMENT,
                              "model was trained for a different task"};
            }
            check(rrnn_evaluate(model.get(), data.get(), &options, &raw));
        }
        const Report report(raw);
        print_report(report.get(), args->records);
    });
}

void setup_gradcheck(CLI::App& root) {
    struct Args {
        rrnn_gradcheck_options options;
        std::string corrupt;
    };
    auto args = std::make_shared<Args>();
    rrnn_gradcheck_defaults(&args->options);
    auto* cmd = root.add_subcommand("gradcheck", "compare gradients with finite differences");
    auto& o = args->options;
    cmd->add_option("--dim", o.input_dim, "input dimension")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--hidden", o.hidden_dim, "hidden state size")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--classes", o.classes, "classes, 0 or at least 2")->capture_default_str();
    cmd->add_option("--steps", o.steps, "sequence length")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--seed", o.seed, "problem seed")->capture_default_str();
    cmd->add_option("--step", o.step, "finite-difference step")->capture_default_str();
    cmd->add_option("--tol", o.tolerance, "pass threshold")->capture_default_str();
    cmd->add_option("--corrupt", args->corrupt, "perturb a gradient block, e.g. dW");
    cmd->callback([args] {
        rrnn_gradcheck_options options = args->options;
        options.corrupt = args->corrupt.empty() ? nullptr : args->corrupt.c_str();
        rrnn_gradcheck_result result;
        std::cout << take([&](char** text) { return rrnn_gradcheck(&options, &result, text); });
        if (!result.passed) {
            throw Failure{RRNN_ERR_NUMERIC, "gradient check failed"};
        }
    });
}

void setup_ablate(CLI::App& root) {
    struct Args {
        rrnn_task task = RRNN_TASK_POSE;
        std::string data;
        std::string records;
        std::string alpha_grid;
        std::string beta_grid;
        std::size_t train_tracks = 1;
        std::uint64_t trial_seed = 0;
        TrainFlags flags;
        EvalFlags eval;
    };
    auto args = std::make_shared<Args>();
    auto* cmd = root.add_subcommand("ablate", "accuracy over a grid of loss weights");
    cmd->add_option("task", args->task, "pose or video")
        ->required()
        ->transform(CLI::CheckedTransformer(kTasks, CLI::ignore_case));
    cmd->add_option("--data,-d", args->data, "dataset path")->required();
    cmd->add_option("--records", args->records, "write key,accuracy records (- for stdout)");
    cmd->add_option("--alpha-grid", args->alpha_grid, "comma-separated alpha values");
    cmd->add_option("--beta-grid", args->beta_grid, "comma-separated beta values");
    cmd->add_option("--alpha", args->flags.alpha, "single alpha value")->excludes("--alpha-grid");
    cmd->add_option("--beta", args->flags.beta, "single beta value")->excludes("--beta-grid");
    cmd->add_option("--train-tracks", args->train_tracks, "video: training tracks per subject")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--trial-seed", args->trial_seed, "video: split seed")->capture_default_str();
    args->flags.attach(*cmd, false);
    args->eval.attach(*cmd);
    cmd->callback([args] {
        const Dataset data = load_dataset(args->data);
        const rrnn_train_config base = args->flags.resolve(args->task);
        log_config(base);
        std::vector<double> alphas = args->alpha_grid.empty()
                                         ? std::vector<double>{base.alpha}
                                         : parse_grid(args->alpha_grid, "--alpha-grid");
        std::vector<double> betas = args->beta_grid.empty()
                                        ? std::vector<double>{base.beta}
                                        : parse_grid(args->beta_grid, "--beta-grid");
        rrnn_ablation_options options{};
        options.alphas = alphas.data();
        options.alpha_count = alphas.size();
        options.betas = betas.data();
        options.beta_count = betas.size();
        options.k = args->eval.k;
        options.metric = args->eval.metric;
        options.gallery_pose = args->eval.gallery_pose;
        options.trials = args->eval.trials;
        options.seed = args->trial_seed;
        options.train_tracks_per_subject = args->train_tracks;
        rrnn_report* raw = nullptr;
        check(rrnn_ablate(args->task, data.get(), &base, &options, &raw));
        const Report report(raw);
        print_report(report.get(), args->records);
    });
}

}  // namespace

int main(int argc, char** argv) {
    read_log_level();
    CLI::App app{"Recurrent regression networks for pose and video face identification"};
    app.set_version_flag("--version", std::string(rrnn_version()));
    app.require_subcommand(1);
    setup_synth(app);
    setup_train(app);
    setup_eval(app);
    setup_gradcheck(app);
    setup_ablate(app);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kSuccess : kUsage;
    } catch (const Failure& f) {
        std::cerr << "error: " << f.message << '\n';
        return exit_code_for(f.status);
    }
    return kSuccess;
}
