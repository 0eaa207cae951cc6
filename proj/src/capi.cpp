#include "rrnn/rrnn.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <set>
#include <string>
#include <variant>

#include "rrnn/error.hpp"
#include "rrnn/pipeline.hpp"

struct rrnn_dataset {
    rrnn::FeatureTable table;
};

struct rrnn_model {
    rrnn::TrainedModel model;
};

struct rrnn_report {
    std::string table;
    std::string records;
    double mean = 0.0;
    double stddev = 0.0;
    std::vector<rrnn::AblationRow> rows;
};

namespace {

thread_local std::string last_error;

rrnn_status to_status(rrnn::ErrorCode code) {
    switch (code) {
        case rrnn::ErrorCode::invalid_argument: return RRNN_ERR_INVALID_ARGUMENT;
        case rrnn::ErrorCode::shape: return RRNN_ERR_SHAPE;
        case rrnn::ErrorCode::empty_input: return RRNN_ERR_EMPTY_INPUT;
        case rrnn::ErrorCode::missing_field: return RRNN_ERR_MISSING_FIELD;
        case rrnn::ErrorCode::out_of_range: return RRNN_ERR_OUT_OF_RANGE;
        case rrnn::ErrorCode::no_head: return RRNN_ERR_NO_HEAD;
        case rrnn::ErrorCode::parse: return RRNN_ERR_PARSE;
        case rrnn::ErrorCode::io: return RRNN_ERR_IO;
        case rrnn::ErrorCode::numeric: return RRNN_ERR_NUMERIC;
    }
    return RRNN_ERR_INTERNAL;
}

template <typename F>
rrnn_status guarded(F&& body) {
    try {
        body();
        last_error.clear();
        return RRNN_OK;
    } catch (const rrnn::Error& e) {
        last_error = e.what();
        return to_status(e.code());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return RRNN_ERR_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return RRNN_ERR_INTERNAL;
    } catch (...) {
        last_error = "unknown error";
        return RRNN_ERR_INTERNAL;
    }
}

template <typename T>
void require(const T* ptr, const char* name) {
    if (ptr == nullptr) {
        throw rrnn::Error(rrnn::ErrorCode::invalid_argument, std::string(name) + " is NULL");
    }
}

char* duplicate(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr) {
        throw std::bad_alloc();
    }
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

rrnn::Task to_task(rrnn_task task) {
    switch (task) {
        case RRNN_TASK_POSE: return rrnn::Task::pose;
        case RRNN_TASK_VIDEO: return rrnn::Task::video;
    }
    throw rrnn::Error(rrnn::ErrorCode::invalid_argument, "unknown task");
}

rrnn::Metric to_metric(rrnn_metric metric) {
    switch (metric) {
        case RRNN_METRIC_EUCLIDEAN: return rrnn::Metric::euclidean;
        case RRNN_METRIC_COSINE: return rrnn::Metric::cosine;
    }
    throw rrnn::Error(rrnn::ErrorCode::invalid_argument, "unknown metric");
}

rrnn::TaskConfig to_task_config(rrnn_task task, const rrnn_train_config& c) {
    rrnn::TaskConfig cfg = rrnn::TaskConfig::defaults(to_task(task));
    rrnn::TrainConfig& t = cfg.train;
    t.alpha = c.alpha;
    t.beta = c.beta;
    t.hidden = c.hidden;
    switch (c.optimizer) {
        case RRNN_OPTIMIZER_SGD: t.optimizer = rrnn::OptimizerKind::sgd; break;
        case RRNN_OPTIMIZER_ADAM: t.optimizer = rrnn::OptimizerKind::adam; break;
        default: throw rrnn::Error(rrnn::ErrorCode::invalid_argument, "unknown optimizer");
    }
    t.learning_rate = c.learning_rate;
    t.momentum = c.momentum;
    t.adam_beta1 = c.adam_beta1;
    t.adam_beta2 = c.adam_beta2;
    t.adam_epsilon = c.adam_epsilon;
    t.batch_size = c.batch_size;
    t.epochs = c.epochs;
    t.seed = c.seed;
    t.init_scale = c.init_scale;
    t.threads = c.threads;
    cfg.clip_len = c.clip_len;
    cfg.include_frontal = c.include_frontal != 0;
    t.validate();
    if (cfg.clip_len == 0) {
        throw rrnn::Error(rrnn::ErrorCode::invalid_argument, "clip length must be at least 1");
    }
    return cfg;
}

std::vector<rrnn::SubjectPoseSet> pose_subjects(const rrnn::FeatureTable& table,
                                                rrnn_subjects which) {
    rrnn::PoseDataset split = rrnn::split_pose_subjects(rrnn::group_pose_sets(table));
    switch (which) {
        case RRNN_SUBJECTS_TRAIN: return std::move(split.train);
        case RRNN_SUBJECTS_TEST: return std::move(split.test);
        case RRNN_SUBJECTS_ALL: {
            auto all = std::move(split.train);
            std::move(split.test.begin(), split.test.end(), std::back_inserter(all));
            return all;
        }
    }
    throw rrnn::Error(rrnn::ErrorCode::invalid_argument, "unknown subject selection");
}

void require_dims(const rrnn::TrainedModel& model, const rrnn::FeatureTable& table) {
    if (model.params.input_dim() != table.dim) {
        throw rrnn::Error(rrnn::ErrorCode::shape,
                          "model has d=" + std::to_string(model.params.input_dim()) +
                              " but dataset has d=" + std::to_string(table.dim));
    }
}

rrnn_report* pose_report(const rrnn::PoseReport& r, const char* title) {
    auto* out = new rrnn_report;
    out->table = rrnn::format_pose_report(r, title);
    out->records = rrnn::pose_records(r);
    out->mean = r.average;
    return out;
}

rrnn_report* evaluate_pose(const std::vector<rrnn::SubjectPoseSet>& sets,
                           const rrnn::FeatureEmbedder& embedder, const rrnn_eval_options& o,
                           const char* title) {
    const rrnn::Metric metric = to_metric(o.metric);
    if (o.cross_pose) {
        const auto cross = rrnn::cross_pose_experiment(sets, embedder, o.k, metric);
        auto* out = new rrnn_report;
        out->table = rrnn::format_cross_pose(cross);
        out->records = rrnn::cross_pose_records(cross);
        for (const auto& row : cross) {
            out->mean += row.average / static_cast<double>(cross.size());
        }
        return out;
    }
    if (o.gallery_pose < 0) {
        throw rrnn::Error(rrnn::ErrorCode::out_of_range, "gallery pose must be 0..6");
    }
    return pose_report(rrnn::pose_experiment(sets, static_cast<std::size_t>(o.gallery_pose),
                                             embedder, o.k, metric),
                       title);
}

}  // namespace

extern "C" {

const char* rrnn_version(void) {
    return "1.0.0";
}

const char* rrnn_last_error(void) {
    return last_error.c_str();
}

const char* rrnn_status_name(rrnn_status status) {
    switch (status) {
        case RRNN_OK: return "ok";
        case RRNN_ERR_INVALID_ARGUMENT: return "invalid argument";
        case RRNN_ERR_SHAPE: return "shape mismatch";
        case RRNN_ERR_EMPTY_INPUT: return "empty input";
        case RRNN_ERR_MISSING_FIELD: return "missing field";
        case RRNN_ERR_OUT_OF_RANGE: return "out of range";
        case RRNN_ERR_NO_HEAD: return "model has no class head";
        case RRNN_ERR_PARSE: return "parse error";
        case RRNN_ERR_IO: return "i/o error";
        case RRNN_ERR_NUMERIC: return "numeric failure";
        case RRNN_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

void rrnn_string_free(char* text) {
    std::free(text);
}

void rrnn_pose_synth_defaults(rrnn_pose_synth_params* params) {
    if (params == nullptr) {
        return;
    }
    const rrnn::PoseSynthConfig d;
    *params = {d.subjects, d.dim, d.sessions, d.noise_sigma, d.pose_rotation, d.pose_shift,
               d.seed};
}

void rrnn_video_synth_defaults(rrnn_video_synth_params* params) {
    if (params == nullptr) {
        return;
    }
    const rrnn::VideoSynthConfig d;
    *params = {d.subjects, d.tracks_per_subject, d.frames,        d.dim,
               d.noise_sigma, d.walk_step,       d.view_rotation, d.seed};
}

rrnn_status rrnn_dataset_synth_pose(const rrnn_pose_synth_params* params, rrnn_dataset** out) {
    return guarded([&] {
        require(params, "params");
        require(out, "out");
        rrnn::PoseSynthConfig cfg;
        cfg.subjects = params->subjects;
        cfg.dim = params->dim;
        cfg.sessions = params->sessions;
        cfg.noise_sigma = params->noise_sigma;
        cfg.pose_rotation = params->pose_rotation;
        cfg.pose_shift = params->pose_shift;
        cfg.seed = params->seed;
        rrnn::PoseDataset data = rrnn::synth_pose_dataset(cfg);
        auto sets = std::move(data.train);
        std::move(data.test.begin(), data.test.end(), std::back_inserter(sets));
        *out = new rrnn_dataset{rrnn::to_table(sets)};
    });
}

rrnn_status rrnn_dataset_synth_video(const rrnn_video_synth_params* params, rrnn_dataset** out) {
    return guarded([&] {
        require(params, "params");
        require(out, "out");
        rrnn::VideoSynthConfig cfg;
        cfg.subjects = params->subjects;
        cfg.tracks_per_subject = params->tracks_per_subject;
        cfg.frames = params->frames;
        cfg.dim = params->dim;
        cfg.noise_sigma = params->noise_sigma;
        cfg.walk_step = params->walk_step;
        cfg.view_rotation = params->view_rotation;
        cfg.seed = params->seed;
        *out = new rrnn_dataset{rrnn::to_table(rrnn::synth_video_dataset(cfg))};
    });
}

rrnn_status rrnn_dataset_load(const char* path, rrnn_dataset** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new rrnn_dataset{rrnn::load_features(path)};
    });
}

rrnn_status rrnn_dataset_save(const rrnn_dataset* dataset, const char* path) {
    return guarded([&] {
        require(dataset, "dataset");
        require(path, "path");
        rrnn::save_features(path, dataset->table);
    });
}

rrnn_status rrnn_dataset_info(const rrnn_dataset* dataset, size_t* dim, size_t* records,
                              size_t* groups) {
    return guarded([&] {
        require(dataset, "dataset");
        if (dim) {
            *dim = dataset->table.dim;
        }
        if (records) {
            *records = dataset->table.records.size();
        }
        if (groups) {
            std::set<std::string> ids;
            for (const auto& rec : dataset->table.records) {
                ids.insert(rec.sample_id);
            }
            *groups = ids.size();
        }
    });
}

void rrnn_dataset_free(rrnn_dataset* dataset) {
    delete dataset;
}

void rrnn_train_config_defaults(rrnn_task task, rrnn_train_config* cfg) {
    if (cfg == nullptr) {
        return;
    }
    const rrnn::TaskConfig d =
        rrnn::TaskConfig::defaults(task == RRNN_TASK_VIDEO ? rrnn::Task::video : rrnn::Task::pose);
    const rrnn::TrainConfig& t = d.train;
    cfg->alpha = t.alpha;
    cfg->beta = t.beta;
    cfg->hidden = t.hidden;
    cfg->optimizer =
        t.optimizer == rrnn::OptimizerKind::sgd ? RRNN_OPTIMIZER_SGD : RRNN_OPTIMIZER_ADAM;
    cfg->learning_rate = t.learning_rate;
    cfg->momentum = t.momentum;
    cfg->adam_beta1 = t.adam_beta1;
    cfg->adam_beta2 = t.adam_beta2;
    cfg->adam_epsilon = t.adam_epsilon;
    cfg->batch_size = t.batch_size;
    cfg->epochs = t.epochs;
    cfg->seed = t.seed;
    cfg->init_scale = t.init_scale;
    cfg->threads = t.threads;
    cfg->clip_len = d.clip_len;
    cfg->include_frontal = d.include_frontal ? 1 : 0;
    cfg->subjects = RRNN_SUBJECTS_TRAIN;
}

rrnn_status rrnn_train(rrnn_task task, const rrnn_dataset* dataset, const rrnn_train_config* cfg,
                       rrnn_epoch_fn on_epoch, void* user, rrnn_model** out) {
    return guarded([&] {
        require(dataset, "dataset");
        require(cfg, "cfg");
        require(out, "out");
        const rrnn::TaskConfig tc = to_task_config(task, *cfg);
        rrnn::EpochCallback callback;
        if (on_epoch) {
            callback = [on_epoch, user](std::size_t epoch, const rrnn::EpochRecord& r) {
                on_epoch(user, epoch, r.f1, r.f2, r.f3, r.total);
            };
        }
        auto* model = new rrnn_model;
        try {
            if (task == RRNN_TASK_POSE) {
                model->model =
                    rrnn::train_pose_model(pose_subjects(dataset->table, cfg->subjects), tc,
                                           callback);
            } else {
                model->model = rrnn::train_video_model(
                    rrnn::group_video_tracks(dataset->table), tc, callback);
            }
        } catch (...) {
            delete model;
            throw;
        }
        *out = model;
    });
}

rrnn_status rrnn_model_save(const rrnn_model* model, const char* path) {
    return guarded([&] {
        require(model, "model");
        require(path, "path");
        rrnn::save_model(path, model->model);
    });
}

rrnn_status rrnn_model_load(const char* path, rrnn_model** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new rrnn_model{rrnn::load_model(path)};
    });
}

void rrnn_model_free(rrnn_model* model) {
    delete model;
}

rrnn_status rrnn_model_info(const rrnn_model* model, rrnn_task* task, size_t* d, size_t* h,
                            size_t* c) {
    return guarded([&] {
        require(model, "model");
        const auto& m = model->model;
        if (task) {
            *task = m.task == rrnn::Task::pose ? RRNN_TASK_POSE : RRNN_TASK_VIDEO;
        }
        if (d) {
            *d = m.params.input_dim();
        }
        if (h) {
            *h = m.params.hidden_dim();
        }
        if (c) {
            *c = m.params.classes();
        }
    });
}

rrnn_status rrnn_model_forward(const rrnn_model* model, const double* inputs, size_t steps,
                               double* hidden, double* decoded) {
    return guarded([&] {
        require(model, "model");
        require(inputs, "inputs");
        const auto& p = model->model.params;
        const std::size_t d = p.input_dim();
        const std::size_t h = p.hidden_dim();
        std::vector<rrnn::Vector> xs;
        xs.reserve(steps);
        for (std::size_t t = 0; t < steps; ++t) {
            xs.emplace_back(std::vector<double>(inputs + t * d, inputs + (t + 1) * d));
        }
        const rrnn::ForwardTrace trace = rrnn::forward(xs, p);
        for (std::size_t t = 0; t < steps; ++t) {
            if (hidden) {
                std::memcpy(hidden + t * h, trace.hidden[t].data(), h * sizeof(double));
            }
            if (decoded) {
                std::memcpy(decoded + t * d, trace.decoded[t].data(), d * sizeof(double));
            }
        }
    });
}

rrnn_status rrnn_model_embed(const rrnn_model* model, const double* feature, double* embedding) {
    return guarded([&] {
        require(model, "model");
        require(feature, "feature");
        require(embedding, "embedding");
        const auto& m = model->model;
        const std::size_t d = m.params.input_dim();
        const rrnn::Vector x(std::vector<double>(feature, feature + d));
        const rrnn::Embedding e = rrnn::embed(rrnn::build_pose_test_sequence(x, m.norm), m.params);
        std::memcpy(embedding, e.vector.data(), e.vector.size() * sizeof(double));
    });
}

void rrnn_eval_options_defaults(rrnn_eval_options* options) {
    if (options == nullptr) {
        return;
    }
    options->subjects = RRNN_SUBJECTS_TEST;
    options->gallery_pose = static_cast<int>(rrnn::PoseGrid::kFrontal);
    options->cross_pose = 0;
    options->k = 1;
    options->metric = RRNN_METRIC_EUCLIDEAN;
    options->trials = 10;
    options->seed = 0;
}

rrnn_status rrnn_evaluate(const rrnn_model* model, const rrnn_dataset* dataset,
                          const rrnn_eval_options* options, rrnn_report** out) {
    return guarded([&] {
        require(model, "model");
        require(dataset, "dataset");
        require(options, "options");
        require(out, "out");
        const auto& m = model->model;
        require_dims(m, dataset->table);
        if (m.task == rrnn::Task::pose) {
            *out = evaluate_pose(pose_subjects(dataset->table, options->subjects),
                                 rrnn::model_embedder(m.params, m.norm), *options, "RRNN");
            return;
        }
        const auto tracks = rrnn::group_video_tracks(dataset->table);
        const rrnn::VideoReport vr =
            rrnn::video_experiment(tracks, rrnn::video_classifier(m), options->trials,
                                   options->seed);
        auto* report = new rrnn_report;
        report->table = rrnn::format_video_report(vr);
        report->records = rrnn::video_records(vr);
        report->mean = vr.mean;
        report->stddev = vr.stddev;
        *out = report;
    });
}

rrnn_status rrnn_evaluate_raw(const rrnn_dataset* dataset, const rrnn_eval_options* options,
                              rrnn_report** out) {
    return guarded([&] {
        require(dataset, "dataset");
        require(options, "options");
        require(out, "out");
        *out = evaluate_pose(pose_subjects(dataset->table, options->subjects),
                             rrnn::raw_embedder(), *options, "raw");
    });
}

rrnn_status rrnn_ablate(rrnn_task task, const rrnn_dataset* dataset, const rrnn_train_config* base,
                        const rrnn_ablation_options* options, rrnn_report** out) {
    return guarded([&] {
        require(dataset, "dataset");
        require(base, "base");
        require(options, "options");
        require(out, "out");
        rrnn::AblationOptions ao;
        if (options->alpha_count > 0) {
            require(options->alphas, "alphas");
            ao.alphas.assign(options->alphas, options->alphas + options->alpha_count);
        } else {
            ao.alphas = {base->alpha};
        }
        if (options->beta_count > 0) {
            require(options->betas, "betas");
            ao.betas.assign(options->betas, options->betas + options->beta_count);
        } else {
            ao.betas = {base->beta};
        }
        ao.k = options->k;
        ao.metric = to_metric(options->metric);
        if (options->gallery_pose < 0) {
            throw rrnn::Error(rrnn::ErrorCode::out_of_range, "gallery pose must be 0..6");
        }
        ao.gallery_pose = static_cast<std::size_t>(options->gallery_pose);
        ao.video.trials = options->trials;
        ao.video.seed = options->seed;
        ao.video.train_tracks_per_subject = options->train_tracks_per_subject;

        const rrnn::TaskConfig tc = to_task_config(task, *base);
        rrnn::AblationReport ar;
        if (task == RRNN_TASK_POSE) {
            ar = rrnn::run_pose_ablation(
                rrnn::split_pose_subjects(rrnn::group_pose_sets(dataset->table)), tc, ao);
        } else {
            ar = rrnn::run_video_ablation(rrnn::group_video_tracks(dataset->table), tc, ao);
        }
        auto* report = new rrnn_report;
        report->table = rrnn::format_ablation(ar);
        report->records = rrnn::ablation_records(ar);
        report->rows = ar.rows;
        if (ar.raw_baseline) {
            report->mean = ar.raw_baseline->average;
        }
        *out = report;
    });
}

rrnn_status rrnn_report_table(const rrnn_report* report, char** text) {
    return guarded([&] {
        require(report, "report");
        require(text, "text");
        *text = duplicate(report->table);
    });
}

rrnn_status rrnn_report_records(const rrnn_report* report, char** text) {
    return guarded([&] {
        require(report, "report");
        require(text, "text");
        *text = duplicate(report->records);
    });
}

rrnn_status rrnn_report_summary(const rrnn_report* report, double* mean, double* stddev) {
    return guarded([&] {
        require(report, "report");
        if (mean) {
            *mean = report->mean;
        }
        if (stddev) {
            *stddev = report->stddev;
        }
    });
}

rrnn_status rrnn_report_row_count(const rrnn_report* report, size_t* rows) {
    return guarded([&] {
        require(report, "report");
        require(rows, "rows");
        *rows = report->rows.size();
    });
}

rrnn_status rrnn_report_row(const rrnn_report* report, size_t index, double* alpha, double* beta,
                            double* mean, double* stddev) {
    return guarded([&] {
        require(report, "report");
        if (index >= report->rows.size()) {
            throw rrnn::Error(rrnn::ErrorCode::out_of_range,
                              "report row " + std::to_string(index) + " out of range");
        }
        const auto& row = report->rows[index];
        if (alpha) {
            *alpha = row.alpha;
        }
        if (beta) {
            *beta = row.beta;
        }
        if (mean) {
            *mean = row.mean;
        }
        if (stddev) {
            *stddev = row.stddev;
        }
    });
}

void rrnn_report_free(rrnn_report* report) {
    delete report;
}

void rrnn_gradcheck_defaults(rrnn_gradcheck_options* options) {
    if (options == nullptr) {
        return;
    }
    const rrnn::GradCheckOptions d;
    *options = {d.input_dim, d.hidden_dim, d.classes, d.steps, d.seed, d.step, d.tolerance,
                nullptr};
}

rrnn_status rrnn_gradcheck(const rrnn_gradcheck_options* options, rrnn_gradcheck_result* result,
                           char** text) {
    return guarded([&] {
        require(options, "options");
        require(result, "result");
        rrnn::GradCheckOptions o;
        o.input_dim = options->input_dim;
        o.hidden_dim = options->hidden_dim;
        o.classes = options->classes;
        o.steps = options->steps;
        o.seed = options->seed;
        o.step = options->step;
        o.tolerance = options->tolerance;
        if (options->corrupt) {
            o.corrupt = std::string(options->corrupt);
        }
        const rrnn::GradCheckSummary s = rrnn::run_gradcheck(o);
        const auto& worst = s.cases[s.worst];
        *result = {};
        result->max_error = worst.result.max_error;
        result->worst_alpha = worst.alpha;
        result->worst_beta = worst.beta;
        std::strncpy(result->worst_param, worst.result.worst_param.c_str(),
                     sizeof(result->worst_param) - 1);
        result->worst_index = worst.result.worst_index;
        result->passed = s.passed ? 1 : 0;
        if (text) {
            *text = duplicate(rrnn::format_gradcheck(s));
        }
    });
}

}  // extern "C"
