/*
 * C interface to the recurrent regression library.
 *
 * All objects are opaque handles created by the library and released with
 * the matching *_free function. Every fallible call returns an rrnn_status;
 * on failure rrnn_last_error() describes the problem for the calling thread.
 * Strings returned through char** out-parameters are owned by the caller and
 * released with rrnn_string_free.
 */
#ifndef RRNN_RRNN_H_
#define RRNN_RRNN_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define RRNN_API __declspec(dllexport)
#else
#define RRNN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rrnn_status {
    RRNN_OK = 0,
    RRNN_ERR_INVALID_ARGUMENT = 1,
    RRNN_ERR_SHAPE = 2,
    RRNN_ERR_EMPTY_INPUT = 3,
    RRNN_ERR_MISSING_FIELD = 4,
    RRNN_ERR_OUT_OF_RANGE = 5,
    RRNN_ERR_NO_HEAD = 6,
    RRNN_ERR_PARSE = 7,
    RRNN_ERR_IO = 8,
    RRNN_ERR_NUMERIC = 9,
    RRNN_ERR_INTERNAL = 10
} rrnn_status;

typedef enum rrnn_task { RRNN_TASK_POSE = 0, RRNN_TASK_VIDEO = 1 } rrnn_task;

typedef enum rrnn_optimizer { RRNN_OPTIMIZER_SGD = 0, RRNN_OPTIMIZER_ADAM = 1 } rrnn_optimizer;

typedef enum rrnn_metric { RRNN_METRIC_EUCLIDEAN = 0, RRNN_METRIC_COSINE = 1 } rrnn_metric;

/* Which subjects of a pose dataset an operation uses. The first half of the
 * distinct subjects (rounded up, in file order) is the training split. */
typedef enum rrnn_subjects {
    RRNN_SUBJECTS_TRAIN = 0,
    RRNN_SUBJECTS_TEST = 1,
    RRNN_SUBJECTS_ALL = 2
} rrnn_subjects;

typedef struct rrnn_dataset rrnn_dataset;
typedef struct rrnn_model rrnn_model;
typedef struct rrnn_report rrnn_report;

RRNN_API const char* rrnn_version(void);
RRNN_API const char* rrnn_last_error(void);
RRNN_API const char* rrnn_status_name(rrnn_status status);
RRNN_API void rrnn_string_free(char* text);

/* ---- datasets ---------------------------------------------------------- */

typedef struct rrnn_pose_synth_params {
    size_t subjects;
    size_t dim;
    size_t sessions;
    double noise_sigma;
    double pose_rotation;
    double pose_shift;
    uint64_t seed;
} rrnn_pose_synth_params;

typedef struct rrnn_video_synth_params {
    size_t subjects;
    size_t tracks_per_subject;
    size_t frames;
    size_t dim;
    double noise_sigma;
    double walk_step;
    double view_rotation;
    uint64_t seed;
} rrnn_video_synth_params;

RRNN_API void rrnn_pose_synth_defaults(rrnn_pose_synth_params* params);
RRNN_API void rrnn_video_synth_defaults(rrnn_video_synth_params* params);

RRNN_API rrnn_status rrnn_dataset_synth_pose(const rrnn_pose_synth_params* params,
                                             rrnn_dataset** out);
RRNN_API rrnn_status rrnn_dataset_synth_video(const rrnn_video_synth_params* params,
                                              rrnn_dataset** out);
RRNN_API rrnn_status rrnn_dataset_load(const char* path, rrnn_dataset** out);
RRNN_API rrnn_status rrnn_dataset_save(const rrnn_dataset* dataset, const char* path);
/* groups: number of distinct sample ids (pose capture sets or video tracks). */
RRNN_API rrnn_status rrnn_dataset_info(const rrnn_dataset* dataset, size_t* dim,
                                       size_t* records, size_t* groups);
RRNN_API void rrnn_dataset_free(rrnn_dataset* dataset);

/* ---- training ---------------------------------------------------------- */

typedef struct rrnn_train_config {
    double alpha;
    double beta;
    size_t hidden;
    rrnn_optimizer optimizer;
    double learning_rate;
    double momentum;
    double adam_beta1;
    double adam_beta2;
    double adam_epsilon;
    size_t batch_size;
    size_t epochs;
    uint64_t seed;
    double init_scale;
    size_t threads;
    size_t clip_len;
    int include_frontal;
    rrnn_subjects subjects; /* pose only */
} rrnn_train_config;

/* pose: alpha 0.1, beta 0. video: alpha 0, beta 1. */
RRNN_API void rrnn_train_config_defaults(rrnn_task task, rrnn_train_config* cfg);

/* Called after every epoch with the 1-based epoch number and the mean
 * pre-update losses of that epoch. */
typedef void (*rrnn_epoch_fn)(void* user, size_t epoch, double f1, double f2, double f3,
                              double total);

RRNN_API rrnn_status rrnn_train(rrnn_task task, const rrnn_dataset* dataset,
                                const rrnn_train_config* cfg, rrnn_epoch_fn on_epoch,
                                void* user, rrnn_model** out);

/* ---- models ------------------------------------------------------------ */

RRNN_API rrnn_status rrnn_model_save(const rrnn_model* model, const char* path);
RRNN_API rrnn_status rrnn_model_load(const char* path, rrnn_model** out);
RRNN_API void rrnn_model_free(rrnn_model* model);
RRNN_API rrnn_status rrnn_model_info(const rrnn_model* model, rrnn_task* task, size_t* d,
                                     size_t* h, size_t* c);

/* Runs the encoder-decoder on `steps` already-normalized input vectors
 * (row-major steps×d). `hidden` (steps×h) and `decoded` (steps×d) may be
 * NULL. */
RRNN_API rrnn_status rrnn_model_forward(const rrnn_model* model, const double* inputs,
                                        size_t steps, double* hidden, double* decoded);

/* Mean-hidden-state embedding (length h) of one raw still-image feature. */
RRNN_API rrnn_status rrnn_model_embed(const rrnn_model* model, const double* feature,
                                      double* embedding);

/* ---- evaluation -------------------------------------------------------- */

typedef struct rrnn_eval_options {
    rrnn_subjects subjects; /* pose */
    int gallery_pose;       /* pose index 0..6, 3 is frontal */
    int cross_pose;         /* pose: full gallery sweep */
    size_t k;
    rrnn_metric metric;
    size_t trials; /* video */
    uint64_t seed; /* video */
} rrnn_eval_options;

RRNN_API void rrnn_eval_options_defaults(rrnn_eval_options* options);

RRNN_API rrnn_status rrnn_evaluate(const rrnn_model* model, const rrnn_dataset* dataset,
                                   const rrnn_eval_options* options, rrnn_report** out);
/* Nearest neighbor on raw features (pose only). */
RRNN_API rrnn_status rrnn_evaluate_raw(const rrnn_dataset* dataset,
                                       const rrnn_eval_options* options, rrnn_report** out);

typedef struct rrnn_ablation_options {
    const double* alphas;
    size_t alpha_count;
    const double* betas;
    size_t beta_count;
    size_t k;
    rrnn_metric metric;
    int gallery_pose;
    size_t trials;
    uint64_t seed;
    size_t train_tracks_per_subject;
} rrnn_ablation_options;

/* Trains and evaluates once per (alpha, beta) grid point from the same seed.
 * pose: train split vs. test split; video: retrained per random trial. */
RRNN_API rrnn_status rrnn_ablate(rrnn_task task, const rrnn_dataset* dataset,
                                 const rrnn_train_config* base,
                                 const rrnn_ablation_options* options, rrnn_report** out);

RRNN_API rrnn_status rrnn_report_table(const rrnn_report* report, char** text);
RRNN_API rrnn_status rrnn_report_records(const rrnn_report* report, char** text);
/* Headline accuracy: pose average, mean over gallery rows for cross-pose,
 * trial mean and standard deviation for video. */
RRNN_API rrnn_status rrnn_report_summary(const rrnn_report* report, double* mean,
                                         double* stddev);
RRNN_API rrnn_status rrnn_report_row_count(const rrnn_report* report, size_t* rows);
RRNN_API rrnn_status rrnn_report_row(const rrnn_report* report, size_t index, double* alpha,
                                     double* beta, double* mean, double* stddev);
RRNN_API void rrnn_report_free(rrnn_report* report);

/* ---- gradient check ---------------------------------------------------- */

typedef struct rrnn_gradcheck_options {
    size_t input_dim;
    size_t hidden_dim;
    size_t classes;
    size_t steps;
    uint64_t seed;
    double step;
    double tolerance;
    const char* corrupt; /* parameter name such as "dW", or NULL */
} rrnn_gradcheck_options;

typedef struct rrnn_gradcheck_result {
    double max_error;
    double worst_alpha;
    double worst_beta;
    char worst_param[8];
    size_t worst_index;
    int passed;
} rrnn_gradcheck_result;

RRNN_API void rrnn_gradcheck_defaults(rrnn_gradcheck_options* options);
/* Checks every (alpha, beta) in {0, 0.1, 1}^2. `text` may be NULL. */
RRNN_API rrnn_status rrnn_gradcheck(const rrnn_gradcheck_options* options,
                                    rrnn_gradcheck_result* result, char** text);

#ifdef __cplusplus
}
#endif

#endif /* RRNN_RRNN_H_ */
