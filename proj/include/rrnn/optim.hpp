#ifndef RRNN_OPTIM_HPP_
#define RRNN_OPTIM_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rrnn/bptt.hpp"
#include "rrnn/model.hpp"

namespace rrnn {

enum class OptimizerKind { sgd, adam };

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view name);

struct TrainConfig {
    double alpha = 0.0;
    double beta = 0.0;
    std::size_t hidden = 64;
    OptimizerKind optimizer = OptimizerKind::adam;
    double learning_rate = 1e-3;
    double momentum = 0.0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::size_t batch_size = 8;
    std::size_t epochs = 200;
    std::uint64_t seed = 0;
    double init_scale = 1.0;
    // Worker threads for per-sample backward passes inside a batch. Results
    // are bit-reproducible only for a fixed thread count.
    std::size_t threads = 1;
    // Size of the class head. Unset: one class per distinct label when
    // beta > 0, no head otherwise.
    std::optional<std::size_t> classes;

    void validate() const;
};

struct EpochRecord {
    double f1 = 0.0;
    double f2 = 0.0;
    double f3 = 0.0;
    double total = 0.0;
};

using TrainHistory = std::vector<EpochRecord>;

struct TrainResult {
    ModelParams params;
    TrainHistory history;
};

// Weights i.i.d. uniform on ±init_scale/√fan_in, biases zero.
ModelParams init_params(std::size_t d, std::size_t h, std::size_t c, std::uint64_t seed,
                        double init_scale);

struct SgdState {
    Gradients velocity;
};

struct AdamState {
    Gradients first;
    Gradients second;
};

SgdState make_sgd_state(const ModelParams& p);
AdamState make_adam_state(const ModelParams& p);

// v ← μ·v − lr·g;  p ← p + v
void sgd_step(ModelParams& p, const Gradients& g, double lr, double momentum, SgdState& state);

// Bias-corrected Adam update; `step` is the 1-based update count.
void adam_step(ModelParams& p, const Gradients& g, AdamState& state, double lr, double beta1,
               double beta2, double eps, std::size_t step);

// Mean gradient and mean losses over a batch of samples.
struct BatchResult {
    Gradients gradient;
    EpochRecord loss;  // sums, not means
};

BatchResult batch_gradient(std::span<const SequenceSample> dataset,
                           std::span<const std::size_t> indices, const ModelParams& p,
                           double alpha, double beta, std::size_t threads);

using EpochCallback = std::function<void(std::size_t epoch, const EpochRecord&)>;

// Minimizes the mean of f1 + α·f2 + β·f3 over the dataset. Each history
// record averages the losses seen during that epoch, before each batch's
// update is applied.
TrainResult train(std::span<const SequenceSample> dataset, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

// Continues training from the supplied parameters.
TrainResult train_from(std::span<const SequenceSample> dataset, const TrainConfig& cfg,
                       ModelParams params, const EpochCallback& on_epoch = {});

}  // namespace rrnn

#endif  // RRNN_OPTIM_HPP_
