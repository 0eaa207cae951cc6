#include "rrnn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include "rrnn/error.hpp"

namespace rrnn {

namespace {

constexpr std::uint64_t kShuffleStream = 0x9E3779B97F4A7C15ULL;

void fill_uniform(std::span<double> values, double bound, std::mt19937_64& rng) {
    if (bound == 0.0) {
        std::fill(values.begin(), values.end(), 0.0);
        return;
    }
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& x : values) {
        x = dist(rng);
    }
}

std::size_t infer_classes(std::span<const SequenceSample> dataset, const TrainConfig& cfg) {
    if (cfg.classes) {
        return *cfg.classes;
    }
    if (cfg.beta <= 0.0) {
        return 0;
    }
    std::size_t top = 0;
    for (const auto& sample : dataset) {
        if (!sample.label) {
            throw Error(ErrorCode::missing_field,
                        "beta > 0 but a training sample is missing field 'label'");
        }
        top = std::max(top, *sample.label + 1);
    }
    return std::max<std::size_t>(top, 2);
}

void add_loss(EpochRecord& acc, const LossBreakdown& loss) {
    acc.f1 += loss.f1;
    acc.f2 += loss.f2;
    acc.f3 += loss.f3;
    acc.total += loss.total;
}

}  // namespace

std::string_view to_string(OptimizerKind kind) {
    return kind == OptimizerKind::sgd ? "sgd" : "adam";
}

OptimizerKind parse_optimizer(std::string_view name) {
    if (name == "sgd") {
        return OptimizerKind::sgd;
    }
    if (name == "adam") {
        return OptimizerKind::adam;
    }
    throw Error(ErrorCode::invalid_argument,
                "unknown optimizer '" + std::string(name) + "' (expected sgd or adam)");
}

void TrainConfig::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::invalid_argument, msg); };
    if (!(alpha >= 0.0) || !(beta >= 0.0)) {
        fail("alpha and beta must be non-negative");
    }
    if (hidden == 0) {
        fail("hidden size must be at least 1");
    }
    if (!(learning_rate >= 0.0)) {
        fail("learning rate must be non-negative");
    }
    if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
        fail("adam betas must lie in (0, 1)");
    }
    if (!(adam_epsilon > 0.0)) {
        fail("adam epsilon must be positive");
    }
    if (!(momentum >= 0.0 && momentum < 1.0)) {
        fail("momentum must lie in [0, 1)");
    }
    if (batch_size == 0) {
        fail("batch size must be at least 1");
    }
    if (epochs == 0) {
        fail("epochs must be at least 1");
    }
    if (!(init_scale >= 0.0)) {
        fail("init scale must be non-negative");
    }
    if (threads == 0) {
        fail("threads must be at least 1");
    }
    if (classes && *classes == 1) {
        fail("a class head needs at least 2 classes");
    }
}

ModelParams init_params(std::size_t d, std::size_t h, std::size_t c, std::uint64_t seed,
                        double init_scale) {
    ModelParams p(d, h, c);
    std::mt19937_64 rng(seed);
    for (Matrix* m : {&p.U, &p.W, &p.V, &p.G}) {
        const double fan_in = static_cast<double>(m->cols());
        fill_uniform(m->values(), init_scale / std::sqrt(fan_in), rng);
    }
    return p;
}

SgdState make_sgd_state(const ModelParams& p) {
    return SgdState{Gradients::zeros_like(p)};
}

AdamState make_adam_state(const ModelParams& p) {
    return AdamState{Gradients::zeros_like(p), Gradients::zeros_like(p)};
}

void sgd_step(ModelParams& p, const Gradients& g, double lr, double momentum, SgdState& state) {
    if (!g.congruent_with(p) || !state.velocity.congruent_with(p)) {
        throw Error(ErrorCode::shape, "sgd_step: gradient or state shape does not match model");
    }
    auto params = p.blocks();
    const auto grads = g.blocks();
    auto velocity = state.velocity.blocks();
    for (std::size_t b = 0; b < params.size(); ++b) {
        for (std::size_t i = 0; i < params[b].values.size(); ++i) {
            double& v = velocity[b].values[i];
            v = momentum * v - lr * grads[b].values[i];
            params[b].values[i] += v;
        }
    }
}

void adam_step(ModelParams& p, const Gradients& g, AdamState& state, double lr, double beta1,
               double beta2, double eps, std::size_t step) {
    if (step == 0) {
        throw Error(ErrorCode::invalid_argument, "adam_step: step count starts at 1");
    }
    if (!g.congruent_with(p) || !state.first.congruent_with(p) ||
        !state.second.congruent_with(p)) {
        throw Error(ErrorCode::shape, "adam_step: gradient or state shape does not match model");
    }
    const double n = static_cast<double>(step);
    const double correct1 = 1.0 - std::pow(beta1, n);
    const double correct2 = 1.0 - std::pow(beta2, n);
    auto params = p.blocks();
    const auto grads = g.blocks();
    auto first = state.first.blocks();
    auto second = state.second.blocks();
    for (std::size_t b = 0; b < params.size(); ++b) {
        for (std::size_t i = 0; i < params[b].values.size(); ++i) {
            const double gi = grads[b].values[i];
            double& m = first[b].values[i];
            double& v = second[b].values[i];
            m = beta1 * m + (1.0 - beta1) * gi;
            v = beta2 * v + (1.0 - beta2) * gi * gi;
            const double m_hat = m / correct1;
            const double v_hat = v / correct2;
            params[b].values[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
    }
}

BatchResult batch_gradient(std::span<const SequenceSample> dataset,
                           std::span<const std::size_t> indices, const ModelParams& p,
                           double alpha, double beta, std::size_t threads) {
    if (indices.empty()) {
        throw Error(ErrorCode::empty_input, "batch_gradient: empty batch");
    }
    const std::size_t workers = std::clamp<std::size_t>(threads, 1, indices.size());
    std::vector<BatchResult> partial(workers, BatchResult{Gradients::zeros_like(p), {}});

    auto run = [&](std::size_t worker) {
        const std::size_t begin = worker * indices.size() / workers;
        const std::size_t end = (worker + 1) * indices.size() / workers;
        for (std::size_t k = begin; k < end; ++k) {
            const SequenceSample& sample = dataset[indices[k]];
            const ForwardTrace trace = forward(sample, p);
            add_loss(partial[worker].loss, loss_breakdown(sample, trace, p, alpha, beta));
            partial[worker].gradient.accumulate(backward(sample, p, trace, alpha, beta));
        }
    };

    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers - 1);
        for (std::size_t w = 1; w < workers; ++w) {
            pool.emplace_back(run, w);
        }
        run(0);
    }

    BatchResult out = std::move(partial[0]);
    for (std::size_t w = 1; w < workers; ++w) {
        out.gradient.accumulate(partial[w].gradient);
        out.loss.f1 += partial[w].loss.f1;
        out.loss.f2 += partial[w].loss.f2;
        out.loss.f3 += partial[w].loss.f3;
        out.loss.total += partial[w].loss.total;
    }
    out.gradient.scale(1.0 / static_cast<double>(indices.size()));
    return out;
}

TrainResult train(std::span<const SequenceSample> dataset, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
    cfg.validate();
    if (dataset.empty()) {
        throw Error(ErrorCode::empty_input, "train: empty dataset");
    }
    if (dataset.front().inputs.empty()) {
        throw Error(ErrorCode::empty_input, "train: sample 0 has an empty input sequence");
    }
    const std::size_t d = dataset.front().inputs.front().size();
    const std::size_t c = infer_classes(dataset, cfg);
    return train_from(dataset, cfg, init_params(d, cfg.hidden, c, cfg.seed, cfg.init_scale),
                      on_epoch);
}

TrainResult train_from(std::span<const SequenceSample> dataset, const TrainConfig& cfg,
                       ModelParams params, const EpochCallback& on_epoch) {
    cfg.validate();
    params.validate();
    if (dataset.empty()) {
        throw Error(ErrorCode::empty_input, "train: empty dataset");
    }
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        try {
            check_sample(dataset[i], params, cfg.alpha, cfg.beta);
        } catch (const Error& e) {
            throw Error(e.code(), "training sample " + std::to_string(i) + ": " + e.what());
        }
    }

    std::mt19937_64 shuffle_rng(cfg.seed ^ kShuffleStream);
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    SgdState sgd = make_sgd_state(params);
    AdamState adam = make_adam_state(params);
    std::size_t step = 0;

    TrainResult result;
    result.history.reserve(cfg.epochs);
    const double n = static_cast<double>(dataset.size());
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        EpochRecord record;
        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
            const std::size_t len = std::min(cfg.batch_size, order.size() - begin);
            const std::span<const std::size_t> batch(order.data() + begin, len);
            BatchResult br = batch_gradient(dataset, batch, params, cfg.alpha, cfg.beta,
                                            cfg.threads);
            record.f1 += br.loss.f1;
            record.f2 += br.loss.f2;
            record.f3 += br.loss.f3;
            record.total += br.loss.total;
            ++step;
            if (cfg.optimizer == OptimizerKind::sgd) {
                sgd_step(params, br.gradient, cfg.learning_rate, cfg.momentum, sgd);
            } else {
                adam_step(params, br.gradient, adam, cfg.learning_rate, cfg.adam_beta1,
                          cfg.adam_beta2, cfg.adam_epsilon, step);
            }
        }
        record.f1 /= n;
        record.f2 /= n;
        record.f3 /= n;
        record.total /= n;
        if (!std::isfinite(record.total)) {
            throw Error(ErrorCode::numeric,
                        "non-finite training loss at epoch " + std::to_string(epoch + 1));
        }
        result.history.push_back(record);
        if (on_epoch) {
            on_epoch(epoch + 1, record);
        }
    }
    if (!std::ranges::all_of(params.blocks(),
                             [](const ParamBlock& b) { return all_finite(b.values); })) {
        throw Error(ErrorCode::numeric, "training produced non-finite parameters");
    }
    result.params = std::move(params);
    return result;
}

}  // namespace rrnn
