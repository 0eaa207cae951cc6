#ifndef RRNN_BPTT_HPP_
#define RRNN_BPTT_HPP_

#include <array>
#include <cstddef>
#include <string>

#include "rrnn/model.hpp"

namespace rrnn {

// Gradient of the objective with respect to every ModelParams tensor.
struct Gradients {
    Matrix dU;
    Matrix dW;
    Vector db1;
    Matrix dV;
    Vector db2;
    Matrix dG;
    Vector db3;

    Gradients() = default;
    static Gradients zeros_like(const ModelParams& p);

    // Same order and names as ModelParams::blocks().
    std::array<ParamBlock, 7> blocks();
    std::array<ConstParamBlock, 7> blocks() const;

    // this += scale · other
    void accumulate(const Gradients& other, double scale = 1.0);
    void scale(double factor);
    bool congruent_with(const ModelParams& p) const;
};

// Exact gradient of total_loss(sample, p, alpha, beta) by full backpropagation
// through time. `trace` must be forward(sample, p).
Gradients backward(const SequenceSample& sample, const ModelParams& p, const ForwardTrace& trace,
                   double alpha, double beta);

struct GradCheckResult {
    double max_error = 0.0;  // max |a − n| / max(1, |a| + |n|)
    std::string worst_param;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

// Compares backward() against central differences of total_loss, one entry
// at a time.
GradCheckResult grad_check(const SequenceSample& sample, const ModelParams& p, double alpha,
                           double beta, double step);

// Same comparison against a caller-supplied analytic gradient (used to check
// that the detector fires on corrupted gradients).
GradCheckResult grad_check(const SequenceSample& sample, const ModelParams& p, double alpha,
                           double beta, double step, const Gradients& analytic);

}  // namespace rrnn

#endif  // RRNN_BPTT_HPP_
