#ifndef RRNN_MODEL_HPP_
#define RRNN_MODEL_HPP_

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rrnn/linalg.hpp"

namespace rrnn {

struct ParamBlock {
    std::string_view name;
    std::span<double> values;
};

struct ConstParamBlock {
    std::string_view name;
    std::span<const double> values;
};

inline constexpr std::array<std::string_view, 7> kParamNames = {"U", "W", "b1", "V",
                                                                 "b2", "G", "b3"};

// Learnable tensors of the recurrent encoder-decoder.
//
//   S_t = tanh(U x_t + W S_{t-1} + b1)     encoder,  U: h×d, W: h×h
//   x~_t = tanh(V S_t + b2)                decoder,  V: d×h
//   P(y | S_t) = softmax(G S_t + b3)       optional class head, G: c×h
//
// A model without a class head has c == 0 and empty G / b3. A head, when
// present, has at least two classes.
struct ModelParams {
    Matrix U;
    Matrix W;
    Vector b1;
    Matrix V;
    Vector b2;
    Matrix G;
    Vector b3;

    ModelParams() = default;
    // All-zero parameters of the given dimensions.
    ModelParams(std::size_t d, std::size_t h, std::size_t c);

    std::size_t input_dim() const noexcept { return U.cols(); }
    std::size_t hidden_dim() const noexcept { return U.rows(); }
    std::size_t classes() const noexcept { return G.rows(); }
    bool has_head() const noexcept { return G.rows() > 0; }

    // Throws Error(shape) if the tensors are not consistent with (d, h, c).
    void validate() const;

    // Blocks in the canonical order U, W, b1, V, b2, G, b3.
    std::array<ParamBlock, 7> blocks();
    std::array<ConstParamBlock, 7> blocks() const;

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// One training or evaluation unit.
struct SequenceSample {
    std::vector<Vector> inputs;
    std::optional<std::vector<Vector>> targets;
    std::optional<Vector> global_target;
    std::optional<std::size_t> label;

    std::size_t length() const noexcept { return inputs.size(); }
};

struct ForwardTrace {
    Vector s0;
    std::vector<Vector> hidden;
    std::vector<Vector> decoded;

    std::size_t length() const noexcept { return hidden.size(); }
};

struct LossBreakdown {
    double f1 = 0.0;
    double f2 = 0.0;
    double f3 = 0.0;
    double total = 0.0;
};

Vector encode_step(const Vector& x, const Vector& s_prev, const ModelParams& p);
Vector decode_step(const Vector& s, const ModelParams& p);

// Runs the encoder-decoder over the inputs starting from S_0 = 0.
ForwardTrace forward(std::span<const Vector> inputs, const ModelParams& p);
ForwardTrace forward(const SequenceSample& sample, const ModelParams& p);

// Σ_t ‖x^_t − x~_t‖²
double loss_reconstruction(const ForwardTrace& trace, std::span<const Vector> targets);
// ‖global − mean_t x~_t‖²
double loss_sequence(const ForwardTrace& trace, const Vector& global_target);
// Per-timestep softmax over classes.
Vector class_posterior(const Vector& s, const ModelParams& p);
// −Σ_t log P(label | S_t); supervision acts on hidden states only.
double loss_discriminative(const ForwardTrace& trace, std::size_t label, const ModelParams& p);

// f1 + α·f2 + β·f3 evaluated on an existing trace. f2 is only evaluated when
// α > 0 and f3 only when β > 0; inactive terms are reported as 0.
LossBreakdown loss_breakdown(const SequenceSample& sample, const ForwardTrace& trace,
                             const ModelParams& p, double alpha, double beta);
LossBreakdown total_loss(const SequenceSample& sample, const ModelParams& p, double alpha,
                         double beta);

// Checks that the sample is consistent with the model and carries every field
// the (α, β) objective needs.
void check_sample(const SequenceSample& sample, const ModelParams& p, double alpha, double beta);

}  // namespace rrnn

#endif  // RRNN_MODEL_HPP_
