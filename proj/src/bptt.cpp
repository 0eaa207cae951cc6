#include "rrnn/bptt.hpp"

#include <algorithm>
#include <cmath>

#include "rrnn/error.hpp"

namespace rrnn {

Gradients Gradients::zeros_like(const ModelParams& p) {
    Gradients g;
    g.dU = Matrix(p.U.rows(), p.U.cols());
    g.dW = Matrix(p.W.rows(), p.W.cols());
    g.db1 = Vector(p.b1.size());
    g.dV = Matrix(p.V.rows(), p.V.cols());
    g.db2 = Vector(p.b2.size());
    g.dG = Matrix(p.G.rows(), p.G.cols());
    g.db3 = Vector(p.b3.size());
    return g;
}

std::array<ParamBlock, 7> Gradients::blocks() {
    return {{{kParamNames[0], dU.values()},
             {kParamNames[1], dW.values()},
             {kParamNames[2], db1.values()},
             {kParamNames[3], dV.values()},
             {kParamNames[4], db2.values()},
             {kParamNames[5], dG.values()},
             {kParamNames[6], db3.values()}}};
}

std::array<ConstParamBlock, 7> Gradients::blocks() const {
    return {{{kParamNames[0], dU.values()},
             {kParamNames[1], dW.values()},
             {kParamNames[2], db1.values()},
             {kParamNames[3], dV.values()},
             {kParamNames[4], db2.values()},
             {kParamNames[5], dG.values()},
             {kParamNames[6], db3.values()}}};
}

void Gradients::accumulate(const Gradients& other, double factor) {
    auto dst = blocks();
    auto src = other.blocks();
    for (std::size_t b = 0; b < dst.size(); ++b) {
        if (dst[b].values.size() != src[b].values.size()) {
            throw Error(ErrorCode::shape,
                        "gradient block " + std::string(dst[b].name) + " size mismatch");
        }
        for (std::size_t i = 0; i < dst[b].values.size(); ++i) {
            dst[b].values[i] += factor * src[b].values[i];
        }
    }
}

void Gradients::scale(double factor) {
    for (auto& block : blocks()) {
        for (double& x : block.values) {
            x *= factor;
        }
    }
}

bool Gradients::congruent_with(const ModelParams& p) const {
    const auto gb = blocks();
    const auto pb = p.blocks();
    for (std::size_t b = 0; b < gb.size(); ++b) {
        if (gb[b].values.size() != pb[b].values.size()) {
            return false;
        }
    }
    return true;
}

Gradients backward(const SequenceSample& sample, const ModelParams& p, const ForwardTrace& trace,
                   double alpha, double beta) {
    check_sample(sample, p, alpha, beta);
    const std::size_t steps = sample.length();
    if (trace.length() != steps || trace.decoded.size() != steps ||
        trace.s0.size() != p.hidden_dim()) {
        throw Error(ErrorCode::shape, "backward: trace of length " +
                                          std::to_string(trace.length()) +
                                          " does not belong to a sample of length " +
                                          std::to_string(steps));
    }

    Gradients g = Gradients::zeros_like(p);
    const auto& targets = *sample.targets;

    // f2 pulls the mean decoded output toward the global target; its residual
    // is shared equally by every timestep.
    Vector seq_residual(p.input_dim());
    if (alpha > 0.0) {
        seq_residual = sub(mean_of(trace.decoded), *sample.global_target);
        for (double& x : seq_residual) {
            x *= 2.0 * alpha / static_cast<double>(steps);
        }
    }

    Vector carry(p.hidden_dim());  // Wᵀ·dpre_{t+1}
    for (std::size_t t = steps; t-- > 0;) {
        const Vector& s_t = trace.hidden[t];
        const Vector& y_t = trace.decoded[t];

        Vector d_out = sub(y_t, targets[t]);
        for (double& x : d_out) {
            x *= 2.0;
        }
        axpy(1.0, seq_residual, d_out);
        const Vector d_dec = hadamard(d_out, tanh_prime_from_output(y_t));
        add_outer(g.dV, d_dec, s_t);
        axpy(1.0, d_dec, g.db2);

        Vector d_state = matvec_transposed(p.V, d_dec);
        axpy(1.0, carry, d_state);

        if (beta > 0.0) {
            Vector d_logits = class_posterior(s_t, p);
            d_logits[*sample.label] -= 1.0;
            for (double& x : d_logits) {
                x *= beta;
            }
            add_outer(g.dG, d_logits, s_t);
            axpy(1.0, d_logits, g.db3);
            axpy(1.0, matvec_transposed(p.G, d_logits), d_state);
        }

        const Vector d_pre = hadamard(d_state, tanh_prime_from_output(s_t));
        const Vector& s_prev = t == 0 ? trace.s0 : trace.hidden[t - 1];
        add_outer(g.dU, d_pre, sample.inputs[t]);
        add_outer(g.dW, d_pre, s_prev);
        axpy(1.0, d_pre, g.db1);
        carry = matvec_transposed(p.W, d_pre);
    }
    return g;
}

GradCheckResult grad_check(const SequenceSample& sample, const ModelParams& p, double alpha,
                           double beta, double step) {
    return grad_check(sample, p, alpha, beta, step,
                      backward(sample, p, forward(sample, p), alpha, beta));
}

GradCheckResult grad_check(const SequenceSample& sample, const ModelParams& p, double alpha,
                           double beta, double step, const Gradients& analytic) {
    if (!(step > 0.0)) {
        throw Error(ErrorCode::invalid_argument, "grad_check: step must be positive");
    }
    if (!analytic.congruent_with(p)) {
        throw Error(ErrorCode::shape, "grad_check: gradient shapes do not match the model");
    }
    GradCheckResult result;
    ModelParams probe = p;
    auto probe_blocks = probe.blocks();
    const auto grad_blocks = analytic.blocks();
    for (std::size_t b = 0; b < probe_blocks.size(); ++b) {
        auto values = probe_blocks[b].values;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + step;
            const double up = total_loss(sample, probe, alpha, beta).total;
            values[i] = saved - step;
            const double down = total_loss(sample, probe, alpha, beta).total;
            values[i] = saved;

            const double numeric = (up - down) / (2.0 * step);
            const double exact = grad_blocks[b].values[i];
            const double err =
                std::abs(exact - numeric) / std::max(1.0, std::abs(exact) + std::abs(numeric));
            if (result.worst_param.empty() || err > result.max_error) {
                result.max_error = err;
                result.worst_param = std::string(probe_blocks[b].name);
                result.worst_index = i;
                result.analytic = exact;
                result.numeric = numeric;
            }
        }
    }
    return result;
}

}  // namespace rrnn
