#include "rrnn/model.hpp"

#include <cmath>
#include <string>

#include "rrnn/error.hpp"

namespace rrnn {

namespace {

void require_shape(const Matrix& m, std::size_t rows, std::size_t cols, const char* name) {
    if (m.rows() != rows || m.cols() != cols) {
        throw Error(ErrorCode::shape, std::string("parameter ") + name + " has shape " +
                                          m.shape() + ", expected " + std::to_string(rows) +
                                          "x" + std::to_string(cols));
    }
}

void require_len(const Vector& v, std::size_t len, const char* name) {
    if (v.size() != len) {
        throw Error(ErrorCode::shape, std::string(name) + " has length " +
                                          std::to_string(v.size()) + ", expected " +
                                          std::to_string(len));
    }
}

}  // namespace

ModelParams::ModelParams(std::size_t d, std::size_t h, std::size_t c)
    : U(h, d), W(h, h), b1(h), V(d, h), b2(d), G(c, h), b3(c) {
    validate();
}

void ModelParams::validate() const {
    const std::size_t d = input_dim();
    const std::size_t h = hidden_dim();
    const std::size_t c = classes();
    if (d == 0 || h == 0) {
        throw Error(ErrorCode::shape, "model dimensions must be positive (d=" +
                                          std::to_string(d) + ", h=" + std::to_string(h) + ")");
    }
    if (c == 1) {
        throw Error(ErrorCode::shape, "a class head needs at least 2 classes");
    }
    require_shape(W, h, h, "W");
    require_len(b1, h, "b1");
    require_shape(V, d, h, "V");
    require_len(b2, d, "b2");
    require_shape(G, c, c == 0 ? G.cols() : h, "G");
    require_len(b3, c, "b3");
}

std::array<ParamBlock, 7> ModelParams::blocks() {
    return {{{kParamNames[0], U.values()},
             {kParamNames[1], W.values()},
             {kParamNames[2], b1.values()},
             {kParamNames[3], V.values()},
             {kParamNames[4], b2.values()},
             {kParamNames[5], G.values()},
             {kParamNames[6], b3.values()}}};
}

std::array<ConstParamBlock, 7> ModelParams::blocks() const {
    return {{{kParamNames[0], U.values()},
             {kParamNames[1], W.values()},
             {kParamNames[2], b1.values()},
             {kParamNames[3], V.values()},
             {kParamNames[4], b2.values()},
             {kParamNames[5], G.values()},
             {kParamNames[6], b3.values()}}};
}

Vector encode_step(const Vector& x, const Vector& s_prev, const ModelParams& p) {
    Vector pre = matvec(p.U, x);
    axpy(1.0, matvec(p.W, s_prev), pre);
    axpy(1.0, p.b1, pre);
    return tanh_map(pre);
}

Vector decode_step(const Vector& s, const ModelParams& p) {
    Vector pre = matvec(p.V, s);
    axpy(1.0, p.b2, pre);
    return tanh_map(pre);
}

ForwardTrace forward(std::span<const Vector> inputs, const ModelParams& p) {
    if (inputs.empty()) {
        throw Error(ErrorCode::empty_input, "forward: empty input sequence");
    }
    ForwardTrace trace;
    trace.s0 = Vector(p.hidden_dim());
    trace.hidden.reserve(inputs.size());
    trace.decoded.reserve(inputs.size());
    const Vector* prev = &trace.s0;
    for (const Vector& x : inputs) {
        trace.hidden.push_back(encode_step(x, *prev, p));
        trace.decoded.push_back(decode_step(trace.hidden.back(), p));
        prev = &trace.hidden.back();
    }
    return trace;
}

ForwardTrace forward(const SequenceSample& sample, const ModelParams& p) {
    return forward(sample.inputs, p);
}

double loss_reconstruction(const ForwardTrace& trace, std::span<const Vector> targets) {
    if (targets.size() != trace.length()) {
        throw Error(ErrorCode::shape, "loss_reconstruction: " + std::to_string(targets.size()) +
                                          " targets for a trace of length " +
                                          std::to_string(trace.length()));
    }
    double f1 = 0.0;
    for (std::size_t t = 0; t < targets.size(); ++t) {
        f1 += frob_sq_diff(targets[t], trace.decoded[t]);
    }
    return f1;
}

double loss_sequence(const ForwardTrace& trace, const Vector& global_target) {
    return frob_sq_diff(global_target, mean_of(trace.decoded));
}

Vector class_posterior(const Vector& s, const ModelParams& p) {
    if (!p.has_head()) {
        throw Error(ErrorCode::no_head, "class_posterior: model has no class head");
    }
    Vector logits = matvec(p.G, s);
    axpy(1.0, p.b3, logits);
    return softmax(logits);
}

double loss_discriminative(const ForwardTrace& trace, std::size_t label, const ModelParams& p) {
    if (!p.has_head()) {
        throw Error(ErrorCode::no_head, "loss_discriminative: model has no class head");
    }
    if (label >= p.classes()) {
        throw Error(ErrorCode::out_of_range, "label " + std::to_string(label) +
                                                 " out of range for " +
                                                 std::to_string(p.classes()) + " classes");
    }
    double f3 = 0.0;
    for (const Vector& s : trace.hidden) {
        f3 -= std::log(class_posterior(s, p)[label]);
    }
    return f3;
}

void check_sample(const SequenceSample& sample, const ModelParams& p, double alpha, double beta) {
    if (sample.inputs.empty()) {
        throw Error(ErrorCode::empty_input, "sample has an empty input sequence");
    }
    for (const Vector& x : sample.inputs) {
        require_len(x, p.input_dim(), "input vector");
    }
    if (!sample.targets) {
        throw Error(ErrorCode::missing_field, "sample is missing field 'targets'");
    }
    if (sample.targets->size() != sample.inputs.size()) {
        throw Error(ErrorCode::shape, "sample has " + std::to_string(sample.targets->size()) +
                                          " targets for " +
                                          std::to_string(sample.inputs.size()) + " inputs");
    }
    for (const Vector& x : *sample.targets) {
        require_len(x, p.input_dim(), "target vector");
    }
    if (alpha > 0.0) {
        if (!sample.global_target) {
            throw Error(ErrorCode::missing_field,
                        "alpha > 0 but sample is missing field 'global_target'");
        }
        require_len(*sample.global_target, p.input_dim(), "global_target");
    }
    if (beta > 0.0) {
        if (!sample.label) {
            throw Error(ErrorCode::missing_field, "beta > 0 but sample is missing field 'label'");
        }
        if (!p.has_head()) {
            throw Error(ErrorCode::no_head, "beta > 0 but model has no class head");
        }
        if (*sample.label >= p.classes()) {
            throw Error(ErrorCode::out_of_range, "label " + std::to_string(*sample.label) +
                                                     " out of range for " +
                                                     std::to_string(p.classes()) + " classes");
        }
    }
}

LossBreakdown loss_breakdown(const SequenceSample& sample, const ForwardTrace& trace,
                             const ModelParams& p, double alpha, double beta) {
    check_sample(sample, p, alpha, beta);
    LossBreakdown out;
    out.f1 = loss_reconstruction(trace, *sample.targets);
    if (alpha > 0.0) {
        out.f2 = loss_sequence(trace, *sample.global_target);
    }
    if (beta > 0.0) {
        out.f3 = loss_discriminative(trace, *sample.label, p);
    }
    out.total = out.f1 + alpha * out.f2 + beta * out.f3;
    return out;
}

LossBreakdown total_loss(const SequenceSample& sample, const ModelParams& p, double alpha,
                         double beta) {
    check_sample(sample, p, alpha, beta);
    return loss_breakdown(sample, forward(sample, p), p, alpha, beta);
}

}  // namespace rrnn
