#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "rrnn/bptt.hpp"
#include "support.hpp"

using rrnn::ErrorCode;
using rrnn::Gradients;
using rrnn::ModelParams;
using rrnn::SequenceSample;
using rrnn::Vector;
using rrnn::testing::code_of;

namespace {

Gradients gradient(const SequenceSample& s, const ModelParams& p, double alpha, double beta) {
    return rrnn::backward(s, p, rrnn::forward(s, p), alpha, beta);
}

void expect_all_zero(const rrnn::ConstParamBlock& block) {
    for (double v : block.values) {
        EXPECT_EQ(v, 0.0) << block.name;
    }
}

// Closed-form gradient of a single step, written with plain loops. With
// S_0 = 0 the recurrent weight receives no gradient.
struct SingleStepOracle {
    std::vector<double> dU, dW, db1, dV, db2, dG, db3;

    SingleStepOracle(const SequenceSample& s, const ModelParams& p, double alpha, double beta) {
        const std::size_t d = p.input_dim();
        const std::size_t h = p.hidden_dim();
        const std::size_t c = p.classes();
        const Vector& x = s.inputs[0];
        const Vector& target = (*s.targets)[0];

        std::vector<double> hidden(h);
        for (std::size_t i = 0; i < h; ++i) {
            double z = p.b1[i];
            for (std::size_t j = 0; j < d; ++j) {
                z += p.U(i, j) * x[j];
            }
            hidden[i] = std::tanh(z);
        }
        std::vector<double> out(d);
        for (std::size_t i = 0; i < d; ++i) {
            double z = p.b2[i];
            for (std::size_t j = 0; j < h; ++j) {
                z += p.V(i, j) * hidden[j];
            }
            out[i] = std::tanh(z);
        }
        std::vector<double> class_err(c);
        if (c > 0) {
            std::vector<double> logits(c);
            double top = -1e300;
            for (std::size_t k = 0; k < c; ++k) {
                logits[k] = p.b3[k];
                for (std::size_t j = 0; j < h; ++j) {
                    logits[k] += p.G(k, j) * hidden[j];
                }
                top = std::max(top, logits[k]);
            }
            double sum = 0.0;
            for (double& l : logits) {
                l = std::exp(l - top);
                sum += l;
            }
            for (std::size_t k = 0; k < c; ++k) {
                class_err[k] = beta * (logits[k] / sum - (k == *s.label ? 1.0 : 0.0));
            }
        }

        std::vector<double> d_out(d);
        for (std::size_t i = 0; i < d; ++i) {
            double dy = 2.0 * (out[i] - target[i]);
            if (alpha > 0.0) {
                dy += 2.0 * alpha * (out[i] - (*s.global_target)[i]);
            }
            d_out[i] = dy * (1.0 - out[i] * out[i]);
        }
        dV.resize(d * h);
        db2 = d_out;
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < h; ++j) {
                dV[i * h + j] = d_out[i] * hidden[j];
            }
        }
        dG.resize(c * h);
        db3 = class_err;
        for (std::size_t k = 0; k < c; ++k) {
            for (std::size_t j = 0; j < h; ++j) {
                dG[k * h + j] = class_err[k] * hidden[j];
            }
        }
        db1.resize(h);
        dU.resize(h * d);
        dW.assign(h * h, 0.0);
        for (std::size_t j = 0; j < h; ++j) {
            double ds = 0.0;
            for (std::size_t i = 0; i < d; ++i) {
                ds += p.V(i, j) * d_out[i];
            }
            for (std::size_t k = 0; k < c; ++k) {
                ds += p.G(k, j) * class_err[k];
            }
            db1[j] = ds * (1.0 - hidden[j] * hidden[j]);
            for (std::size_t i = 0; i < d; ++i) {
                dU[j * d + i] = db1[j] * x[i];
            }
        }
    }

    std::vector<const std::vector<double>*> blocks() const {
        return {&dU, &dW, &db1, &dV, &db2, &dG, &db3};
    }
};

}  // namespace

TEST(Backward, ZeroModelAndTargetsGiveZeroGradient) {
    const ModelParams p(3, 4, 0);
    SequenceSample s;
    s.inputs = {Vector{0.1, 0.2, 0.3}, Vector{-0.4, 0.5, 0.0}};
    s.targets = std::vector<Vector>{Vector(3), Vector(3)};
    const Gradients g = gradient(s, p, 0.0, 0.0);
    for (const auto& block : g.blocks()) {
        expect_all_zero(block);
    }
}

TEST(Backward, MatchesSingleStepClosedForm) {
    std::mt19937_64 rng(8);
    for (double alpha : {0.0, 0.1, 1.0}) {
        for (double beta : {0.0, 0.1, 1.0}) {
            const ModelParams p = rrnn::testing::random_params(3, 4, 3, rng);
            const SequenceSample s = rrnn::testing::random_sample(3, 3, 1, rng);
            const Gradients g = gradient(s, p, alpha, beta);
            const SingleStepOracle oracle(s, p, alpha, beta);
            const auto blocks = g.blocks();
            const auto expected = oracle.blocks();
            for (std::size_t b = 0; b < blocks.size(); ++b) {
                ASSERT_EQ(blocks[b].values.size(), expected[b]->size()) << blocks[b].name;
                for (std::size_t i = 0; i < expected[b]->size(); ++i) {
                    EXPECT_NEAR(blocks[b].values[i], (*expected[b])[i], 1e-13)
                        << blocks[b].name << "[" << i << "] alpha=" << alpha
                        << " beta=" << beta;
                }
            }
        }
    }
}

TEST(Backward, AgreesWithFiniteDifferencesOnSmallModel) {
    std::mt19937_64 rng(9);
    const ModelParams p = rrnn::testing::random_params(3, 4, 3, rng);
    const SequenceSample s = rrnn::testing::random_sample(3, 3, 4, rng);
    for (double alpha : {0.0, 0.1, 1.0}) {
        for (double beta : {0.0, 0.1, 1.0}) {
            const auto r = rrnn::grad_check(s, p, alpha, beta, 1e-5);
            EXPECT_LE(r.max_error, 1e-6) << "alpha=" << alpha << " beta=" << beta << " worst "
                                         << r.worst_param << "[" << r.worst_index << "]";
        }
    }
}

TEST(Backward, RandomizedGradientCheck) {
    std::mt19937_64 rng(10);
    std::uniform_int_distribution<std::size_t> dim(1, 8);
    std::uniform_int_distribution<std::size_t> cls(2, 8);
    std::uniform_int_distribution<std::size_t> len(1, 6);
    std::uniform_real_distribution<double> weight(0.0, 2.0);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t d = dim(rng);
        const std::size_t h = dim(rng);
        const std::size_t c = trial % 4 == 0 ? 0 : cls(rng);
        const ModelParams p = rrnn::testing::random_params(d, h, c, rng);
        const SequenceSample s = rrnn::testing::random_sample(d, c, len(rng), rng);
        const double alpha = weight(rng);
        const double beta = c == 0 ? 0.0 : weight(rng);
        const auto r = rrnn::grad_check(s, p, alpha, beta, 1e-5);
        EXPECT_LE(r.max_error, 1e-4) << "d=" << d << " h=" << h << " c=" << c;
    }
}

TEST(Backward, AdditiveInLossWeights) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> weight(0.0, 3.0);
    for (int trial = 0; trial < 25; ++trial) {
        const ModelParams p = rrnn::testing::random_params(4, 5, 3, rng);
        const SequenceSample s = rrnn::testing::random_sample(4, 3, 5, rng);
        const double alpha = weight(rng);
        const double beta = weight(rng);
        const Gradients base = gradient(s, p, 0.0, 0.0);
        Gradients seq_only = gradient(s, p, 1.0, 0.0);
        seq_only.accumulate(base, -1.0);
        Gradients cls_only = gradient(s, p, 0.0, 1.0);
        cls_only.accumulate(base, -1.0);

        Gradients expected = base;
        expected.accumulate(seq_only, alpha);
        expected.accumulate(cls_only, beta);
        const Gradients got = gradient(s, p, alpha, beta);
        const auto a = got.blocks();
        const auto b = expected.blocks();
        for (std::size_t k = 0; k < a.size(); ++k) {
            for (std::size_t i = 0; i < a[k].values.size(); ++i) {
                EXPECT_NEAR(a[k].values[i], b[k].values[i], 1e-10) << a[k].name;
            }
        }
    }
}

TEST(Backward, HeadUntouchedByReconstructionAndDecoderUntouchedByClassLoss) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        const ModelParams p = rrnn::testing::random_params(3, 4, 3, rng);
        const SequenceSample s = rrnn::testing::random_sample(3, 3, 4, rng);
        const Gradients recon = gradient(s, p, 0.0, 0.0);
        expect_all_zero(recon.blocks()[5]);
        expect_all_zero(recon.blocks()[6]);

        Gradients cls = gradient(s, p, 0.0, 1.0);
        cls.accumulate(recon, -1.0);
        expect_all_zero(std::as_const(cls).blocks()[3]);
        expect_all_zero(std::as_const(cls).blocks()[4]);
    }
}

TEST(Backward, RejectsMismatchedTrace) {
    std::mt19937_64 rng(13);
    const ModelParams p = rrnn::testing::random_params(3, 4, 0, rng);
    const SequenceSample s = rrnn::testing::random_sample(3, 0, 4, rng);
    const SequenceSample shorter = rrnn::testing::random_sample(3, 0, 2, rng);
    EXPECT_EQ(code_of([&] { rrnn::backward(s, p, rrnn::forward(shorter, p), 0.0, 0.0); }),
              ErrorCode::shape);
}

TEST(GradCheck, ZeroModelReportsZero) {
    const ModelParams p(3, 4, 2);
    SequenceSample s;
    s.inputs = {Vector{0.1, 0.2, 0.3}};
    s.targets = std::vector<Vector>{Vector(3)};
    EXPECT_EQ(rrnn::grad_check(s, p, 0.0, 0.0, 1e-5).max_error, 0.0);
}

TEST(GradCheck, DetectsCorruptedRecurrentGradient) {
    std::mt19937_64 rng(14);
    const ModelParams p = rrnn::testing::random_params(3, 4, 3, rng);
    const SequenceSample s = rrnn::testing::random_sample(3, 3, 4, rng);
    Gradients g = gradient(s, p, 0.1, 1.0);
    g.dW(0, 0) += 1.0;
    const auto r = rrnn::grad_check(s, p, 0.1, 1.0, 1e-5, g);
    EXPECT_GE(r.max_error, 0.1);
    EXPECT_EQ(r.worst_param, "W");
    EXPECT_EQ(r.worst_index, 0u);
}

TEST(GradCheck, RejectsNonPositiveStep) {
    std::mt19937_64 rng(15);
    const ModelParams p = rrnn::testing::random_params(2, 2, 0, rng);
    const SequenceSample s = rrnn::testing::random_sample(2, 0, 2, rng);
    EXPECT_EQ(code_of([&] { rrnn::grad_check(s, p, 0.0, 0.0, 0.0); }),
              ErrorCode::invalid_argument);
}

TEST(Gradients, ZerosLikeIsCongruent) {
    const ModelParams p(3, 4, 2);
    const Gradients g = Gradients::zeros_like(p);
    EXPECT_TRUE(g.congruent_with(p));
    EXPECT_FALSE(g.congruent_with(ModelParams(3, 5, 2)));
    const auto names = g.blocks();
    for (std::size_t i = 0; i < names.size(); ++i) {
        EXPECT_EQ(names[i].name, rrnn::kParamNames[i]);
    }
}
