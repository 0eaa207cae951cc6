#ifndef RRNN_TESTS_SUPPORT_HPP_
#define RRNN_TESTS_SUPPORT_HPP_

#include <gtest/gtest.h>

#include <cstdint>
#include <random>
#include <string>

#include "rrnn/error.hpp"
#include "rrnn/linalg.hpp"
#include "rrnn/model.hpp"

namespace rrnn::testing {

// Code of the Error raised by fn; records a failure if nothing is thrown.
template <typename F>
ErrorCode code_of(F&& fn, std::string* message = nullptr) {
    try {
        fn();
    } catch (const Error& e) {
        if (message) {
            *message = e.what();
        }
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorCode::invalid_argument;
}

inline Vector uniform_vector(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Vector v(n);
    for (double& x : v) {
        x = u(rng);
    }
    return v;
}

inline Matrix uniform_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng,
                             double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Matrix m(r, c);
    for (double& x : m.values()) {
        x = u(rng);
    }
    return m;
}

inline ModelParams random_params(std::size_t d, std::size_t h, std::size_t c, std::mt19937_64& rng,
                                 double scale = 0.6) {
    ModelParams p(d, h, c);
    for (auto block : p.blocks()) {
        std::uniform_real_distribution<double> u(-scale, scale);
        for (double& x : block.values) {
            x = u(rng);
        }
    }
    return p;
}

// A sample carrying every field, so any (α, β) objective applies.
inline SequenceSample random_sample(std::size_t d, std::size_t c, std::size_t steps,
                                    std::mt19937_64& rng) {
    SequenceSample s;
    std::vector<Vector> targets;
    for (std::size_t t = 0; t < steps; ++t) {
        s.inputs.push_back(uniform_vector(d, rng));
        targets.push_back(uniform_vector(d, rng, 0.9));
    }
    s.targets = std::move(targets);
    s.global_target = uniform_vector(d, rng, 0.9);
    if (c > 0) {
        s.label = std::uniform_int_distribution<std::size_t>(0, c - 1)(rng);
    }
    return s;
}

}  // namespace rrnn::testing

#endif  // RRNN_TESTS_SUPPORT_HPP_
