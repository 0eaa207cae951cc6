#include "rrnn/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "rrnn/error.hpp"

namespace rrnn {

namespace {

std::string vec_shape(const Vector& v) {
    return "[" + std::to_string(v.size()) + "]";
}

void require_same_length(const Vector& a, const Vector& b, const char* op) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::shape, std::string(op) + ": length mismatch " +
                                          vec_shape(a) + " vs " + vec_shape(b));
    }
}

}  // namespace

void Vector::fill(double value) {
    std::fill(data_.begin(), data_.end(), value);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw Error(ErrorCode::shape, "matrix data length " + std::to_string(data_.size()) +
                                          " does not match shape " + shape());
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
    data_.reserve(rows_ * cols_);
    for (const auto& row : rows) {
        if (row.size() != cols_) {
            throw Error(ErrorCode::shape, "ragged matrix initializer");
        }
        data_.insert(data_.end(), row.begin(), row.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

std::string Matrix::shape() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
}

void Matrix::fill(double value) {
    std::fill(data_.begin(), data_.end(), value);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw Error(ErrorCode::shape, "matmul: inner dimensions disagree " + a.shape() +
                                          " x " + b.shape());
    }
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t l = 0; l < a.cols(); ++l) {
            const double ail = a(i, l);
            for (std::size_t j = 0; j < b.cols(); ++j) {
                c(i, j) += ail * b(l, j);
            }
        }
    }
    return c;
}

Vector matvec(const Matrix& a, const Vector& v) {
    if (a.cols() != v.size()) {
        throw Error(ErrorCode::shape,
                    "matvec: " + a.shape() + " cannot multiply " + vec_shape(v));
    }
    Vector out(a.rows());
    const double* row = a.data();
    for (std::size_t i = 0; i < a.rows(); ++i, row += a.cols()) {
        double acc = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) {
            acc += row[j] * v[j];
        }
        out[i] = acc;
    }
    return out;
}

Vector matvec_transposed(const Matrix& a, const Vector& v) {
    if (a.rows() != v.size()) {
        throw Error(ErrorCode::shape, "matvec_transposed: " + a.shape() +
                                          " (transposed) cannot multiply " + vec_shape(v));
    }
    Vector out(a.cols());
    const double* row = a.data();
    for (std::size_t i = 0; i < a.rows(); ++i, row += a.cols()) {
        const double vi = v[i];
        for (std::size_t j = 0; j < a.cols(); ++j) {
            out[j] += row[j] * vi;
        }
    }
    return out;
}

void add_outer(Matrix& m, const Vector& a, const Vector& b, double scale) {
    if (m.rows() != a.size() || m.cols() != b.size()) {
        throw Error(ErrorCode::shape, "add_outer: " + m.shape() + " vs outer " + vec_shape(a) +
                                          vec_shape(b));
    }
    double* row = m.data();
    for (std::size_t i = 0; i < m.rows(); ++i, row += m.cols()) {
        const double ai = scale * a[i];
        for (std::size_t j = 0; j < m.cols(); ++j) {
            row[j] += ai * b[j];
        }
    }
}

Vector tanh_map(const Vector& v) {
    Vector out(v.size());
    std::transform(v.begin(), v.end(), out.begin(), [](double x) { return std::tanh(x); });
    return out;
}

Vector tanh_prime_from_output(const Vector& y) {
    Vector out(y.size());
    std::transform(y.begin(), y.end(), out.begin(), [](double t) { return 1.0 - t * t; });
    return out;
}

double frob_sq_diff(const Vector& a, const Vector& b) {
    require_same_length(a, b, "frob_sq_diff");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        acc += diff * diff;
    }
    return acc;
}

Vector softmax(const Vector& z) {
    if (z.empty()) {
        throw Error(ErrorCode::empty_input, "softmax: empty logit vector");
    }
    const double top = *std::max_element(z.begin(), z.end());
    Vector p(z.size());
    double total = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        p[i] = std::exp(z[i] - top);
        total += p[i];
    }
    for (double& x : p) {
        x /= total;
    }
    return p;
}

Vector mean_of(std::span<const Vector> vectors) {
    if (vectors.empty()) {
        throw Error(ErrorCode::empty_input, "mean_of: empty list");
    }
    Vector acc(vectors.front().size());
    for (const Vector& v : vectors) {
        require_same_length(acc, v, "mean_of");
        for (std::size_t i = 0; i < v.size(); ++i) {
            acc[i] += v[i];
        }
    }
    const double n = static_cast<double>(vectors.size());
    for (double& x : acc) {
        x /= n;
    }
    return acc;
}

Vector add(const Vector& a, const Vector& b) {
    require_same_length(a, b, "add");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = a[i] + b[i];
    }
    return out;
}

Vector sub(const Vector& a, const Vector& b) {
    require_same_length(a, b, "sub");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = a[i] - b[i];
    }
    return out;
}

Vector hadamard(const Vector& a, const Vector& b) {
    require_same_length(a, b, "hadamard");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = a[i] * b[i];
    }
    return out;
}

void axpy(double scale, const Vector& x, Vector& y) {
    require_same_length(x, y, "axpy");
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] += scale * x[i];
    }
}

double dot(const Vector& a, const Vector& b) {
    require_same_length(a, b, "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

double euclidean_distance(const Vector& a, const Vector& b) {
    return std::sqrt(frob_sq_diff(a, b));
}

bool all_finite(std::span<const double> values) {
    return std::all_of(values.begin(), values.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace rrnn
