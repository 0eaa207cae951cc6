#ifndef RRNN_LINALG_HPP_
#define RRNN_LINALG_HPP_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace rrnn {

// Dense real vector. A thin value wrapper so shapes can be checked and named
// in error messages.
class Vector {
public:
    Vector() = default;
    explicit Vector(std::size_t len, double fill = 0.0) : data_(len, fill) { }
    explicit Vector(std::vector<double> data) : data_(std::move(data)) { }
    Vector(std::initializer_list<double> values) : data_(values) { }

    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    auto begin() noexcept { return data_.begin(); }
    auto end() noexcept { return data_.end(); }
    auto begin() const noexcept { return data_.begin(); }
    auto end() const noexcept { return data_.end(); }

    void fill(double value);

    friend bool operator==(const Vector&, const Vector&) = default;

private:
    std::vector<double> data_;
};

// Dense real matrix, row-major. The storage order is part of the model file
// format and must not change.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) { }
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    std::string shape() const;
    void fill(double value);

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Vector matvec(const Matrix& a, const Vector& v);
// aᵀ·v without materializing the transpose.
Vector matvec_transposed(const Matrix& a, const Vector& v);
// m += scale · a·bᵀ
void add_outer(Matrix& m, const Vector& a, const Vector& b, double scale = 1.0);

Vector tanh_map(const Vector& v);
Vector tanh_prime_from_output(const Vector& y);
double frob_sq_diff(const Vector& a, const Vector& b);
Vector softmax(const Vector& z);
Vector mean_of(std::span<const Vector> vectors);

Vector add(const Vector& a, const Vector& b);
Vector sub(const Vector& a, const Vector& b);
Vector hadamard(const Vector& a, const Vector& b);
// y += scale · x
void axpy(double scale, const Vector& x, Vector& y);
double dot(const Vector& a, const Vector& b);
double euclidean_distance(const Vector& a, const Vector& b);

bool all_finite(std::span<const double> values);

}  // namespace rrnn

#endif  // RRNN_LINALG_HPP_
