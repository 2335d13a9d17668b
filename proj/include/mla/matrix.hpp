#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace mla {

/// Dense row-major matrix of doubles. The single data carrier for queries,
/// keys, values, weights, and attention outputs.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::initializer_list<std::initializer_list<double>> init);

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    /// Appends one row; the span length must equal cols() (or the matrix
    /// must be empty, in which case it adopts the span's length).
    void append_row(std::span<const double> values);

    /// Returns the submatrix of rows [0, n).
    Matrix top_rows(std::size_t n) const;

    bool all_finite() const;

    bool operator==(const Matrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& m);

/// Standard matrix product; throws ShapeError naming both shapes on mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);

/// Row-wise softmax with max-subtraction for overflow safety.
Matrix softmax_rows(const Matrix& m);

/// Largest absolute element-wise difference.
double max_abs_diff(const Matrix& a, const Matrix& b);

/// Deterministic splitmix64 generator. Identical seeds produce identical
/// streams on every platform; the uniform mapping uses the top 53 bits so
/// results are exact IEEE doubles independent of libc.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();

    /// Uniform double in [0, 1).
    double uniform();

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi);

    /// Derives an independent deterministic substream.
    Rng fork(std::uint64_t stream_id) const;

private:
    std::uint64_t state_;
};

/// Matrix with entries uniform in [-scale, +scale]; throws ShapeError on a
/// zero dimension.
Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0);

} // namespace mla
