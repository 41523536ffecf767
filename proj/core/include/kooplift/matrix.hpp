#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace kooplift {

/// Row-major dense matrix of 64-bit floats; the library's universal numeric
/// carrier. Every public operation in the library keeps entries finite.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // rows * cols, row-major

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    static DenseMatrix identity(std::size_t n);

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

    bool empty() const { return rows == 0 || cols == 0; }
    bool all_finite() const;
};

/// C = A * B with a fixed accumulation order (row by row, inner index
/// ascending) so results are bit-reproducible regardless of threading.
/// Throws std::invalid_argument on inner dimension mismatch.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

DenseMatrix transpose(const DenseMatrix& a);

/// First n rows of a as a copy (n clamped to a.rows).
DenseMatrix head_rows(const DenseMatrix& a, std::size_t n);

/// Rows [lo, hi) of a as a copy.
DenseMatrix slice_rows(const DenseMatrix& a, std::size_t lo, std::size_t hi);

/// Rows of a selected by index, in order.
DenseMatrix gather_rows(const DenseMatrix& a, std::span<const std::size_t> indices);

double frobenius_norm(const DenseMatrix& a);

/// max |a_ij - b_ij|; shapes must agree.
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace kooplift
