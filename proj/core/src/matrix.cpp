#include "kooplift/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <thread>

namespace kooplift {

namespace {

// Rows [row_begin, row_end) of C = A * B, ikj loop order. Each output entry
// is accumulated over k in ascending order, so splitting the row range across
// threads cannot change any result bit.
void matmul_rows(const DenseMatrix& a, const DenseMatrix& b, DenseMatrix& c,
                 std::size_t row_begin, std::size_t row_end) {
    const std::size_t n = b.cols;
    const std::size_t inner = a.cols;
    for (std::size_t i = row_begin; i < row_end; ++i) {
        double* ci = c.data.data() + i * n;
        const double* ai = a.data.data() + i * inner;
        for (std::size_t k = 0; k < inner; ++k) {
            const double aik = ai[k];
            if (aik == 0.0) continue;
            const double* bk = b.data.data() + k * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
        }
    }
}

}  // namespace

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool DenseMatrix::all_finite() const {
    return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.rows) {
        char msg[96];
        std::snprintf(msg, sizeof(msg), "matmul: dimension mismatch (%zux%zu * %zux%zu)",
                      a.rows, a.cols, b.rows, b.cols);
        throw std::invalid_argument(msg);
    }
    DenseMatrix c(a.rows, b.cols);
    const std::size_t flops = a.rows * a.cols * b.cols;
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (flops < 4'000'000 || hw < 2 || a.rows < 2 * hw) {
        matmul_rows(a, b, c, 0, a.rows);
        return c;
    }
    const unsigned nthreads = std::min<unsigned>(hw, static_cast<unsigned>(a.rows));
    std::vector<std::thread> workers;
    workers.reserve(nthreads);
    const std::size_t chunk = (a.rows + nthreads - 1) / nthreads;
    for (unsigned t = 0; t < nthreads; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(a.rows, lo + chunk);
        if (lo >= hi) break;
        workers.emplace_back(matmul_rows, std::cref(a), std::cref(b), std::ref(c), lo, hi);
    }
    for (auto& w : workers) w.join();
    return c;
}

DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
    return t;
}

DenseMatrix head_rows(const DenseMatrix& a, std::size_t n) {
    n = std::min(n, a.rows);
    DenseMatrix out(n, a.cols);
    std::copy(a.data.begin(), a.data.begin() + static_cast<std::ptrdiff_t>(n * a.cols),
              out.data.begin());
    return out;
}

DenseMatrix slice_rows(const DenseMatrix& a, std::size_t lo, std::size_t hi) {
    if (lo > hi || hi > a.rows) throw std::out_of_range("slice_rows: bad range");
    DenseMatrix out(hi - lo, a.cols);
    std::copy(a.data.begin() + static_cast<std::ptrdiff_t>(lo * a.cols),
              a.data.begin() + static_cast<std::ptrdiff_t>(hi * a.cols), out.data.begin());
    return out;
}

DenseMatrix gather_rows(const DenseMatrix& a, std::span<const std::size_t> indices) {
    DenseMatrix out(indices.size(), a.cols);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= a.rows) throw std::out_of_range("gather_rows: index out of range");
        std::copy_n(a.data.begin() + static_cast<std::ptrdiff_t>(indices[i] * a.cols), a.cols,
                    out.data.begin() + static_cast<std::ptrdiff_t>(i * a.cols));
    }
    return out;
}

double frobenius_norm(const DenseMatrix& a) {
    double sum = 0.0;
    for (double v : a.data) sum += v * v;
    return std::sqrt(sum);
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows != b.rows || a.cols != b.cols)
        throw std::invalid_argument("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

}  // namespace kooplift
