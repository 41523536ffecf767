#include "kooplift/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace kooplift {

namespace {

constexpr int kMaxJacobiSweeps = 100;

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

// One-sided Jacobi rotations in row-cyclic order. `wt` holds the working
// matrix transposed (row j = j-th column of A), so each rotation touches two
// contiguous rows. `vt` accumulates the right singular vectors, also by rows.
// On return the rows of wt are mutually orthogonal; their norms are the
// singular values.
void jacobi_orthogonalize(DenseMatrix& wt, DenseMatrix& vt) {
    const std::size_t n = wt.rows;
    const std::size_t m = wt.cols;
    const double eps = std::numeric_limits<double>::epsilon();
    for (int sweep = 0; sweep < kMaxJacobiSweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double* wp = wt.data.data() + p * m;
                double* wq = wt.data.data() + q * m;
                const double alpha = dot(wp, wp, m);
                const double beta = dot(wq, wq, m);
                const double gamma = dot(wp, wq, m);
                if (std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double a = wp[i], b = wq[i];
                    wp[i] = c * a - s * b;
                    wq[i] = s * a + c * b;
                }
                double* vp = vt.data.data() + p * n;
                double* vq = vt.data.data() + q * n;
                for (std::size_t i = 0; i < n; ++i) {
                    const double a = vp[i], b = vq[i];
                    vp[i] = c * a - s * b;
                    vq[i] = s * a + c * b;
                }
            }
        }
        if (!rotated) return;
    }
    throw std::runtime_error("svd: Jacobi sweeps did not converge within the iteration cap");
}

// Fill U column `col` with a unit vector orthogonal to all columns in
// `occupied`. Used when a singular value is exactly zero.
void complete_basis_column(DenseMatrix& u, std::size_t col, const std::vector<std::size_t>& occupied) {
    const std::size_t m = u.rows;
    std::vector<double> cand(m);
    for (std::size_t r = 0; r < m; ++r) {
        std::fill(cand.begin(), cand.end(), 0.0);
        cand[r] = 1.0;
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t c : occupied) {
                double proj = 0.0;
                for (std::size_t i = 0; i < m; ++i) proj += cand[i] * u(i, c);
                for (std::size_t i = 0; i < m; ++i) cand[i] -= proj * u(i, c);
            }
        }
        double nrm = std::sqrt(dot(cand.data(), cand.data(), m));
        if (nrm > 0.5) {
            for (std::size_t i = 0; i < m; ++i) u(i, col) = cand[i] / nrm;
            return;
        }
    }
    throw std::runtime_error("svd: failed to complete orthonormal basis");
}

// Sort singular values descending, build Vt and (optionally) U from the
// orthogonalized transposed working matrix.
SvdResult finish_jacobi(const DenseMatrix& wt, const DenseMatrix& vt_work, std::size_t m, bool want_u) {
    const std::size_t n = wt.rows;
    std::vector<double> norms(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double* wj = wt.data.data() + j * m;
        norms[j] = std::sqrt(dot(wj, wj, m));
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });

    SvdResult res;
    res.s.resize(n);
    res.vt = DenseMatrix(n, vt_work.cols);
    for (std::size_t jj = 0; jj < n; ++jj) {
        const std::size_t j = order[jj];
        res.s[jj] = norms[j];
        std::copy_n(vt_work.data.begin() + static_cast<std::ptrdiff_t>(j * vt_work.cols),
                    vt_work.cols,
                    res.vt.data.begin() + static_cast<std::ptrdiff_t>(jj * vt_work.cols));
    }
    if (!want_u) return res;

    res.u = DenseMatrix(m, n);
    std::vector<std::size_t> occupied;
    std::vector<std::size_t> missing;
    for (std::size_t jj = 0; jj < n; ++jj) {
        const std::size_t j = order[jj];
        if (norms[j] > 0.0) {
            const double inv = 1.0 / norms[j];
            const double* wj = wt.data.data() + j * m;
            for (std::size_t i = 0; i < m; ++i) res.u(i, jj) = wj[i] * inv;
            occupied.push_back(jj);
        } else {
            missing.push_back(jj);
        }
    }
    for (std::size_t jj : missing) {
        complete_basis_column(res.u, jj, occupied);
        occupied.push_back(jj);
    }
    return res;
}

struct Reflector {
    std::vector<double> v;  // length m - k
    double scale = 0.0;     // 2 / (v' v); 0 marks a skipped (zero) column
};

// Householder QR of a (m x n, m >= n), in place. Returns the reflectors only
// when `keep` is set; otherwise they are applied and discarded.
void householder_qr(DenseMatrix& a, std::vector<Reflector>* keep) {
    const std::size_t m = a.rows, n = a.cols;
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    std::vector<double> v(m);
    std::vector<double> w(n);
    for (std::size_t k = 0; k < n; ++k) {
        double norm2 = 0.0;
        for (std::size_t i = k; i < m; ++i) norm2 += a(i, k) * a(i, k);
        const double norm = std::sqrt(norm2);
        if (norm == 0.0) {
            if (keep) keep->push_back({});
            continue;
        }
        const double x0 = a(k, k);
        const double beta = -std::copysign(norm, x0);
        const std::size_t len = m - k;
        v[0] = x0 - beta;
        for (std::size_t i = 1; i < len; ++i) v[i] = a(k + i, k);
        const double vtv = dot(v.data(), v.data(), len);
        const double scale = 2.0 / vtv;

        // Two row-major passes over the trailing block: w_j = v' a_j, then
        // a_j -= scale * w_j * v. Column ranges are independent, so the
        // split across threads is bit-deterministic.
        auto apply_cols = [&](std::size_t jlo, std::size_t jhi) {
            for (std::size_t j = jlo; j < jhi; ++j) w[j] = 0.0;
            for (std::size_t i = 0; i < len; ++i) {
                const double vi = v[i];
                const double* row = a.data.data() + (k + i) * n;
                for (std::size_t j = jlo; j < jhi; ++j) w[j] += vi * row[j];
            }
            for (std::size_t i = 0; i < len; ++i) {
                const double svi = scale * v[i];
                double* row = a.data.data() + (k + i) * n;
                for (std::size_t j = jlo; j < jhi; ++j) row[j] -= svi * w[j];
            }
        };
        const std::size_t jbegin = k + 1;
        if (jbegin < n) {
            const std::size_t ncols = n - jbegin;
            if (hw >= 2 && len * ncols > 2'000'000) {
                const std::size_t half = jbegin + ncols / 2;
                std::thread t1(apply_cols, jbegin, half);
                apply_cols(half, n);
                t1.join();
            } else {
                apply_cols(jbegin, n);
            }
        }
        a(k, k) = beta;
        for (std::size_t i = k + 1; i < m; ++i) a(i, k) = 0.0;
        if (keep) keep->push_back({std::vector<double>(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(len)), scale});
    }
}

// U = Q * [ur; 0] by applying the stored reflectors in reverse.
DenseMatrix apply_q(const std::vector<Reflector>& refl, const DenseMatrix& ur, std::size_t m) {
    const std::size_t n = ur.cols;
    DenseMatrix u(m, n);
    for (std::size_t i = 0; i < ur.rows; ++i)
        for (std::size_t j = 0; j < n; ++j) u(i, j) = ur(i, j);
    std::vector<double> w(n);
    for (std::size_t kk = refl.size(); kk-- > 0;) {
        const Reflector& r = refl[kk];
        if (r.scale == 0.0) continue;
        const std::size_t len = r.v.size();
        const std::size_t k = m - len;
        std::fill(w.begin(), w.end(), 0.0);
        for (std::size_t i = 0; i < len; ++i) {
            const double vi = r.v[i];
            const double* row = u.data.data() + (k + i) * n;
            for (std::size_t j = 0; j < n; ++j) w[j] += vi * row[j];
        }
        for (std::size_t i = 0; i < len; ++i) {
            const double svi = r.scale * r.v[i];
            double* row = u.data.data() + (k + i) * n;
            for (std::size_t j = 0; j < n; ++j) row[j] -= svi * w[j];
        }
    }
    return u;
}

SvdResult svd_tall(const DenseMatrix& a, bool want_u) {
    const std::size_t m = a.rows, n = a.cols;
    if (m >= 2 * n && n >= 4) {
        DenseMatrix work = a;
        std::vector<Reflector> refl;
        householder_qr(work, want_u ? &refl : nullptr);
        DenseMatrix rt(n, n);  // R transposed, rows = columns of R
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) rt(j, i) = work(i, j);
        DenseMatrix vt = DenseMatrix::identity(n);
        jacobi_orthogonalize(rt, vt);
        SvdResult res = finish_jacobi(rt, vt, n, want_u);
        if (want_u) res.u = apply_q(refl, res.u, m);
        return res;
    }
    DenseMatrix wt = transpose(a);  // n x m, rows are columns of a
    DenseMatrix vt = DenseMatrix::identity(n);
    jacobi_orthogonalize(wt, vt);
    return finish_jacobi(wt, vt, m, want_u);
}

}  // namespace

SvdResult svd(const DenseMatrix& a, bool want_u) {
    if (a.empty()) throw std::invalid_argument("svd: empty matrix");
    if (!a.all_finite()) throw std::invalid_argument("svd: input has non-finite entries");
    if (a.rows >= a.cols) return svd_tall(a, want_u);
    // Wide case: factor the transpose and swap the roles of U and V.
    SvdResult t = svd_tall(transpose(a), true);
    SvdResult res;
    res.s = std::move(t.s);
    res.u = transpose(t.vt);
    res.vt = transpose(t.u);
    if (!want_u) res.u = DenseMatrix();
    return res;
}

double default_rcond(const DenseMatrix& a) {
    return static_cast<double>(std::max(a.rows, a.cols)) * std::numeric_limits<double>::epsilon();
}

DenseMatrix pinv(const DenseMatrix& a, double rcond) {
    if (a.empty()) throw std::invalid_argument("pinv: empty matrix");
    if (rcond < 0.0) throw std::invalid_argument("pinv: rcond must be >= 0");
    SvdResult f = svd(a, true);
    const double cutoff = rcond * f.s.front();
    // pinv = V diag(1/s) U', dropping singular values at or below the cutoff
    const std::size_t k = f.s.size();
    DenseMatrix v_scaled(a.cols, k);  // column j = v_j / s_j
    for (std::size_t j = 0; j < k; ++j) {
        const double inv = f.s[j] > cutoff ? 1.0 / f.s[j] : 0.0;
        for (std::size_t i = 0; i < a.cols; ++i) v_scaled(i, j) = f.vt(j, i) * inv;
    }
    return matmul(v_scaled, transpose(f.u));
}

DenseMatrix pinv(const DenseMatrix& a) { return pinv(a, default_rcond(a)); }

}  // namespace kooplift
