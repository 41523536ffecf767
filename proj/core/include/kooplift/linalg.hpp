#pragma once

#include <vector>

#include "kooplift/matrix.hpp"

namespace kooplift {

struct SvdResult {
    DenseMatrix u;                   // m x k, orthonormal columns (k = min(m, n))
    std::vector<double> s;           // k singular values, non-negative, descending
    DenseMatrix vt;                  // k x n, orthonormal rows
};

/// Thin SVD, A = U diag(s) Vt. One-sided Jacobi with a Householder QR step for
/// tall matrices; converges to high relative accuracy for the sizes used here.
/// Pass want_u = false to skip forming U (PCA only needs s and Vt).
/// Throws std::runtime_error if the rotation sweeps do not converge.
SvdResult svd(const DenseMatrix& a, bool want_u = true);

/// Default pseudo-inverse cutoff: max(rows, cols) * machine epsilon.
double default_rcond(const DenseMatrix& a);

/// Moore-Penrose pseudo-inverse. Singular values <= rcond * s_max are
/// treated as zero.
DenseMatrix pinv(const DenseMatrix& a, double rcond);
DenseMatrix pinv(const DenseMatrix& a);

}  // namespace kooplift
