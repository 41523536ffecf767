#pragma once

#include <span>
#include <vector>

#include "kooplift/matrix.hpp"

namespace kooplift {

/// Fitted PCA projection: z = U' (x - input_mean). Columns of `u` are the
/// top-D right singular vectors of the mean-centered fitting matrix, with a
/// deterministic sign convention (the largest-magnitude entry of each column
/// is positive).
struct PcaModel {
    DenseMatrix u;                        // D_in x D, orthonormal columns
    std::vector<double> input_mean;       // D_in
    std::size_t dim = 0;                  // D
    std::vector<double> explained_ratio;  // per-component variance fraction, non-increasing
};

/// Standardization parameters; the applied divisor is max(sigma_d, epsilon).
struct Scaler {
    std::vector<double> mu;
    std::vector<double> sigma;  // population standard deviation
    double epsilon = 1e-12;
};

/// PCA via SVD of the centered data matrix. Throws when dim is out of range
/// or the centered matrix is numerically zero (all rows identical).
PcaModel fit_pca(const DenseMatrix& x, std::size_t dim);

std::vector<double> pca_transform(const PcaModel& model, std::span<const double> x);
DenseMatrix pca_transform(const PcaModel& model, const DenseMatrix& x);

Scaler fit_scaler(const DenseMatrix& z);

std::vector<double> standardize(const Scaler& scaler, std::span<const double> z);
DenseMatrix standardize(const Scaler& scaler, const DenseMatrix& z);

}  // namespace kooplift
