#include "kooplift/preprocess.hpp"

#include <cmath>
#include <stdexcept>

#include "kooplift/linalg.hpp"

namespace kooplift {

PcaModel fit_pca(const DenseMatrix& x, std::size_t dim) {
    const std::size_t n = x.rows, d_in = x.cols;
    if (n < 2) throw std::invalid_argument("fit_pca: need at least 2 samples");
    if (dim < 1 || dim > std::min(n, d_in))
        throw std::invalid_argument("fit_pca: dim out of range");

    PcaModel model;
    model.dim = dim;
    model.input_mean.assign(d_in, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = x.data.data() + i * d_in;
        for (std::size_t j = 0; j < d_in; ++j) model.input_mean[j] += row[j];
    }
    for (double& m : model.input_mean) m /= static_cast<double>(n);

    DenseMatrix centered(n, d_in);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d_in; ++j)
            centered(i, j) = x(i, j) - model.input_mean[j];

    const double scale = frobenius_norm(centered);
    if (scale <= 1e-12 * (1.0 + frobenius_norm(x)))
        throw std::invalid_argument("fit_pca: degenerate data (all rows identical)");

    // Principal directions only; the left singular vectors of the data
    // matrix are never needed.
    SvdResult f = svd(centered, /*want_u=*/false);

    double total_var = 0.0;
    for (double s : f.s) total_var += s * s;
    model.explained_ratio.resize(dim);
    for (std::size_t j = 0; j < dim; ++j)
        model.explained_ratio[j] = (f.s[j] * f.s[j]) / total_var;

    model.u = DenseMatrix(d_in, dim);
    for (std::size_t j = 0; j < dim; ++j) {
        // sign convention: make the largest-magnitude entry positive,
        // first occurrence winning ties
        std::size_t arg = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < d_in; ++i) {
            const double mag = std::abs(f.vt(j, i));
            if (mag > best) {
                best = mag;
                arg = i;
            }
        }
        const double sign = f.vt(j, arg) < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < d_in; ++i) model.u(i, j) = sign * f.vt(j, i);
    }
    return model;
}

std::vector<double> pca_transform(const PcaModel& model, std::span<const double> x) {
    const std::size_t d_in = model.u.rows;
    if (x.size() != d_in) throw std::invalid_argument("pca_transform: vector length mismatch");
    std::vector<double> z(model.dim, 0.0);
    for (std::size_t i = 0; i < d_in; ++i) {
        const double xc = x[i] - model.input_mean[i];
        if (xc == 0.0) continue;
        const double* ui = model.u.data.data() + i * model.dim;
        for (std::size_t j = 0; j < model.dim; ++j) z[j] += xc * ui[j];
    }
    return z;
}

DenseMatrix pca_transform(const PcaModel& model, const DenseMatrix& x) {
    if (x.cols != model.u.rows) throw std::invalid_argument("pca_transform: column count mismatch");
    DenseMatrix centered(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i)
        for (std::size_t j = 0; j < x.cols; ++j)
            centered(i, j) = x(i, j) - model.input_mean[j];
    return matmul(centered, model.u);
}

Scaler fit_scaler(const DenseMatrix& z) {
    if (z.rows < 2) throw std::invalid_argument("fit_scaler: need at least 2 samples");
    Scaler s;
    s.mu.assign(z.cols, 0.0);
    s.sigma.assign(z.cols, 0.0);
    for (std::size_t i = 0; i < z.rows; ++i)
        for (std::size_t j = 0; j < z.cols; ++j) s.mu[j] += z(i, j);
    for (double& m : s.mu) m /= static_cast<double>(z.rows);
    for (std::size_t i = 0; i < z.rows; ++i)
        for (std::size_t j = 0; j < z.cols; ++j) {
            const double d = z(i, j) - s.mu[j];
            s.sigma[j] += d * d;
        }
    for (double& v : s.sigma) v = std::sqrt(v / static_cast<double>(z.rows));
    return s;
}

std::vector<double> standardize(const Scaler& scaler, std::span<const double> z) {
    if (z.size() != scaler.mu.size()) throw std::invalid_argument("standardize: vector length mismatch");
    std::vector<double> out(z.size());
    for (std::size_t j = 0; j < z.size(); ++j)
        out[j] = (z[j] - scaler.mu[j]) / std::max(scaler.sigma[j], scaler.epsilon);
    return out;
}

DenseMatrix standardize(const Scaler& scaler, const DenseMatrix& z) {
    if (z.cols != scaler.mu.size()) throw std::invalid_argument("standardize: column count mismatch");
    DenseMatrix out(z.rows, z.cols);
    for (std::size_t i = 0; i < z.rows; ++i)
        for (std::size_t j = 0; j < z.cols; ++j)
            out(i, j) = (z(i, j) - scaler.mu[j]) / std::max(scaler.sigma[j], scaler.epsilon);
    return out;
}

}  // namespace kooplift
