#include "kooplift/koopman.hpp"

#include <stdexcept>

#include "kooplift/linalg.hpp"

namespace kooplift {

namespace {

constexpr std::size_t kBlockRows = 512;

void add_bias_rows(DenseMatrix& m, const std::vector<double>& bias) {
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) m(i, j) += bias[j];
}

}  // namespace

GramAccumulator::GramAccumulator(std::size_t m_in, std::size_t m_out)
    : g_(m_in, m_in), a_(m_in, m_out) {}

void GramAccumulator::add(const DenseMatrix& psi_in, const DenseMatrix& psi_out) {
    if (psi_in.rows != psi_out.rows)
        throw std::invalid_argument("GramAccumulator: row count mismatch");
    if (psi_in.cols != g_.rows || psi_out.cols != a_.cols)
        throw std::invalid_argument("GramAccumulator: column count mismatch");
    const DenseMatrix psi_t = transpose(psi_in);
    const DenseMatrix dg = matmul(psi_t, psi_in);
    const DenseMatrix da = matmul(psi_t, psi_out);
    for (std::size_t i = 0; i < g_.data.size(); ++i) g_.data[i] += dg.data[i];
    for (std::size_t i = 0; i < a_.data.size(); ++i) a_.data[i] += da.data[i];
    count_ += psi_in.rows;
}

DenseMatrix GramAccumulator::gram() const {
    DenseMatrix g = g_;
    const double inv = 1.0 / static_cast<double>(count_);
    for (double& v : g.data) v *= inv;
    return g;
}

DenseMatrix GramAccumulator::cross_gram() const {
    DenseMatrix a = a_;
    const double inv = 1.0 / static_cast<double>(count_);
    for (double& v : a.data) v *= inv;
    return a;
}

DenseMatrix GramAccumulator::solve(double rcond) const {
    if (count_ == 0) throw std::runtime_error("GramAccumulator: no snapshot pairs added");
    return matmul(pinv(gram(), rcond), cross_gram());
}

DenseMatrix edmd_fit(const SnapshotSet& snapshots, double rcond) {
    if (snapshots.psi_in.rows == 0) throw std::invalid_argument("edmd_fit: empty snapshot set");
    GramAccumulator acc(snapshots.psi_in.cols, snapshots.psi_out.cols);
    // blockwise accumulation keeps the reduction order fixed and matches the
    // streaming path used by the pipelines
    for (std::size_t lo = 0; lo < snapshots.psi_in.rows; lo += kBlockRows) {
        const std::size_t hi = std::min(snapshots.psi_in.rows, lo + kBlockRows);
        acc.add(slice_rows(snapshots.psi_in, lo, hi), slice_rows(snapshots.psi_out, lo, hi));
    }
    return acc.solve(rcond);
}

DenseMatrix fold_output(const DenseMatrix& k, const DenseMatrix& w_out) {
    return matmul(k, w_out);
}

LinearStudent naive_pipeline(const TeacherMlp& teacher, const DenseMatrix& features,
                             const Dictionary& dict, double rcond) {
    const std::size_t first_hidden = teacher.arch.layer_sizes[1];
    if (dict.input_dim != first_hidden)
        throw std::invalid_argument("naive_pipeline: dictionary dim must equal first hidden width");

    const std::size_t last_hidden = teacher.arch.layer_sizes[teacher.arch.layer_sizes.size() - 2];
    GramAccumulator acc(dict.size(), last_hidden);
    for (std::size_t lo = 0; lo < features.rows; lo += kBlockRows) {
        const std::size_t hi = std::min(features.rows, lo + kBlockRows);
        const ForwardResult fwd = forward(teacher, slice_rows(features, lo, hi));
        acc.add(lift(dict, fwd.hidden.front()), fwd.hidden.back());
    }
    DenseMatrix k = acc.solve(rcond);  // M x H, predicts zL from psi(z1)

    // fold the output layer: logits = zL W_out + b_out; the bias lands on the
    // constant dictionary term
    const DenseMatrix& w_out = teacher.weights.back();
    DenseMatrix k_folded = fold_output(k, w_out);
    if (teacher.arch.use_bias) {
        const auto& b_out = teacher.biases.back();
        for (std::size_t j = 0; j < k_folded.cols; ++j) k_folded(0, j) += b_out[j];
    }

    LinearStudent student;
    AffineMap input;
    input.weight = teacher.weights.front();
    input.relu = !teacher.arch.first_hidden_linear;
    if (teacher.arch.use_bias) input.bias = teacher.biases.front();
    student.input_map = std::move(input);
    student.dict = dict;
    student.k = std::move(k_folded);
    return student;
}

LinearStudent naive_pca_pipeline(const DenseMatrix& features, const DenseMatrix& labels_one_hot,
                                 const PcaModel& pca, const Scaler& scaler, const Dictionary& dict,
                                 double rcond) {
    if (features.rows != labels_one_hot.rows)
        throw std::invalid_argument("naive_pca_pipeline: feature/label count mismatch");
    if (dict.input_dim != pca.dim)
        throw std::invalid_argument("naive_pca_pipeline: dictionary dim must equal pca dim");

    GramAccumulator acc(dict.size(), labels_one_hot.cols);
    for (std::size_t lo = 0; lo < features.rows; lo += kBlockRows) {
        const std::size_t hi = std::min(features.rows, lo + kBlockRows);
        const DenseMatrix z = standardize(scaler, pca_transform(pca, slice_rows(features, lo, hi)));
        acc.add(lift(dict, z), slice_rows(labels_one_hot, lo, hi));
    }

    LinearStudent student;
    student.pca = pca;
    student.scaler = scaler;
    student.dict = dict;
    student.k = acc.solve(rcond);
    return student;
}

DenseMatrix student_preprocess(const LinearStudent& student, const DenseMatrix& features) {
    DenseMatrix z = features;
    if (student.input_map) {
        z = matmul(z, student.input_map->weight);
        if (!student.input_map->bias.empty()) add_bias_rows(z, student.input_map->bias);
        if (student.input_map->relu)
            for (double& v : z.data)
                if (v < 0.0) v = 0.0;
    }
    if (student.pca) z = pca_transform(*student.pca, z);
    if (student.scaler) z = standardize(*student.scaler, z);
    return z;
}

DenseMatrix student_logits(const LinearStudent& student, const DenseMatrix& features) {
    const DenseMatrix z = student_preprocess(student, features);
    DenseMatrix logits(z.rows, student.k.cols);
    for (std::size_t lo = 0; lo < z.rows; lo += kBlockRows) {
        const std::size_t hi = std::min(z.rows, lo + kBlockRows);
        const DenseMatrix block = matmul(lift(student.dict, slice_rows(z, lo, hi)), student.k);
        for (std::size_t i = 0; i < block.rows; ++i)
            for (std::size_t j = 0; j < block.cols; ++j) logits(lo + i, j) = block(i, j);
    }
    return logits;
}

}  // namespace kooplift
