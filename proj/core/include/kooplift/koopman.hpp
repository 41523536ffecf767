#pragma once

#include <optional>
#include <vector>

#include "kooplift/dictionary.hpp"
#include "kooplift/matrix.hpp"
#include "kooplift/preprocess.hpp"
#include "kooplift/teacher.hpp"

namespace kooplift {

/// Lifted snapshot pairs: row n of psi_in is psi(s_n), row n of psi_out is
/// the target observable vector for the evolved state.
struct SnapshotSet {
    DenseMatrix psi_in;   // N x M
    DenseMatrix psi_out;  // N x M_out
};

/// Affine input stage z = x W + b used by the hidden-layer replacement
/// variant (the teacher's first layer travels with the student so the saved
/// model is a self-contained inference pipeline).
struct AffineMap {
    DenseMatrix weight;        // D_in x D
    std::vector<double> bias;  // D, may be empty
    bool relu = false;
};

/// One-matrix student: optional preprocessing stages, the dictionary, and
/// the Koopman matrix K (M x D_out); inference is y = K' psi(z).
struct LinearStudent {
    std::optional<PcaModel> pca;
    std::optional<Scaler> scaler;
    std::optional<AffineMap> input_map;
    Dictionary dict;
    DenseMatrix k;
};

/// Streaming normal-equation accumulator: G = (1/N) sum psi' psi and
/// A = (1/N) sum psi' psi_out, added block by block in a fixed order.
class GramAccumulator {
public:
    GramAccumulator(std::size_t m_in, std::size_t m_out);
    void add(const DenseMatrix& psi_in, const DenseMatrix& psi_out);
    std::size_t samples() const { return count_; }
    /// K = pinv(G) A, the least-squares / least-norm solution.
    DenseMatrix solve(double rcond) const;
    DenseMatrix gram() const;        // G (normalized)
    DenseMatrix cross_gram() const;  // A (normalized)

private:
    DenseMatrix g_, a_;
    std::size_t count_ = 0;
};

inline constexpr double kEdmdRcond = 1e-10;

DenseMatrix edmd_fit(const SnapshotSet& snapshots, double rcond = kEdmdRcond);

/// K' = K W so that (K')' psi == W' (K' psi) for the teacher's output map.
/// `w_out` is the teacher's final weight matrix, H x C.
DenseMatrix fold_output(const DenseMatrix& k, const DenseMatrix& w_out);

/// Hidden-layer replacement: snapshot pairs (psi(z1), zL) from the teacher's
/// first and last hidden layers, output weights folded in afterwards.
LinearStudent naive_pipeline(const TeacherMlp& teacher, const DenseMatrix& features,
                             const Dictionary& dict, double rcond = kEdmdRcond);

/// Least-squares fit from preprocessed inputs straight to one-hot labels.
LinearStudent naive_pca_pipeline(const DenseMatrix& features, const DenseMatrix& labels_one_hot,
                                 const PcaModel& pca, const Scaler& scaler, const Dictionary& dict,
                                 double rcond = kEdmdRcond);

/// Apply the student's preprocessing stages (without lifting).
DenseMatrix student_preprocess(const LinearStudent& student, const DenseMatrix& features);

DenseMatrix student_logits(const LinearStudent& student, const DenseMatrix& features);

}  // namespace kooplift
