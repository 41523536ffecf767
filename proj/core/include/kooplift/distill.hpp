#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "kooplift/dataset.hpp"
#include "kooplift/dictionary.hpp"
#include "kooplift/koopman.hpp"
#include "kooplift/matrix.hpp"
#include "kooplift/preprocess.hpp"
#include "kooplift/teacher.hpp"

namespace kooplift {

/// Knowledge-distillation settings for the Koopman matrix. The combined loss
/// is alpha * T^2 * KL(p || q) + (1 - alpha) * CE, with p and q the teacher
/// and student softmax at temperature T and the CE term taken at T = 1.
struct DistillConfig {
    double alpha = 0.9;
    double temperature = 2.0;
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    double rho = 0.9;
    double epsilon = 1e-6;
    double weight_decay = 1e-4;       // used only when apply_weight_decay is set
    bool apply_weight_decay = false;  // off by default: no L2 on K
    double lr = 1.0;
    double lr_decay = 0.75;
    std::uint64_t seed = 0;
};

/// Row-stochastic softmax outputs entering the loss: p = teacher at T,
/// q = student at T, q1 = student at T = 1.
struct SoftTargets {
    DenseMatrix p;
    DenseMatrix q;
    DenseMatrix q1;
};

/// Temperature softmax, shift-stabilized; rows sum to 1.
std::vector<double> softmax_T(std::span<const double> logits, double temperature);
DenseMatrix softmax_T(const DenseMatrix& logits, double temperature);

struct KdLoss {
    double value = 0.0;
    SoftTargets targets;
};

KdLoss kd_loss(const DenseMatrix& teacher_logits, const DenseMatrix& student_logits,
               const std::vector<int>& labels, double alpha, double temperature);

/// Analytic dL/dK for y_s = psi K:
///   dL/dK = psi' [ alpha T^2 (q - p) / (B T) + (1 - alpha) (q1 - onehot) / B ]
DenseMatrix kd_loss_grad(const DenseMatrix& psi, const DenseMatrix& teacher_logits,
                         const std::vector<int>& labels, const DenseMatrix& k, double alpha,
                         double temperature);

struct DistillResult {
    LinearStudent student;
    std::vector<EpochStats> log;  // loss = mean distillation loss, accuracy = train accuracy
};

/// AdaDelta training of K (initialized to zero) against cached teacher
/// logits. Deterministic for a fixed seed; throws if the loss turns
/// non-finite.
DistillResult train_student(const DenseMatrix& features, const LabelSet& labels,
                            const DenseMatrix& teacher_logits, const PcaModel& pca,
                            const Scaler& scaler, const Dictionary& dict,
                            const DistillConfig& config);

}  // namespace kooplift
