#include "kooplift/distill.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "kooplift/rng.hpp"

namespace kooplift {

namespace {

std::size_t argmax_row(const DenseMatrix& m, std::size_t i) {
    std::size_t arg = 0;
    double best = m(i, 0);
    for (std::size_t j = 1; j < m.cols; ++j)
        if (m(i, j) > best) {
            best = m(i, j);
            arg = j;
        }
    return arg;
}

}  // namespace

std::vector<double> softmax_T(std::span<const double> logits, double temperature) {
    if (temperature <= 0.0) throw std::invalid_argument("softmax_T: temperature must be > 0");
    std::vector<double> probs(logits.begin(), logits.end());
    double mx = probs[0];
    for (double v : probs) mx = std::max(mx, v);
    double sum = 0.0;
    for (double& v : probs) {
        v = std::exp((v - mx) / temperature);
        sum += v;
    }
    for (double& v : probs) v /= sum;
    return probs;
}

DenseMatrix softmax_T(const DenseMatrix& logits, double temperature) {
    if (temperature <= 0.0) throw std::invalid_argument("softmax_T: temperature must be > 0");
    DenseMatrix probs = logits;
    for (std::size_t i = 0; i < probs.rows; ++i) {
        double* row = probs.data.data() + i * probs.cols;
        double mx = row[0];
        for (std::size_t j = 1; j < probs.cols; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < probs.cols; ++j) {
            row[j] = std::exp((row[j] - mx) / temperature);
            sum += row[j];
        }
        for (std::size_t j = 0; j < probs.cols; ++j) row[j] /= sum;
    }
    return probs;
}

KdLoss kd_loss(const DenseMatrix& teacher_logits, const DenseMatrix& student_logits,
               const std::vector<int>& labels, double alpha, double temperature) {
    if (teacher_logits.rows != student_logits.rows || teacher_logits.cols != student_logits.cols)
        throw std::invalid_argument("kd_loss: logit shape mismatch");
    if (labels.size() != teacher_logits.rows)
        throw std::invalid_argument("kd_loss: label count mismatch");
    const std::size_t b = teacher_logits.rows;
    const std::size_t c = teacher_logits.cols;

    KdLoss out;
    out.targets.p = softmax_T(teacher_logits, temperature);
    out.targets.q = softmax_T(student_logits, temperature);
    out.targets.q1 = softmax_T(student_logits, 1.0);

    double kl = 0.0;
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < c; ++j) {
            const double p = out.targets.p(i, j);
            if (p > 0.0) kl += p * std::log(p / out.targets.q(i, j));
        }
    kl /= static_cast<double>(b);

    double ce = 0.0;
    for (std::size_t i = 0; i < b; ++i)
        ce -= std::log(out.targets.q1(i, static_cast<std::size_t>(labels[i])));
    ce /= static_cast<double>(b);

    out.value = alpha * temperature * temperature * kl + (1.0 - alpha) * ce;
    return out;
}

DenseMatrix kd_loss_grad(const DenseMatrix& psi, const DenseMatrix& teacher_logits,
                         const std::vector<int>& labels, const DenseMatrix& k, double alpha,
                         double temperature) {
    if (psi.cols != k.rows) throw std::invalid_argument("kd_loss_grad: psi/K shape mismatch");
    if (psi.rows != teacher_logits.rows)
        throw std::invalid_argument("kd_loss_grad: psi/teacher row mismatch");
    const std::size_t b = psi.rows;
    const std::size_t c = k.cols;

    const DenseMatrix student_logits = matmul(psi, k);
    const DenseMatrix p = softmax_T(teacher_logits, temperature);
    const DenseMatrix q = softmax_T(student_logits, temperature);
    const DenseMatrix q1 = softmax_T(student_logits, 1.0);

    // gradient w.r.t. the student logits
    DenseMatrix gy(b, c);
    const double kl_coef = alpha * temperature / static_cast<double>(b);  // T^2 / (B T)
    const double ce_coef = (1.0 - alpha) / static_cast<double>(b);
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < c; ++j)
            gy(i, j) = kl_coef * (q(i, j) - p(i, j)) + ce_coef * q1(i, j);
    for (std::size_t i = 0; i < b; ++i)
        gy(i, static_cast<std::size_t>(labels[i])) -= ce_coef;

    return matmul(transpose(psi), gy);
}

DistillResult train_student(const DenseMatrix& features, const LabelSet& labels,
                            const DenseMatrix& teacher_logits, const PcaModel& pca,
                            const Scaler& scaler, const Dictionary& dict,
                            const DistillConfig& config) {
    if (features.rows != labels.count)
        throw std::invalid_argument("train_student: feature/label count mismatch");
    if (teacher_logits.rows != features.rows)
        throw std::runtime_error("train_student: teacher logits missing for some training samples");
    if (!teacher_logits.all_finite())
        throw std::runtime_error("train_student: teacher logits contain non-finite values");
    if (config.alpha < 0.0 || config.alpha > 1.0)
        throw std::invalid_argument("train_student: alpha must be in [0, 1]");
    const std::size_t classes = teacher_logits.cols;

    // preprocessing is frozen during distillation; transform once
    const DenseMatrix z = standardize(scaler, pca_transform(pca, features));

    DenseMatrix k(dict.size(), classes);  // zero init: uniform student softmax
    AdaDeltaState state;
    state.rho = config.rho;
    state.epsilon = config.epsilon;
    state.weight_decay = config.apply_weight_decay ? config.weight_decay : 0.0;

    LabelSet label_view;
    label_view.count = labels.count;
    label_view.labels = labels.labels;

    std::vector<EpochStats> log;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = config.lr * std::pow(config.lr_decay, static_cast<double>(epoch));
        state.lr_multiplier = lr;

        BatchSequence batches(z, label_view, config.batch_size,
                              derive_seed(config.seed, epoch), classes);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t bi = 0; bi < batches.size(); ++bi) {
            const auto idx = batches.indices(bi);
            const Batch batch = batches.batch(bi);
            const DenseMatrix psi = lift(dict, batch.features);
            const DenseMatrix yt = gather_rows(teacher_logits, idx);
            const DenseMatrix ys = matmul(psi, k);

            const KdLoss l = kd_loss(yt, ys, batch.labels, config.alpha, config.temperature);
            if (!std::isfinite(l.value)) {
                char msg[96];
                std::snprintf(msg, sizeof(msg),
                              "train_student: diverged (non-finite loss at epoch %zu batch %zu)",
                              epoch, bi);
                throw std::runtime_error(msg);
            }
            loss_sum += l.value * static_cast<double>(psi.rows);
            for (std::size_t i = 0; i < ys.rows; ++i)
                if (argmax_row(ys, i) == static_cast<std::size_t>(batch.labels[i])) ++correct;

            const DenseMatrix grad =
                kd_loss_grad(psi, yt, batch.labels, k, config.alpha, config.temperature);
            adadelta_step(state, std::span<double>(k.data), std::span<const double>(grad.data));
        }
        EpochStats st;
        st.epoch = epoch;
        st.lr = lr;
        st.loss = loss_sum / static_cast<double>(features.rows);
        st.accuracy = static_cast<double>(correct) / static_cast<double>(features.rows);
        log.push_back(st);
    }

    DistillResult res;
    res.student.pca = pca;
    res.student.scaler = scaler;
    res.student.dict = dict;
    res.student.k = std::move(k);
    res.log = std::move(log);
    return res;
}

}  // namespace kooplift
