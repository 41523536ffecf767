#include "kooplift/teacher.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "kooplift/rng.hpp"

namespace kooplift {

namespace {

// ReLU applies after weight layer l when it feeds a hidden layer (not the
// output) and is not the exempted first hidden layer.
bool relu_after(const MlpArchitecture& arch, std::size_t l) {
    const bool is_output = (l + 1 == arch.num_weight_layers());
    if (is_output) return !arch.output_linear;
    if (l == 0) return !arch.first_hidden_linear;
    return true;
}

void add_bias_rows(DenseMatrix& m, const std::vector<double>& bias) {
    for (std::size_t i = 0; i < m.rows; ++i) {
        double* row = m.data.data() + i * m.cols;
        for (std::size_t j = 0; j < m.cols; ++j) row[j] += bias[j];
    }
}

void relu_inplace(DenseMatrix& m) {
    for (double& v : m.data)
        if (v < 0.0) v = 0.0;
}

// Stable softmax rows + mean cross-entropy against integer labels.
// probs may alias logits.
double softmax_ce_rows(const DenseMatrix& logits, const std::vector<int>& labels,
                       DenseMatrix& probs) {
    probs = logits;
    double loss = 0.0;
    for (std::size_t i = 0; i < probs.rows; ++i) {
        double* row = probs.data.data() + i * probs.cols;
        double mx = row[0];
        for (std::size_t j = 1; j < probs.cols; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < probs.cols; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        for (std::size_t j = 0; j < probs.cols; ++j) row[j] /= sum;
        loss -= std::log(probs(i, static_cast<std::size_t>(labels[i])));
    }
    return loss / static_cast<double>(probs.rows);
}

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

void MlpArchitecture::validate() const {
    if (layer_sizes.size() < 3)
        throw std::invalid_argument("MlpArchitecture: need >= 3 layers (input, hidden, output)");
    for (std::size_t s : layer_sizes)
        if (s < 1) throw std::invalid_argument("MlpArchitecture: layer sizes must be >= 1");
}

void adadelta_step(AdaDeltaState& state, std::span<double> params, std::span<const double> grads) {
    if (params.size() != grads.size())
        throw std::invalid_argument("adadelta_step: param/grad size mismatch");
    if (state.acc_grad_sq.empty()) {
        state.acc_grad_sq.assign(params.size(), 0.0);
        state.acc_update_sq.assign(params.size(), 0.0);
    } else if (state.acc_grad_sq.size() != params.size()) {
        throw std::invalid_argument("adadelta_step: state shape mismatch");
    }
    const double rho = state.rho;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i] + state.weight_decay * params[i];
        state.acc_grad_sq[i] = rho * state.acc_grad_sq[i] + (1.0 - rho) * g * g;
        const double delta = std::sqrt(state.acc_update_sq[i] + state.epsilon) /
                             std::sqrt(state.acc_grad_sq[i] + state.epsilon) * g;
        state.acc_update_sq[i] = rho * state.acc_update_sq[i] + (1.0 - rho) * delta * delta;
        params[i] -= state.lr_multiplier * delta;
    }
}

TeacherMlp init_mlp(const MlpArchitecture& arch, std::uint64_t seed) {
    arch.validate();
    TeacherMlp mlp;
    mlp.arch = arch;
    SplitMix64 rng(seed);
    for (std::size_t l = 0; l + 1 < arch.layer_sizes.size(); ++l) {
        const std::size_t fan_in = arch.layer_sizes[l];
        const std::size_t fan_out = arch.layer_sizes[l + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        DenseMatrix w(fan_in, fan_out);
        for (double& v : w.data) v = rng.next_uniform(-bound, bound);
        mlp.weights.push_back(std::move(w));
        if (arch.use_bias) mlp.biases.emplace_back(fan_out, 0.0);
    }
    return mlp;
}

ForwardResult forward(const TeacherMlp& mlp, const DenseMatrix& x) {
    if (x.cols != mlp.arch.input_size())
        throw std::invalid_argument("forward: input width does not match architecture");
    ForwardResult res;
    DenseMatrix a = x;
    const std::size_t nl = mlp.arch.num_weight_layers();
    for (std::size_t l = 0; l < nl; ++l) {
        DenseMatrix z = matmul(a, mlp.weights[l]);
        if (mlp.arch.use_bias) add_bias_rows(z, mlp.biases[l]);
        if (relu_after(mlp.arch, l)) relu_inplace(z);
        if (l + 1 == nl) {
            res.logits = std::move(z);
        } else {
            res.hidden.push_back(z);
            a = std::move(z);
        }
    }
    return res;
}

DenseMatrix forward_logits(const TeacherMlp& mlp, const DenseMatrix& x) {
    if (x.cols != mlp.arch.input_size())
        throw std::invalid_argument("forward: input width does not match architecture");
    DenseMatrix a = x;
    const std::size_t nl = mlp.arch.num_weight_layers();
    for (std::size_t l = 0; l < nl; ++l) {
        DenseMatrix z = matmul(a, mlp.weights[l]);
        if (mlp.arch.use_bias) add_bias_rows(z, mlp.biases[l]);
        if (relu_after(mlp.arch, l)) relu_inplace(z);
        a = std::move(z);
    }
    return a;
}

BackwardResult ce_backward(const TeacherMlp& mlp, const DenseMatrix& x,
                           const std::vector<int>& labels) {
    if (x.rows != labels.size()) throw std::invalid_argument("ce_backward: label count mismatch");
    const std::size_t nl = mlp.arch.num_weight_layers();
    const std::size_t bsz = x.rows;

    // forward, keeping activations for backprop
    std::vector<DenseMatrix> acts;  // acts[0] = input, acts[l+1] = after layer l
    acts.reserve(nl + 1);
    acts.push_back(x);
    for (std::size_t l = 0; l < nl; ++l) {
        DenseMatrix z = matmul(acts.back(), mlp.weights[l]);
        if (mlp.arch.use_bias) add_bias_rows(z, mlp.biases[l]);
        if (relu_after(mlp.arch, l)) relu_inplace(z);
        acts.push_back(std::move(z));
    }

    BackwardResult res;
    DenseMatrix probs;
    res.loss = softmax_ce_rows(acts.back(), labels, probs);
    for (std::size_t i = 0; i < bsz; ++i)
        if (argmax_row(probs, i) == static_cast<std::size_t>(labels[i])) ++res.correct;

    res.grads.weights.resize(nl);
    if (mlp.arch.use_bias) res.grads.biases.resize(nl);

    // delta at the output: (softmax - one_hot) / B
    DenseMatrix delta = std::move(probs);
    for (std::size_t i = 0; i < bsz; ++i)
        delta(i, static_cast<std::size_t>(labels[i])) -= 1.0;
    const double inv_b = 1.0 / static_cast<double>(bsz);
    for (double& v : delta.data) v *= inv_b;

    for (std::size_t l = nl; l-- > 0;) {
        res.grads.weights[l] = matmul(transpose(acts[l]), delta);
        if (mlp.arch.use_bias) {
            auto& db = res.grads.biases[l];
            db.assign(delta.cols, 0.0);
            for (std::size_t i = 0; i < delta.rows; ++i)
                for (std::size_t j = 0; j < delta.cols; ++j) db[j] += delta(i, j);
        }
        if (l > 0) {
            DenseMatrix next = matmul(delta, transpose(mlp.weights[l]));
            if (relu_after(mlp.arch, l - 1)) {
                // acts[l] is post-ReLU; zero entries mask the gradient
                for (std::size_t i = 0; i < next.data.size(); ++i)
                    if (acts[l].data[i] <= 0.0) next.data[i] = 0.0;
            }
            delta = std::move(next);
        }
    }
    return res;
}

std::vector<EpochStats> train_teacher(TeacherMlp& mlp, const DenseMatrix& features,
                                      const LabelSet& labels, const TrainConfig& config) {
    mlp.arch.validate();
    if (features.rows != labels.count)
        throw std::invalid_argument("train_teacher: feature/label count mismatch");
    const std::size_t classes = mlp.arch.output_size();
    const std::size_t nl = mlp.arch.num_weight_layers();

    std::vector<AdaDeltaState> wstate(nl), bstate(mlp.arch.use_bias ? nl : 0);
    for (auto* states : {&wstate, &bstate})
        for (auto& s : *states) {
            s.rho = config.rho;
            s.epsilon = config.epsilon;
            s.weight_decay = config.weight_decay;
        }

    std::vector<EpochStats> log;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = config.lr * std::pow(config.lr_decay, static_cast<double>(epoch));
        for (auto& s : wstate) s.lr_multiplier = lr;
        for (auto& s : bstate) s.lr_multiplier = lr;

        BatchSequence batches(features, labels, config.batch_size,
                              derive_seed(config.seed, epoch), classes);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            const Batch batch = batches.batch(b);
            const BackwardResult back = ce_backward(mlp, batch.features, batch.labels);
            if (!std::isfinite(back.loss)) {
                char msg[96];
                std::snprintf(msg, sizeof(msg),
                              "train_teacher: diverged (non-finite loss at epoch %zu batch %zu)",
                              epoch, b);
                throw std::runtime_error(msg);
            }
            loss_sum += back.loss * static_cast<double>(batch.features.rows);
            correct += back.correct;
            for (std::size_t l = 0; l < nl; ++l) {
                adadelta_step(wstate[l], std::span<double>(mlp.weights[l].data),
                              std::span<const double>(back.grads.weights[l].data));
                if (mlp.arch.use_bias)
                    adadelta_step(bstate[l], std::span<double>(mlp.biases[l]),
                                  std::span<const double>(back.grads.biases[l]));
            }
        }
        EpochStats st;
        st.epoch = epoch;
        st.lr = lr;
        st.loss = loss_sum / static_cast<double>(features.rows);
        st.accuracy = static_cast<double>(correct) / static_cast<double>(features.rows);
        log.push_back(st);
    }
    return log;
}

LogitsFile make_logits_file(const TeacherMlp& mlp, const DenseMatrix& x, const std::string& provenance) {
    LogitsFile f;
    f.logits = forward_logits(mlp, x);
    f.count = f.logits.rows;
    f.classes = f.logits.cols;
    f.provenance = provenance;
    return f;
}

}  // namespace kooplift
