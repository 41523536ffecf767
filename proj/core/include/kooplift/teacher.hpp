#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kooplift/dataset.hpp"
#include "kooplift/matrix.hpp"

namespace kooplift {

/// Fully connected ReLU network shape. With the defaults the activation is
/// omitted from the first hidden layer and the output layer.
struct MlpArchitecture {
    std::vector<std::size_t> layer_sizes;  // input, hidden..., output
    bool first_hidden_linear = true;
    bool output_linear = true;
    bool use_bias = true;

    std::size_t input_size() const { return layer_sizes.front(); }
    std::size_t output_size() const { return layer_sizes.back(); }
    std::size_t num_weight_layers() const { return layer_sizes.size() - 1; }
    void validate() const;  // >= 3 layers, all sizes >= 1
};

struct TeacherMlp {
    MlpArchitecture arch;
    std::vector<DenseMatrix> weights;         // weights[l]: sizes[l] x sizes[l+1]
    std::vector<std::vector<double>> biases;  // biases[l]: sizes[l+1]; empty iff !use_bias
};

struct ForwardResult {
    DenseMatrix logits;                // B x C
    std::vector<DenseMatrix> hidden;   // hidden[0] = z1 ... hidden[L-1] = zL (post-activation)
};

/// AdaDelta accumulator state for one parameter tensor.
/// Update rule (L2 weight decay coupled into the gradient first):
///   g       <- grad + weight_decay * param
///   E[g2]   <- rho E[g2] + (1 - rho) g^2
///   delta   <- sqrt(E[dx2] + eps) / sqrt(E[g2] + eps) * g
///   E[dx2]  <- rho E[dx2] + (1 - rho) delta^2
///   param   <- param - lr_multiplier * delta
struct AdaDeltaState {
    double rho = 0.9;
    double epsilon = 1e-6;
    double weight_decay = 0.0;
    double lr_multiplier = 1.0;
    std::vector<double> acc_grad_sq;    // E[g^2], sized on first step
    std::vector<double> acc_update_sq;  // E[dx^2]
};

void adadelta_step(AdaDeltaState& state, std::span<double> params, std::span<const double> grads);

/// Kaiming-style uniform init, bound sqrt(6 / fan_in); biases start at zero.
/// Identical seeds give bit-identical weights.
TeacherMlp init_mlp(const MlpArchitecture& arch, std::uint64_t seed);

ForwardResult forward(const TeacherMlp& mlp, const DenseMatrix& x);
DenseMatrix forward_logits(const TeacherMlp& mlp, const DenseMatrix& x);

struct MlpGradients {
    std::vector<DenseMatrix> weights;
    std::vector<std::vector<double>> biases;  // empty when the model has no biases
};

struct BackwardResult {
    double loss = 0.0;        // mean softmax cross-entropy over the batch
    std::size_t correct = 0;  // argmax hits against the labels
    MlpGradients grads;
};

/// Forward + backprop of the mean cross-entropy loss for one batch.
BackwardResult ce_backward(const TeacherMlp& mlp, const DenseMatrix& x,
                           const std::vector<int>& labels);

struct TrainConfig {
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    double rho = 0.9;
    double epsilon = 1e-6;
    double weight_decay = 1e-4;
    double lr = 1.0;        // initial learning-rate multiplier
    double lr_decay = 0.75; // per-epoch factor
    std::uint64_t seed = 0;
};

struct EpochStats {
    std::size_t epoch = 0;
    double lr = 0.0;
    double loss = 0.0;      // mean cross-entropy over the epoch's samples
    double accuracy = 0.0;  // running train accuracy (pre-update predictions)
};

/// Softmax cross-entropy training with AdaDelta and per-epoch lr decay.
/// Mutates `mlp` in place; throws if the loss turns non-finite.
std::vector<EpochStats> train_teacher(TeacherMlp& mlp, const DenseMatrix& features,
                                      const LabelSet& labels, const TrainConfig& config);

/// Teacher outputs saved for later distillation (e.g. from an external model).
struct LogitsFile {
    std::size_t count = 0;
    std::size_t classes = 0;
    DenseMatrix logits;
    std::string provenance;
};

LogitsFile make_logits_file(const TeacherMlp& mlp, const DenseMatrix& x, const std::string& provenance);

}  // namespace kooplift
