#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pufbench/bits.hpp"
#include "pufbench/learn/learner_config.hpp"
#include "pufbench/learn/trace.hpp"
#include "pufbench/rng.hpp"

namespace pufbench {
class CrpDataset;
}

namespace pufbench::learn {

struct MlpShape {
  std::size_t inputs = 0;
  std::vector<std::size_t> hidden;
  std::size_t outputs = 0;
  std::size_t norm_layers = 0;     // leading hidden layers followed by batch-norm
  std::size_t dropout_layers = 0;  // leading hidden layers followed by dropout
  double dropout_rate = 0;
  double leaky_slope = 0.01;

  friend bool operator==(const MlpShape&, const MlpShape&) = default;
};

enum class Mode {
  Train,     // batch statistics in batch-norm layers
  Inference  // running statistics in batch-norm layers, no dropout
};

/// Feed-forward network: affine -> [batch-norm] -> LeakyReLU -> [dropout] per hidden layer,
/// then an affine output layer emitting raw logits. Batches are column-major (features x batch).
template <typename T>
class BasicMlp {
 public:
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

  static constexpr T kNormEpsilon = T(1e-5);
  static constexpr T kNormMomentum = T(0.1);

  struct Layer {
    Matrix weight;  // out x in
    Vector bias;
    bool batch_norm = false;
    bool dropout = false;
    Vector gamma;
    Vector beta;
    Vector running_mean;
    Vector running_var;
  };

  struct LayerCache {
    Matrix input;
    Matrix normalized;  // x-hat, batch-norm layers only
    Vector inv_std;
    Matrix pre_activation;
    Matrix mask;        // scaled keep-mask, empty when dropout was not applied
  };

  struct Cache {
    Mode mode = Mode::Inference;
    std::vector<LayerCache> layers;
  };

  struct Gradients {
    std::vector<Matrix> weight;
    std::vector<Vector> bias;
    std::vector<Vector> gamma;
    std::vector<Vector> beta;
  };

  BasicMlp() = default;
  /// He-normal weights (std sqrt(2 / fan_in)), zero biases, unit batch-norm scale.
  BasicMlp(MlpShape shape, std::uint64_t seed);

  const MlpShape& shape() const noexcept { return shape_; }
  std::vector<Layer>& layers() noexcept { return layers_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }

  Matrix infer(const Matrix& input) const;

  /// Forward pass that keeps what backward() needs. With `rng` set, dropout layers draw masks;
  /// with `track_running_stats`, Train mode folds batch statistics into the running estimates.
  Matrix forward(const Matrix& input, Mode mode, Rng* rng, bool track_running_stats, Cache& cache);
  Gradients backward(const Cache& cache, const Matrix& grad_logits) const;

  /// Every trainable block in a fixed order: per layer weight, bias, then gamma and beta if present.
  std::vector<std::span<T>> parameters();
  static std::vector<std::span<T>> flatten(Gradients& grads);
  std::size_t parameter_count() const;

  template <typename U>
  BasicMlp<U> cast() const;

 private:
  template <typename>
  friend class BasicMlp;

  MlpShape shape_;
  std::vector<Layer> layers_;
};

using Mlp = BasicMlp<float>;

/// Adam with decoupled weight decay.
template <typename T>
class Adam {
 public:
  Adam(std::vector<std::span<T>> params, double learning_rate, double weight_decay);
  void set_learning_rate(double lr) { lr_ = lr; }
  void step(const std::vector<std::span<T>>& grads);

 private:
  std::vector<std::span<T>> params_;
  std::vector<std::vector<T>> m_;
  std::vector<std::vector<T>> v_;
  double lr_;
  double weight_decay_;
  std::size_t t_ = 0;
};

/// Batch of challenges as a (n_c x rows) matrix of 0/1 values.
template <typename T>
typename BasicMlp<T>::Matrix to_input(const BitMatrix& x, std::span<const std::size_t> rows);

/// Inference logits for every row of `x`, shaped outputs x rows.
Eigen::MatrixXf infer_all(const Mlp& net, const BitMatrix& x);

/// Fraction of entries where (logit > 0) equals the target bit; logits are outputs x rows.
double logit_accuracy(const Eigen::MatrixXf& logits, const BitMatrix& targets);

struct FitSchedule {
  std::size_t epochs = 1;
  std::size_t batch_size = 128;
  double learning_rate = 1e-3;
  double weight_decay = 0;
  std::size_t lr_step_epochs = 20;
  double lr_gamma = 0.5;
  std::uint64_t seed = 0;
};

/// Computes the batch loss and writes dL/dlogits into `grad` (same shape as `logits`).
using BatchLoss = std::function<double(std::span<const std::size_t> rows, const Eigen::MatrixXf& logits,
                                       Eigen::MatrixXf& grad)>;
using EpochHook = std::function<void(std::size_t epoch, double mean_loss)>;

/// Mini-batch Adam loop shared by the network trainers. Throws divergence on a non-finite loss.
void fit_network(Mlp& net, const BitMatrix& x, const FitSchedule& schedule, const BatchLoss& loss,
                 const EpochHook& on_epoch);

struct MlpResult {
  Mlp model;
  TrainingTrace trace;
};

/// Multi-output attack network trained with BCE-with-logits; one trace point per epoch.
MlpResult train_mlp(const CrpDataset& train, const CrpDataset& validation, const LearnerConfig& config);

MlpShape mlp_shape_for(const LearnerConfig& config, std::size_t inputs, std::size_t outputs);

}  // namespace pufbench::learn
