#include "pufbench/learn/mlp.hpp"

#include <cmath>
#include <numeric>

#include "pufbench/dataset.hpp"
#include "pufbench/error.hpp"

namespace pufbench::learn {

template <typename T>
BasicMlp<T>::BasicMlp(MlpShape shape, std::uint64_t seed) : shape_(std::move(shape)) {
  if (shape_.inputs == 0 || shape_.outputs == 0) throw Error(ErrorKind::InvalidArgument, "network needs inputs and outputs");
  if (shape_.hidden.empty()) throw Error(ErrorKind::InvalidArgument, "network needs at least one hidden layer");
  Rng rng = make_rng(seed);
  std::size_t fan_in = shape_.inputs;
  auto make_layer = [&](std::size_t out, std::size_t index) {
    Layer layer;
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    layer.weight.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(fan_in));
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) layer.weight(r, c) = static_cast<T>(normal(rng));
    }
    layer.bias = Vector::Zero(static_cast<Eigen::Index>(out));
    const bool hidden = index < shape_.hidden.size();
    layer.batch_norm = hidden && index < shape_.norm_layers;
    layer.dropout = hidden && index < shape_.dropout_layers && shape_.dropout_rate > 0;
    if (layer.batch_norm) {
      layer.gamma = Vector::Ones(static_cast<Eigen::Index>(out));
      layer.beta = Vector::Zero(static_cast<Eigen::Index>(out));
      layer.running_mean = Vector::Zero(static_cast<Eigen::Index>(out));
      layer.running_var = Vector::Ones(static_cast<Eigen::Index>(out));
    }
    fan_in = out;
    return layer;
  };
  for (std::size_t i = 0; i < shape_.hidden.size(); ++i) layers_.push_back(make_layer(shape_.hidden[i], i));
  layers_.push_back(make_layer(shape_.outputs, shape_.hidden.size()));
}

template <typename T>
typename BasicMlp<T>::Matrix BasicMlp<T>::infer(const Matrix& input) const {
  if (static_cast<std::size_t>(input.rows()) != shape_.inputs) {
    throw Error(ErrorKind::ShapeMismatch, "input has " + std::to_string(input.rows()) + " features, network expects " +
                                              std::to_string(shape_.inputs));
  }
  const T slope = static_cast<T>(shape_.leaky_slope);
  Matrix a = input;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    Matrix z = layer.weight * a;
    z.colwise() += layer.bias;
    if (l + 1 == layers_.size()) return z;
    if (layer.batch_norm) {
      const Vector scale = layer.gamma.array() * (layer.running_var.array() + kNormEpsilon).rsqrt();
      const Vector shift = layer.beta.array() - layer.running_mean.array() * scale.array();
      z = (z.array().colwise() * scale.array()).colwise() + shift.array();
    }
    a = z.unaryExpr([slope](T u) { return u > T(0) ? u : slope * u; });
  }
  return a;
}

template <typename T>
typename BasicMlp<T>::Matrix BasicMlp<T>::forward(const Matrix& input, Mode mode, Rng* rng, bool track_running_stats,
                                                  Cache& cache) {
  if (static_cast<std::size_t>(input.rows()) != shape_.inputs) throw Error(ErrorKind::ShapeMismatch, "input width");
  const T slope = static_cast<T>(shape_.leaky_slope);
  const auto batch = input.cols();
  cache.mode = mode;
  cache.layers.resize(layers_.size());
  Matrix a = input;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    auto& layer = layers_[l];
    auto& lc = cache.layers[l];
    lc.input = std::move(a);
    Matrix z = layer.weight * lc.input;
    z.colwise() += layer.bias;
    if (l + 1 == layers_.size()) return z;
    if (layer.batch_norm) {
      if (mode == Mode::Train) {
        const Vector mean = z.rowwise().mean();
        z.colwise() -= mean;
        const Vector var = z.array().square().rowwise().mean();
        lc.inv_std = (var.array() + kNormEpsilon).rsqrt();
        if (track_running_stats) {
          const T unbiased = batch > 1 ? static_cast<T>(batch) / static_cast<T>(batch - 1) : T(1);
          layer.running_mean = (T(1) - kNormMomentum) * layer.running_mean + kNormMomentum * mean;
          layer.running_var = (T(1) - kNormMomentum) * layer.running_var + kNormMomentum * unbiased * var;
        }
      } else {
        z.colwise() -= layer.running_mean;
        lc.inv_std = (layer.running_var.array() + kNormEpsilon).rsqrt();
      }
      lc.normalized = z.array().colwise() * lc.inv_std.array();
      z = (lc.normalized.array().colwise() * layer.gamma.array()).colwise() + layer.beta.array();
    }
    lc.pre_activation = std::move(z);
    a = lc.pre_activation.unaryExpr([slope](T u) { return u > T(0) ? u : slope * u; });
    if (layer.dropout && rng != nullptr) {
      const double keep = 1.0 - shape_.dropout_rate;
      const T scale = static_cast<T>(1.0 / keep);
      lc.mask.resize(a.rows(), a.cols());
      for (Eigen::Index i = 0; i < lc.mask.size(); ++i) lc.mask.data()[i] = uniform01(*rng) < keep ? scale : T(0);
      a.array() *= lc.mask.array();
    } else {
      lc.mask.resize(0, 0);
    }
  }
  return a;
}

template <typename T>
typename BasicMlp<T>::Gradients BasicMlp<T>::backward(const Cache& cache, const Matrix& grad_logits) const {
  const T slope = static_cast<T>(shape_.leaky_slope);
  const std::size_t n = layers_.size();
  Gradients g;
  g.weight.resize(n);
  g.bias.resize(n);
  g.gamma.resize(n);
  g.beta.resize(n);
  Matrix dz = grad_logits;
  for (std::size_t l = n; l-- > 0;) {
    const auto& layer = layers_[l];
    const auto& lc = cache.layers[l];
    if (l + 1 < n) {
      // dz currently holds dL/d(layer output after dropout)
      if (lc.mask.size() > 0) dz.array() *= lc.mask.array();
      dz = dz.binaryExpr(lc.pre_activation, [slope](T d, T u) { return u > T(0) ? d : slope * d; });
      if (layer.batch_norm) {
        g.gamma[l] = (dz.array() * lc.normalized.array()).rowwise().sum();
        g.beta[l] = dz.rowwise().sum();
        Matrix dxhat = dz.array().colwise() * layer.gamma.array();
        if (cache.mode == Mode::Train) {
          const T b = static_cast<T>(dxhat.cols());
          const Vector sum_d = dxhat.rowwise().sum();
          const Vector sum_dx = (dxhat.array() * lc.normalized.array()).rowwise().sum();
          Matrix t = (b * dxhat).colwise() - sum_d;
          t -= (lc.normalized.array().colwise() * sum_dx.array()).matrix();
          dz = t.array().colwise() * (lc.inv_std.array() / b);
        } else {
          dz = dxhat.array().colwise() * lc.inv_std.array();
        }
      }
    }
    g.weight[l].noalias() = dz * lc.input.transpose();
    g.bias[l] = dz.rowwise().sum();
    if (l > 0) {
      Matrix prev = layer.weight.transpose() * dz;
      dz = std::move(prev);
    }
  }
  return g;
}

template <typename T>
std::vector<std::span<T>> BasicMlp<T>::parameters() {
  std::vector<std::span<T>> out;
  for (auto& layer : layers_) {
    out.emplace_back(layer.weight.data(), static_cast<std::size_t>(layer.weight.size()));
    out.emplace_back(layer.bias.data(), static_cast<std::size_t>(layer.bias.size()));
    if (layer.batch_norm) {
      out.emplace_back(layer.gamma.data(), static_cast<std::size_t>(layer.gamma.size()));
      out.emplace_back(layer.beta.data(), static_cast<std::size_t>(layer.beta.size()));
    }
  }
  return out;
}

template <typename T>
std::vector<std::span<T>> BasicMlp<T>::flatten(Gradients& g) {
  std::vector<std::span<T>> out;
  for (std::size_t l = 0; l < g.weight.size(); ++l) {
    out.emplace_back(g.weight[l].data(), static_cast<std::size_t>(g.weight[l].size()));
    out.emplace_back(g.bias[l].data(), static_cast<std::size_t>(g.bias[l].size()));
    if (g.gamma[l].size() > 0) {
      out.emplace_back(g.gamma[l].data(), static_cast<std::size_t>(g.gamma[l].size()));
      out.emplace_back(g.beta[l].data(), static_cast<std::size_t>(g.beta[l].size()));
    }
  }
  return out;
}

template <typename T>
std::size_t BasicMlp<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) {
    n += static_cast<std::size_t>(layer.weight.size() + layer.bias.size() + layer.gamma.size() + layer.beta.size());
  }
  return n;
}

template <typename T>
template <typename U>
BasicMlp<U> BasicMlp<T>::cast() const {
  BasicMlp<U> out;
  out.shape_ = shape_;
  for (const auto& layer : layers_) {
    typename BasicMlp<U>::Layer l;
    l.weight = layer.weight.template cast<U>();
    l.bias = layer.bias.template cast<U>();
    l.batch_norm = layer.batch_norm;
    l.dropout = layer.dropout;
    l.gamma = layer.gamma.template cast<U>();
    l.beta = layer.beta.template cast<U>();
    l.running_mean = layer.running_mean.template cast<U>();
    l.running_var = layer.running_var.template cast<U>();
    out.layers_.push_back(std::move(l));
  }
  return out;
}

template class BasicMlp<float>;
template class BasicMlp<double>;
template BasicMlp<double> BasicMlp<float>::cast<double>() const;
template BasicMlp<float> BasicMlp<double>::cast<float>() const;

// --- optimizer -------------------------------------------------------------------

template <typename T>
Adam<T>::Adam(std::vector<std::span<T>> params, double learning_rate, double weight_decay)
    : params_(std::move(params)), lr_(learning_rate), weight_decay_(weight_decay) {
  for (const auto& p : params_) {
    m_.emplace_back(p.size(), T(0));
    v_.emplace_back(p.size(), T(0));
  }
}

template <typename T>
void Adam<T>::step(const std::vector<std::span<T>>& grads) {
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;
  ++t_;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  const T decay = static_cast<T>(1.0 - lr_ * weight_decay_);
  const T step = static_cast<T>(lr_ / c1);
  const T inv_c2 = static_cast<T>(1.0 / c2);
  for (std::size_t b = 0; b < params_.size(); ++b) {
    auto p = params_[b];
    auto g = grads[b];
    auto& m = m_[b];
    auto& v = v_[b];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = static_cast<T>(beta1) * m[i] + static_cast<T>(1 - beta1) * g[i];
      v[i] = static_cast<T>(beta2) * v[i] + static_cast<T>(1 - beta2) * g[i] * g[i];
      p[i] = p[i] * decay - step * m[i] / (std::sqrt(v[i] * inv_c2) + static_cast<T>(eps));
    }
  }
}

template class Adam<float>;
template class Adam<double>;

// --- training ----------------------------------------------------------------------

template <typename T>
typename BasicMlp<T>::Matrix to_input(const BitMatrix& x, std::span<const std::size_t> rows) {
  typename BasicMlp<T>::Matrix m(static_cast<Eigen::Index>(x.cols()), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t c = 0; c < rows.size(); ++c) {
    auto row = x.row(rows[c]);
    for (std::size_t f = 0; f < row.size(); ++f) m(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(c)) = row[f];
  }
  return m;
}

template BasicMlp<float>::Matrix to_input<float>(const BitMatrix&, std::span<const std::size_t>);
template BasicMlp<double>::Matrix to_input<double>(const BitMatrix&, std::span<const std::size_t>);

Eigen::MatrixXf infer_all(const Mlp& net, const BitMatrix& x) {
  constexpr std::size_t kChunk = 2048;
  Eigen::MatrixXf out(static_cast<Eigen::Index>(net.shape().outputs), static_cast<Eigen::Index>(x.rows()));
  std::vector<std::size_t> rows;
  for (std::size_t begin = 0; begin < x.rows(); begin += kChunk) {
    const std::size_t end = std::min(x.rows(), begin + kChunk);
    rows.resize(end - begin);
    std::iota(rows.begin(), rows.end(), begin);
    out.middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin)) =
        net.infer(to_input<float>(x, rows));
  }
  return out;
}

double logit_accuracy(const Eigen::MatrixXf& logits, const BitMatrix& targets) {
  if (static_cast<std::size_t>(logits.cols()) != targets.rows() ||
      static_cast<std::size_t>(logits.rows()) != targets.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "logit and target shapes differ");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < targets.rows(); ++i) {
    for (std::size_t j = 0; j < targets.cols(); ++j) {
      correct += (logits(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) > 0.0f) == (targets(i, j) != 0);
    }
  }
  return static_cast<double>(correct) / static_cast<double>(targets.rows() * targets.cols());
}

void fit_network(Mlp& net, const BitMatrix& x, const FitSchedule& schedule, const BatchLoss& loss,
                 const EpochHook& on_epoch) {
  const std::size_t n = x.rows();
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "empty training set");
  const bool has_norm = std::any_of(net.layers().begin(), net.layers().end(), [](const auto& l) { return l.batch_norm; });
  Adam<float> optimizer(net.parameters(), schedule.learning_rate, schedule.weight_decay);
  Rng shuffle_rng = make_rng(child_seed(schedule.seed, 1));
  Rng dropout_rng = make_rng(child_seed(schedule.seed, 2));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Mlp::Cache cache;
  Eigen::MatrixXf grad;
  for (std::size_t epoch = 0; epoch < schedule.epochs; ++epoch) {
    optimizer.set_learning_rate(schedule.learning_rate *
                                std::pow(schedule.lr_gamma, static_cast<double>(epoch / schedule.lr_step_epochs)));
    for (std::size_t i = n - 1; i > 0; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(order[i], order[pick(shuffle_rng)]);
    }
    double loss_sum = 0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < n; begin += schedule.batch_size) {
      const std::size_t end = std::min(n, begin + schedule.batch_size);
      if (has_norm && end - begin < 2) continue;  // batch statistics need two rows
      std::span<const std::size_t> rows(order.data() + begin, end - begin);
      const Eigen::MatrixXf logits = net.forward(to_input<float>(x, rows), Mode::Train, &dropout_rng, true, cache);
      grad.resize(logits.rows(), logits.cols());
      const double batch_loss = loss(rows, logits, grad);
      if (!std::isfinite(batch_loss)) {
        throw Error(ErrorKind::Divergence, "non-finite loss in epoch " + std::to_string(epoch + 1));
      }
      loss_sum += batch_loss;
      ++batches;
      auto g = net.backward(cache, grad);
      optimizer.step(Mlp::flatten(g));
    }
    if (on_epoch) on_epoch(epoch + 1, batches ? loss_sum / static_cast<double>(batches) : 0.0);
  }
}

MlpShape mlp_shape_for(const LearnerConfig& config, std::size_t inputs, std::size_t outputs) {
  MlpShape s;
  s.inputs = inputs;
  s.hidden = config.mlp_hidden_sizes;
  s.outputs = outputs;
  s.norm_layers = config.norm_layers;
  s.dropout_layers = config.norm_layers;
  s.dropout_rate = config.dropout_rate;
  s.leaky_slope = config.leaky_slope;
  return s;
}

MlpResult train_mlp(const CrpDataset& train, const CrpDataset& validation, const LearnerConfig& config) {
  config.validate();
  if (train.size() == 0) throw Error(ErrorKind::InvalidArgument, "empty training set");
  if (validation.challenge_bits() != train.challenge_bits() || validation.response_bits() != train.response_bits()) {
    throw Error(ErrorKind::ShapeMismatch, "train and validation widths differ");
  }
  const BitMatrix& x = train.challenges();
  const BitMatrix& y = train.responses();
  MlpResult result{Mlp(mlp_shape_for(config, train.challenge_bits(), train.response_bits()), child_seed(config.seed, 0)),
                   TrainingTrace{"epoch", {}}};
  auto loss = [&](std::span<const std::size_t> rows, const Eigen::MatrixXf& logits, Eigen::MatrixXf& grad) {
    const double scale = 1.0 / static_cast<double>(logits.size());
    double sum = 0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      auto target = y.row(rows[static_cast<std::size_t>(c)]);
      for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double z = logits(r, c);
        const double t = target[static_cast<std::size_t>(r)];
        sum += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
        const double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
        grad(r, c) = static_cast<float>((p - t) * scale);
      }
    }
    return sum * scale;
  };
  auto on_epoch = [&](std::size_t epoch, double) {
    result.trace.points.push_back({epoch, logit_accuracy(infer_all(result.model, x), y),
                                   logit_accuracy(infer_all(result.model, validation.challenges()),
                                                  validation.responses())});
  };
  FitSchedule schedule{config.epochs,         config.batch_size, config.learning_rate, config.weight_decay,
                       config.lr_step_epochs, config.lr_gamma,   config.seed};
  fit_network(result.model, x, schedule, loss, on_epoch);
  return result;
}

}  // namespace pufbench::learn
