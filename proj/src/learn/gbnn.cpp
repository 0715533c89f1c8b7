#include "pufbench/learn/gbnn.hpp"

#include <cmath>

#include "pufbench/dataset.hpp"
#include "pufbench/error.hpp"
#include "pufbench/learn/loss.hpp"

namespace pufbench::learn {

Eigen::MatrixXf GbnnEnsemble::logits(const BitMatrix& x, std::size_t n_stages) const {
  Eigen::MatrixXf f = base_logits.replicate(1, static_cast<Eigen::Index>(x.rows()));
  const std::size_t n = std::min(n_stages, stages.size());
  for (std::size_t t = 0; t < n; ++t) f += static_cast<float>(stages[t].rho) * infer_all(stages[t].learner, x);
  return f;
}

MlpShape gbnn_base_shape(const LearnerConfig& config, std::size_t inputs, std::size_t outputs) {
  MlpShape s;
  s.inputs = inputs;
  s.hidden = config.gbnn_hidden_sizes;
  s.outputs = outputs;
  s.norm_layers = config.gbnn_norm_layers;
  s.dropout_layers = 0;
  s.leaky_slope = config.leaky_slope;
  return s;
}

GbnnResult train_gbnn(const CrpDataset& train, const CrpDataset& validation, const LearnerConfig& config) {
  config.validate();
  if (train.size() == 0) throw Error(ErrorKind::InvalidArgument, "empty training set");
  if (validation.challenge_bits() != train.challenge_bits() || validation.response_bits() != train.response_bits()) {
    throw Error(ErrorKind::ShapeMismatch, "train and validation widths differ");
  }
  const BitMatrix& x = train.challenges();
  const BitMatrix& y = train.responses();
  const std::size_t nr = train.response_bits();

  GbnnResult result;
  result.trace.axis = "stage";
  result.model.base_logits.resize(static_cast<Eigen::Index>(nr));
  for (std::size_t j = 0; j < nr; ++j) {
    std::size_t ones = 0;
    for (std::size_t i = 0; i < y.rows(); ++i) ones += y(i, j);
    result.model.base_logits(static_cast<Eigen::Index>(j)) =
        static_cast<float>(clamped_logit(static_cast<double>(ones) / static_cast<double>(y.rows())));
  }
  Eigen::MatrixXf f_train = result.model.logits(x);
  Eigen::MatrixXf f_val = result.model.logits(validation.challenges());
  if (config.gbnn_stages == 0) {
    result.trace.points.push_back(
        {0, logit_accuracy(f_train, y), logit_accuracy(f_val, validation.responses())});
    return result;
  }

  const float rho = static_cast<float>(config.gbnn_rho);
  for (std::size_t t = 0; t < config.gbnn_stages; ++t) {
    const std::uint64_t stage_seed = child_seed(config.seed, t + 1);
    Mlp learner(gbnn_base_shape(config, train.challenge_bits(), nr), child_seed(stage_seed, 0));
    // the stage target is fixed by the ensemble so far
    auto loss = [&](std::span<const std::size_t> rows, const Eigen::MatrixXf& h, Eigen::MatrixXf& grad) {
      const double scale = 1.0 / static_cast<double>(h.size());
      double sum = 0;
      for (Eigen::Index c = 0; c < h.cols(); ++c) {
        const auto row = rows[static_cast<std::size_t>(c)];
        auto target = y.row(row);
        for (Eigen::Index r = 0; r < h.rows(); ++r) {
          const double prior = f_train(r, static_cast<Eigen::Index>(row));
          const double yt = target[static_cast<std::size_t>(r)];
          if (config.gbnn_stage_fit == GbnnStageFit::Logistic) {
            const double z = prior + rho * h(r, c);
            sum += std::max(z, 0.0) - z * yt + std::log1p(std::exp(-std::abs(z)));
            grad(r, c) = static_cast<float>(rho * (sigmoid(z) - yt) * scale);
          } else {
            const double diff = h(r, c) - (yt - sigmoid(prior));
            sum += diff * diff;
            grad(r, c) = static_cast<float>(2.0 * diff * scale);
          }
        }
      }
      return sum * scale;
    };
    FitSchedule schedule{config.gbnn_epochs_per_stage, config.batch_size, config.gbnn_learning_rate,
                         config.gbnn_weight_decay,     config.lr_step_epochs, config.lr_gamma, stage_seed};
    fit_network(learner, x, schedule, loss, {});
    f_train += rho * infer_all(learner, x);
    f_val += rho * infer_all(learner, validation.challenges());
    result.model.stages.push_back({std::move(learner), config.gbnn_rho});
    result.trace.points.push_back(
        {t + 1, logit_accuracy(f_train, y), logit_accuracy(f_val, validation.responses())});
  }
  return result;
}

}  // namespace pufbench::learn
