#include "pufbench/learn/linear.hpp"

#include <numeric>

#include "pufbench/dataset.hpp"
#include "pufbench/error.hpp"
#include "pufbench/learn/loss.hpp"
#include "pufbench/learn/mlp.hpp"
#include "pufbench/puf.hpp"
#include "pufbench/rng.hpp"

namespace pufbench::learn {

namespace {

double accuracy(const Eigen::MatrixXd& logits, const BitMatrix& y) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < y.rows(); ++i) {
    for (std::size_t j = 0; j < y.cols(); ++j) {
      correct += (logits(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > 0.0) == (y(i, j) != 0);
    }
  }
  return static_cast<double>(correct) / static_cast<double>(y.rows() * y.cols());
}

}  // namespace

Eigen::MatrixXd ParityLogistic::features(const BitMatrix& challenges) {
  Eigen::MatrixXd phi(static_cast<Eigen::Index>(challenges.rows()), static_cast<Eigen::Index>(challenges.cols() + 1));
  for (std::size_t i = 0; i < challenges.rows(); ++i) {
    const auto row = ArbiterChain::parity_features(challenges.row(i));
    for (std::size_t k = 0; k < row.size(); ++k) phi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[k];
  }
  return phi;
}

Eigen::MatrixXd ParityLogistic::logits(const BitMatrix& challenges) const {
  if (static_cast<std::size_t>(weights.cols()) != challenges.cols() + 1) {
    throw Error(ErrorKind::WidthMismatch, "challenge width differs from the trained model");
  }
  return features(challenges) * weights.transpose();
}

LinearResult train_linear(const CrpDataset& train, const CrpDataset& validation, const LearnerConfig& config) {
  config.validate();
  if (train.size() == 0) throw Error(ErrorKind::InvalidArgument, "empty training set");
  const Eigen::MatrixXd phi = ParityLogistic::features(train.challenges());
  const BitMatrix& y = train.responses();
  const auto nr = static_cast<Eigen::Index>(train.response_bits());
  LinearResult result;
  result.trace.axis = "epoch";
  result.model.weights = Eigen::MatrixXd::Zero(nr, phi.cols());
  Adam<double> optimizer({std::span<double>(result.model.weights.data(), static_cast<std::size_t>(result.model.weights.size()))},
                         config.linear_learning_rate, 0.0);
  Rng rng = make_rng(config.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  Eigen::MatrixXd grad(result.model.weights.rows(), result.model.weights.cols());
  for (std::size_t epoch = 0; epoch < config.linear_epochs; ++epoch) {
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i);
      std::swap(order[i], order[pick(rng)]);
    }
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const double scale = 1.0 / static_cast<double>((end - begin) * static_cast<std::size_t>(nr));
      grad.setZero();
      for (std::size_t k = begin; k < end; ++k) {
        const auto row = phi.row(static_cast<Eigen::Index>(order[k]));
        for (Eigen::Index j = 0; j < nr; ++j) {
          const double z = result.model.weights.row(j).dot(row);
          grad.row(j) += (sigmoid(z) - y(order[k], static_cast<std::size_t>(j))) * scale * row;
        }
      }
      optimizer.step({std::span<double>(grad.data(), static_cast<std::size_t>(grad.size()))});
    }
    result.trace.points.push_back({epoch + 1, accuracy(result.model.logits(train.challenges()), y),
                                   accuracy(result.model.logits(validation.challenges()), validation.responses())});
  }
  return result;
}

}  // namespace pufbench::learn
