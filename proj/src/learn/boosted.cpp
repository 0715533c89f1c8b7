#include "pufbench/learn/boosted.hpp"

#include <cmath>

#include "pufbench/error.hpp"
#include "pufbench/learn/loss.hpp"

namespace pufbench::learn {

namespace {

double logistic_loss(std::span<const double> scores, std::span<const std::uint8_t> y) {
  double sum = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double z = scores[i];
    sum += std::max(z, 0.0) - z * y[i] + std::log1p(std::exp(-std::abs(z)));
  }
  return sum / static_cast<double>(scores.size());
}

}  // namespace

double BoostedTrees::score(std::span<const std::uint8_t> x, std::size_t rounds) const {
  // same accumulation order as training, so staged scores match the recorded state exactly
  double s = base_score;
  const std::size_t n = std::min(rounds, trees.size());
  for (std::size_t t = 0; t < n; ++t) s += shrinkage * trees[t].predict_value(x);
  return s;
}

BoostedTrees train_boosted_trees(const BitMatrix& x, std::span<const std::uint8_t> y, const BoostingOptions& options) {
  if (x.rows() == 0 || y.empty()) throw Error(ErrorKind::InvalidArgument, "empty training set");
  if (y.size() != x.rows()) throw Error(ErrorKind::ShapeMismatch, "label count differs from challenge count");
  if (options.rounds < 1 || options.rounds > 35) throw Error(ErrorKind::InvalidArgument, "rounds must lie in [1, 35]");
  const std::size_t n = y.size();
  std::size_t ones = 0;
  for (auto v : y) ones += v;

  BoostedTrees model;
  model.shrinkage = options.shrinkage;
  model.base_score = clamped_logit(static_cast<double>(ones) / static_cast<double>(n));
  std::vector<double> scores(n, model.base_score);
  model.train_loss.push_back(logistic_loss(scores, y));
  if (ones == 0 || ones == n) return model;

  std::vector<double> residual(n);
  std::vector<double> curvature(n);
  for (std::size_t round = 0; round < options.rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(scores[i]);
      residual[i] = y[i] - p;
      curvature[i] = p * (1.0 - p);
    }
    model.trees.push_back(grow_regressor(x, residual, curvature, options.tree_depth, options.lambda));
    const auto& tree = model.trees.back();
    for (std::size_t i = 0; i < n; ++i) scores[i] += options.shrinkage * tree.predict_value(x.row(i));
    model.train_loss.push_back(logistic_loss(scores, y));
  }
  return model;
}

}  // namespace pufbench::learn
