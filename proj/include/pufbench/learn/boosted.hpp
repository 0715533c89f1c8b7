#pragma once

#include <span>
#include <vector>

#include "pufbench/bits.hpp"
#include "pufbench/learn/tree.hpp"

namespace pufbench::learn {

struct BoostingOptions {
  std::size_t rounds = 35;
  std::size_t tree_depth = 3;
  double shrinkage = 0.3;
  double lambda = 1.0;
};

/// Logistic gradient boosting over regression trees for one response bit.
class BoostedTrees {
 public:
  double base_score = 0;  // F0: logit of the clamped training mean
  double shrinkage = 0.3;
  std::vector<DecisionTree> trees;
  /// Mean training logistic loss after each round; entry 0 is the F0-only loss.
  std::vector<double> train_loss;

  /// F0 + shrinkage * sum of the first `rounds` trees.
  double score(std::span<const std::uint8_t> x, std::size_t rounds = kUnlimitedDepth) const;
  bool predict(std::span<const std::uint8_t> x, std::size_t rounds = kUnlimitedDepth) const {
    return score(x, rounds) > 0.0;
  }
};

/// Constant labels short-circuit: F0 alone classifies them and no trees are grown.
BoostedTrees train_boosted_trees(const BitMatrix& x, std::span<const std::uint8_t> y, const BoostingOptions& options);

}  // namespace pufbench::learn
