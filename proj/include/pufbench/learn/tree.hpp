#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "pufbench/bits.hpp"

namespace pufbench::learn {

inline constexpr std::size_t kUnlimitedDepth = std::numeric_limits<std::size_t>::max();

struct TreeNode {
  std::int32_t feature = -1;  // challenge bit tested; -1 marks a leaf
  std::int32_t left = -1;     // child taken when the bit is 0
  std::int32_t right = -1;    // child taken when the bit is 1
  std::uint32_t depth = 0;
  /// Empirical 1-probability (classification) or Newton leaf weight (regression).
  /// Internal nodes keep their own value so a tree can be read truncated at any depth.
  double value = 0;
};

/// Binary tree over challenge bits. Root is nodes[0].
class DecisionTree {
 public:
  std::vector<TreeNode> nodes;

  /// Value of the node reached from the root, stopping at `max_depth`.
  double predict_value(std::span<const std::uint8_t> x, std::size_t max_depth = kUnlimitedDepth) const;
  /// Classification read-out: 1 iff the leaf probability is above one half.
  bool predict(std::span<const std::uint8_t> x, std::size_t max_depth = kUnlimitedDepth) const {
    return predict_value(x, max_depth) > 0.5;
  }
  std::size_t depth() const;
  std::size_t leaf_count() const;
};

struct ClassifierOptions {
  std::size_t max_depth = 20;
  /// Features examined per split; 0 means all of them.
  std::size_t features_per_split = 0;
  std::uint64_t seed = 0;
};

/// Greedy CART on Gini impurity. `multiplicity` (optional) weights each row, e.g. bootstrap counts.
/// The split with the lowest weighted child impurity wins, ties going to the lowest feature index.
/// Splits that separate the node without reducing impurity are still taken, so growth stops only
/// at max_depth, at a pure node, or when no feature separates the node's rows.
DecisionTree grow_classifier(const BitMatrix& x, std::span<const std::uint8_t> y,
                             std::span<const std::uint32_t> multiplicity, const ClassifierOptions& options);

DecisionTree train_tree(const BitMatrix& x, std::span<const std::uint8_t> y, std::size_t max_depth);

class RandomForest {
 public:
  std::vector<DecisionTree> trees;
  std::vector<std::uint64_t> tree_seeds;

  /// Majority vote over the first `n_trees` trees; a tie votes 0.
  bool predict(std::span<const std::uint8_t> x, std::size_t n_trees = kUnlimitedDepth) const;
};

/// Bagged trees: bootstrap of size N, ceil(sqrt(n_c)) candidate features per split.
RandomForest train_forest(const BitMatrix& x, std::span<const std::uint8_t> y, std::size_t n_trees,
                          std::uint64_t seed, std::size_t max_depth = 20);

/// Second-order regression tree used by boosting: split gain
/// GL^2/(HL+lambda) + GR^2/(HR+lambda) - G^2/(H+lambda) > 0, leaf weight G/(H+lambda),
/// where G sums residuals and H sums curvatures.
DecisionTree grow_regressor(const BitMatrix& x, std::span<const double> residual, std::span<const double> curvature,
                            std::size_t max_depth, double lambda);

}  // namespace pufbench::learn
