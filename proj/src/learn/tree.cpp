#include "pufbench/learn/tree.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "pufbench/error.hpp"
#include "pufbench/rng.hpp"

namespace pufbench::learn {

namespace {

struct PendingNode {
  std::int32_t id;
  std::vector<std::uint32_t> rows;
};

void check_training_set(const BitMatrix& x, std::size_t labels) {
  if (x.rows() == 0) throw Error(ErrorKind::InvalidArgument, "empty training set");
  if (labels != x.rows()) throw Error(ErrorKind::ShapeMismatch, "label count differs from challenge count");
}

std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>> partition(const BitMatrix& x,
                                                                          const std::vector<std::uint32_t>& rows,
                                                                          std::size_t feature) {
  std::vector<std::uint32_t> left;
  std::vector<std::uint32_t> right;
  for (auto r : rows) (x(r, feature) ? right : left).push_back(r);
  return {std::move(left), std::move(right)};
}

// Gini score to maximize: sum over children of (pos^2 + neg^2) / n.
double purity_score(double n, double pos) {
  if (n <= 0) return 0;
  const double neg = n - pos;
  return (pos * pos + neg * neg) / n;
}

}  // namespace

double DecisionTree::predict_value(std::span<const std::uint8_t> x, std::size_t max_depth) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0 && nodes[i].depth < max_depth) {
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(nodes[i].feature)] ? nodes[i].right : nodes[i].left);
  }
  return nodes[i].value;
}

std::size_t DecisionTree::depth() const {
  std::size_t d = 0;
  for (const auto& n : nodes) d = std::max<std::size_t>(d, n.depth);
  return d;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

DecisionTree grow_classifier(const BitMatrix& x, std::span<const std::uint8_t> y,
                             std::span<const std::uint32_t> multiplicity, const ClassifierOptions& options) {
  check_training_set(x, y.size());
  if (!multiplicity.empty() && multiplicity.size() != y.size()) {
    throw Error(ErrorKind::ShapeMismatch, "multiplicity length differs from label count");
  }
  if (options.max_depth < 1) throw Error(ErrorKind::InvalidArgument, "max_depth must be at least 1");
  const std::size_t nf = x.cols();
  const std::size_t subset = options.features_per_split == 0 ? nf : std::min(nf, options.features_per_split);
  Rng rng = make_rng(options.seed);
  auto weight = [&](std::uint32_t r) -> double { return multiplicity.empty() ? 1.0 : multiplicity[r]; };

  DecisionTree tree;
  std::deque<PendingNode> queue;
  {
    PendingNode root{0, {}};
    for (std::uint32_t r = 0; r < y.size(); ++r) {
      if (weight(r) > 0) root.rows.push_back(r);
    }
    if (root.rows.empty()) throw Error(ErrorKind::InvalidArgument, "empty training set");
    tree.nodes.push_back(TreeNode{});
    queue.push_back(std::move(root));
  }

  std::vector<double> n1(nf);
  std::vector<double> p1(nf);
  std::vector<std::size_t> features(nf);
  while (!queue.empty()) {
    PendingNode node = std::move(queue.front());
    queue.pop_front();
    double total = 0;
    double positives = 0;
    std::fill(n1.begin(), n1.end(), 0.0);
    std::fill(p1.begin(), p1.end(), 0.0);
    for (auto r : node.rows) {
      const double w = weight(r);
      const double wy = y[r] ? w : 0.0;
      total += w;
      positives += wy;
      auto row = x.row(r);
      for (std::size_t f = 0; f < nf; ++f) {
        if (row[f]) {
          n1[f] += w;
          p1[f] += wy;
        }
      }
    }
    auto& current = tree.nodes[static_cast<std::size_t>(node.id)];
    current.value = positives / total;
    if (current.depth >= options.max_depth || positives == 0 || positives == total) continue;

    auto best_split = [&](std::span<const std::size_t> candidates) {
      std::int64_t best = -1;
      double best_score = -1;
      for (auto f : candidates) {
        const double nr = n1[f];
        const double nl = total - nr;
        if (nr <= 0 || nl <= 0) continue;
        const double score = purity_score(nl, positives - p1[f]) + purity_score(nr, p1[f]);
        if (score > best_score || (score == best_score && static_cast<std::int64_t>(f) < best)) {
          best_score = score;
          best = static_cast<std::int64_t>(f);
        }
      }
      return best;
    };

    std::iota(features.begin(), features.end(), 0);
    std::int64_t chosen;
    if (subset < nf) {
      for (std::size_t k = 0; k < subset; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, nf - 1);
        std::swap(features[k], features[pick(rng)]);
      }
      chosen = best_split(std::span(features).first(subset));
      if (chosen < 0) chosen = best_split(features);  // none of the sampled bits separates this node
    } else {
      chosen = best_split(features);
    }
    if (chosen < 0) continue;

    auto [left_rows, right_rows] = partition(x, node.rows, static_cast<std::size_t>(chosen));
    const auto depth = current.depth + 1;
    const auto left_id = static_cast<std::int32_t>(tree.nodes.size());
    current.feature = static_cast<std::int32_t>(chosen);
    current.left = left_id;
    current.right = left_id + 1;
    tree.nodes.push_back(TreeNode{-1, -1, -1, depth, 0});
    tree.nodes.push_back(TreeNode{-1, -1, -1, depth, 0});
    queue.push_back({left_id, std::move(left_rows)});
    queue.push_back({left_id + 1, std::move(right_rows)});
  }
  return tree;
}

DecisionTree train_tree(const BitMatrix& x, std::span<const std::uint8_t> y, std::size_t max_depth) {
  if (max_depth < 1 || max_depth > 20) throw Error(ErrorKind::InvalidArgument, "tree depth must lie in [1, 20]");
  return grow_classifier(x, y, {}, ClassifierOptions{max_depth, 0, 0});
}

bool RandomForest::predict(std::span<const std::uint8_t> x, std::size_t n_trees) const {
  const std::size_t n = std::min(n_trees, trees.size());
  std::size_t ones = 0;
  for (std::size_t t = 0; t < n; ++t) ones += trees[t].predict(x);
  return 2 * ones > n;
}

RandomForest train_forest(const BitMatrix& x, std::span<const std::uint8_t> y, std::size_t n_trees,
                          std::uint64_t seed, std::size_t max_depth) {
  check_training_set(x, y.size());
  if (n_trees < 1 || n_trees > 35) throw Error(ErrorKind::InvalidArgument, "n_trees must lie in [1, 35]");
  const std::size_t n = y.size();
  const auto features = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(x.cols()))));
  RandomForest forest;
  std::vector<std::uint32_t> counts(n);
  for (std::size_t t = 0; t < n_trees; ++t) {
    const std::uint64_t tree_seed = child_seed(seed, t);
    Rng rng = make_rng(tree_seed);
    std::uniform_int_distribution<std::size_t> draw(0, n - 1);
    std::fill(counts.begin(), counts.end(), 0U);
    for (std::size_t i = 0; i < n; ++i) ++counts[draw(rng)];
    forest.trees.push_back(grow_classifier(x, y, counts, ClassifierOptions{max_depth, features, rng()}));
    forest.tree_seeds.push_back(tree_seed);
  }
  return forest;
}

DecisionTree grow_regressor(const BitMatrix& x, std::span<const double> residual, std::span<const double> curvature,
                            std::size_t max_depth, double lambda) {
  check_training_set(x, residual.size());
  if (curvature.size() != residual.size()) throw Error(ErrorKind::ShapeMismatch, "curvature length");
  const std::size_t nf = x.cols();
  DecisionTree tree;
  std::deque<PendingNode> queue;
  {
    PendingNode root{0, std::vector<std::uint32_t>(residual.size())};
    std::iota(root.rows.begin(), root.rows.end(), 0U);
    tree.nodes.push_back(TreeNode{});
    queue.push_back(std::move(root));
  }
  std::vector<double> g1(nf);
  std::vector<double> h1(nf);
  std::vector<std::size_t> c1(nf);
  while (!queue.empty()) {
    PendingNode node = std::move(queue.front());
    queue.pop_front();
    double g = 0;
    double h = 0;
    std::fill(g1.begin(), g1.end(), 0.0);
    std::fill(h1.begin(), h1.end(), 0.0);
    std::fill(c1.begin(), c1.end(), 0U);
    for (auto r : node.rows) {
      g += residual[r];
      h += curvature[r];
      auto row = x.row(r);
      for (std::size_t f = 0; f < nf; ++f) {
        if (row[f]) {
          g1[f] += residual[r];
          h1[f] += curvature[r];
          ++c1[f];
        }
      }
    }
    auto& current = tree.nodes[static_cast<std::size_t>(node.id)];
    current.value = g / (h + lambda);
    if (current.depth >= max_depth) continue;
    const double parent = g * g / (h + lambda);
    std::int64_t best = -1;
    double best_gain = 0;
    for (std::size_t f = 0; f < nf; ++f) {
      if (c1[f] == 0 || c1[f] == node.rows.size()) continue;
      const double gl = g - g1[f];
      const double hl = h - h1[f];
      const double gain = gl * gl / (hl + lambda) + g1[f] * g1[f] / (h1[f] + lambda) - parent;
      if (gain > best_gain) {
        best_gain = gain;
        best = static_cast<std::int64_t>(f);
      }
    }
    if (best < 0) continue;
    auto [left_rows, right_rows] = partition(x, node.rows, static_cast<std::size_t>(best));
    const auto depth = current.depth + 1;
    const auto left_id = static_cast<std::int32_t>(tree.nodes.size());
    current.feature = static_cast<std::int32_t>(best);
    current.left = left_id;
    current.right = left_id + 1;
    tree.nodes.push_back(TreeNode{-1, -1, -1, depth, 0});
    tree.nodes.push_back(TreeNode{-1, -1, -1, depth, 0});
    queue.push_back({left_id, std::move(left_rows)});
    queue.push_back({left_id + 1, std::move(right_rows)});
  }
  return tree;
}

}  // namespace pufbench::learn
