#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "pufbench/error.hpp"
#include "pufbench/learn/boosted.hpp"
#include "pufbench/learn/loss.hpp"
#include "pufbench/learn/tree.hpp"

using namespace pufbench;
using namespace pufbench::learn;
using testing::distinct_bits;
using testing::random_bits;

namespace {

template <typename Model>
double accuracy(const Model& m, const BitMatrix& x, std::span<const std::uint8_t> y) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) ok += m.predict(x.row(i)) == static_cast<bool>(y[i]);
  return static_cast<double>(ok) / static_cast<double>(x.rows());
}

double mean_logistic_loss(const BoostedTrees& m, const BitMatrix& x, std::span<const std::uint8_t> y,
                          std::size_t rounds) {
  double sum = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double z = m.score(x.row(i), rounds);
    sum += std::max(z, 0.0) - z * y[i] + std::log1p(std::exp(-std::abs(z)));
  }
  return sum / static_cast<double>(x.rows());
}

DecisionTree stub(bool out) {
  DecisionTree t;
  t.nodes.push_back(TreeNode{-1, -1, -1, 0, out ? 1.0 : 0.0});
  return t;
}

}  // namespace

TEST_CASE("single relevant bit is found at depth 1") {
  Rng rng = make_rng(1);
  const auto x = random_bits(200, 8, rng);
  const auto y = x.column(3);
  const auto tree = train_tree(x, y, 1);
  CHECK(tree.depth() == 1);
  CHECK(tree.nodes[0].feature == 3);
  CHECK(accuracy(tree, x, y) == 1.0);
}

TEST_CASE("xor of two bits defeats a stump") {
  BitMatrix x(4, 2);
  std::vector<std::uint8_t> y(4);
  for (std::size_t v = 0; v < 4; ++v) {
    x.set_row(v, BitVector::from_u64(v, 2));
    y[v] = static_cast<std::uint8_t>((v & 1) ^ (v >> 1));
  }
  // truth-table oracle: any single bit predicts exactly half the rows
  for (std::size_t f = 0; f < 2; ++f) {
    std::size_t agree = 0;
    for (std::size_t v = 0; v < 4; ++v) agree += x(v, f) == y[v];
    CHECK(agree == 2);
  }
  CHECK(accuracy(train_tree(x, y, 1), x, y) == 0.5);
  CHECK(accuracy(train_tree(x, y, 2), x, y) == 1.0);
}

TEST_CASE("trees memorize distinct challenges") {
  Rng rng = make_rng(2);
  for (std::size_t n : {2, 5, 17, 64, 200, 512}) {
    const auto width = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(n)))) + 1;
    const auto x = distinct_bits(n, width, rng);
    const auto y = random_bits(n, 1, rng).column(0);
    const auto tree = train_tree(x, y, std::min<std::size_t>(width, 20));
    CHECK(tree.depth() <= width);
    CHECK(accuracy(tree, x, y) == 1.0);
  }
}

TEST_CASE("train accuracy never drops along a depth sweep") {
  Rng rng = make_rng(3);
  for (int d = 0; d < 20; ++d) {
    const auto x = random_bits(300, 16, rng);
    const auto y = random_bits(300, 1, rng).column(0);
    const auto tree = train_tree(x, y, 20);
    double last = 0;
    for (std::size_t depth = 1; depth <= 20; ++depth) {
      std::size_t ok = 0;
      for (std::size_t i = 0; i < x.rows(); ++i) ok += tree.predict(x.row(i), depth) == static_cast<bool>(y[i]);
      const double acc = static_cast<double>(ok) / 300;
      CHECK(acc >= last);
      last = acc;
    }
  }
}

TEST_CASE("tree argument checks") {
  Rng rng = make_rng(4);
  const auto x = random_bits(10, 4, rng);
  const auto y = x.column(0);
  CHECK_THROWS_AS(train_tree(x, y, 0), Error);
  CHECK_THROWS_AS(train_tree(x, y, 21), Error);
  CHECK_THROWS_AS(train_tree(BitMatrix(0, 4), {}, 3), Error);
}

TEST_CASE("forest votes") {
  RandomForest f;
  f.trees = {stub(true), stub(true), stub(false)};
  const std::vector<std::uint8_t> x{0};
  CHECK(f.predict(x));
  f.trees = {stub(true), stub(false)};
  CHECK_FALSE(f.predict(x));  // tie
  CHECK(f.predict(x, 1));
}

TEST_CASE("one-tree forest is its bootstrapped tree") {
  Rng rng = make_rng(5);
  const auto x = random_bits(300, 16, rng);
  const auto y = random_bits(300, 1, rng).column(0);
  const auto f = train_forest(x, y, 1, 9);
  REQUIRE(f.trees.size() == 1);
  for (std::size_t i = 0; i < x.rows(); ++i) CHECK(f.predict(x.row(i)) == f.trees[0].predict(x.row(i)));
  CHECK_THROWS_AS(train_forest(x, y, 0, 9), Error);
  CHECK_THROWS_AS(train_forest(x, y, 36, 9), Error);
  const auto g = train_forest(x, y, 5, 9);
  CHECK(g.tree_seeds.size() == 5);
}

TEST_CASE("boosting with constant labels needs no trees") {
  Rng rng = make_rng(6);
  const auto x = random_bits(50, 8, rng);
  const std::vector<std::uint8_t> y(50, 1);
  const auto m = train_boosted_trees(x, y, {});
  CHECK(m.trees.empty());
  CHECK(m.base_score == doctest::Approx(clamped_logit(1.0)));
  CHECK(m.base_score > 0);
  CHECK(accuracy(m, x, y) == 1.0);
}

TEST_CASE("boosting loss is non-increasing and staged scores match the record") {
  Rng rng = make_rng(7);
  for (int d = 0; d < 50; ++d) {
    const auto x = random_bits(200, 12, rng);
    const auto y = random_bits(200, 1, rng).column(0);
    const auto m = train_boosted_trees(x, y, {35, 3, 0.3, 1.0});
    REQUIRE(m.train_loss.size() == m.trees.size() + 1);
    for (std::size_t t = 1; t < m.train_loss.size(); ++t) CHECK(m.train_loss[t] <= m.train_loss[t - 1]);
    for (std::size_t t = 0; t < m.train_loss.size(); ++t) {
      CHECK(mean_logistic_loss(m, x, y, t) == doctest::Approx(m.train_loss[t]).epsilon(1e-12));
    }
  }
}

TEST_CASE("newton leaf weights") {
  // one split on bit 0: left rows residual sum 1.5, curvature 1; right -0.5, 0.5
  BitMatrix x(3, 1);
  x(2, 0) = 1;
  const std::vector<double> g{1.0, 0.5, -0.5};
  const std::vector<double> h{0.5, 0.5, 0.5};
  const auto t = grow_regressor(x, g, h, 1, 1.0);
  REQUIRE(t.nodes.size() == 3);
  const std::vector<std::uint8_t> zero{0};
  const std::vector<std::uint8_t> one{1};
  CHECK(t.predict_value(zero) == doctest::Approx(1.5 / (1.0 + 1.0)));
  CHECK(t.predict_value(one) == doctest::Approx(-0.5 / (0.5 + 1.0)));
}
