#include "doctest.h"
#include "helpers.hpp"
#include "pufbench/error.hpp"
#include "pufbench/learn/model_set.hpp"
#include "pufbench/metrics.hpp"

using namespace pufbench;
using namespace pufbench::learn;

namespace {

LearnerConfig small(LearnerFamily f) {
  LearnerConfig c = LearnerConfig::preset(f, Scale::Desk);
  c.seed = 17;
  c.tree_depth = 6;
  c.n_trees = 5;
  c.boost_rounds = 5;
  c.mlp_hidden_sizes = {16, 8};
  c.epochs = 2;
  c.gbnn_stages = 2;
  c.gbnn_hidden_sizes = {8, 8, 8, 8, 8, 8, 8};
  c.gbnn_epochs_per_stage = 1;
  c.linear_epochs = 3;
  return c;
}

}  // namespace

TEST_CASE("per-bit fits route by family") {
  const auto s = testing::random_split(200, 10, 3, 1);
  CHECK_THROWS_AS(fit_per_bit(LearnerFamily::Mlp, s, small(LearnerFamily::Mlp)), Error);
  const auto r = fit_per_bit(LearnerFamily::Tree, s, small(LearnerFamily::Tree));
  CHECK(r.trace.points.size() == 6);
  CHECK(r.trace.axis == "depth");
  CHECK(r.models.response_bits() == 3);
}

TEST_CASE("a single response bit is a single model") {
  const auto s = testing::random_split(200, 10, 1, 2);
  const auto r = fit_per_bit(LearnerFamily::Tree, s, small(LearnerFamily::Tree));
  const auto& trees = std::get<std::vector<DecisionTree>>(r.models.models());
  REQUIRE(trees.size() == 1);
  const auto direct = train_tree(s.train.challenges(), s.train.responses().column(0), 6);
  CHECK(trees[0].nodes.size() == direct.nodes.size());
}

TEST_CASE("per-bit independence") {
  Rng rng = make_rng(3);
  auto x = testing::random_bits(150, 10, rng);
  auto y = testing::random_bits(150, 3, rng);
  auto y2 = y;
  for (std::size_t i = 0; i < 150; ++i) y2(i, 2) = y(149 - i, 2);  // permute bit 2 only
  const auto a = split(testing::make_dataset(x, y), 4);
  const auto b = split(testing::make_dataset(x, y2), 4);
  for (auto f : {LearnerFamily::Tree, LearnerFamily::Forest, LearnerFamily::BoostedTrees}) {
    const auto ma = fit_per_bit(f, a, small(f)).models;
    const auto mb = fit_per_bit(f, b, small(f)).models;
    const auto pa = ma.predict(a.test.challenges());
    const auto pb = mb.predict(a.test.challenges());
    for (std::size_t i = 0; i < pa.rows(); ++i) {
      CHECK(pa(i, 0) == pb(i, 0));
      CHECK(pa(i, 1) == pb(i, 1));
    }
  }
}

TEST_CASE("predict_response matches each bit model") {
  const auto s = testing::random_split(300, 12, 4, 5);
  const auto r = fit_per_bit(LearnerFamily::Forest, s, small(LearnerFamily::Forest));
  const auto& forests = std::get<std::vector<RandomForest>>(r.models.models());
  Rng rng = make_rng(6);
  for (int t = 0; t < 1000; ++t) {
    const auto c = BitVector::from_u64(rng(), 12);
    const auto resp = r.models.predict_response(c);
    for (std::size_t j = 0; j < 4; ++j) CHECK(resp[j] == forests[j].predict(c.bits()));
  }
  CHECK_THROWS_AS(r.models.predict_response(Challenge(11)), Error);
}

TEST_CASE("constant stubs answer all ones") {
  std::vector<DecisionTree> stubs(32);
  for (auto& t : stubs) t.nodes.push_back(TreeNode{-1, -1, -1, 0, 1.0});
  const PerBitModelSet set(LearnerFamily::Tree, 8, 32, std::move(stubs));
  CHECK(set.predict_response(Challenge(8)).weight() == 32);
}

TEST_CASE("memorizing trees reproduce the training responses") {
  Rng rng = make_rng(7);
  const auto x = testing::distinct_bits(300, 12, rng);
  const auto y = testing::random_bits(300, 4, rng);
  const auto s = split(testing::make_dataset(x, y), 8);
  auto c = small(LearnerFamily::Tree);
  c.tree_depth = 12;
  const auto r = fit_per_bit(LearnerFamily::Tree, s, c);
  for (std::size_t i = 0; i < s.train.size(); ++i) {
    CHECK(r.models.predict_response(s.train.record(i).challenge) == s.train.record(i).response);
  }
}

TEST_CASE("capacity sweeps") {
  const auto s = testing::random_split(200, 10, 2, 9);
  const auto one = capacity_sweep(LearnerFamily::Tree, s, {1, 1}, small(LearnerFamily::Tree));
  CHECK(one.points.size() == 1);
  CHECK_THROWS_AS(capacity_sweep(LearnerFamily::Tree, s, {0, 3}, small(LearnerFamily::Tree)), Error);
  CHECK_THROWS_AS(capacity_sweep(LearnerFamily::Tree, s, {1, 21}, small(LearnerFamily::Tree)), Error);
  CHECK_THROWS_AS(capacity_sweep(LearnerFamily::Forest, s, {1, 36}, small(LearnerFamily::Forest)), Error);
  CHECK_THROWS_AS(capacity_sweep(LearnerFamily::BoostedTrees, s, {5, 4}, small(LearnerFamily::BoostedTrees)), Error);

  // staged read-out equals a model trained directly at that capacity
  for (auto f : {LearnerFamily::Tree, LearnerFamily::Forest, LearnerFamily::BoostedTrees}) {
    const auto sweep = capacity_sweep(f, s, {2, 5}, small(f));
    REQUIRE(sweep.points.size() == 4);
    for (const auto& p : sweep.points) {
      const auto direct = sweep_fit(f, s, {p.step, p.step}, small(f));
      CHECK(direct.trace.points[0].train_accuracy == p.train_accuracy);
      CHECK(direct.trace.points[0].validation_accuracy == p.validation_accuracy);
      const auto e = evaluate(direct.models.predict(s.train.challenges()), s.train.responses());
      CHECK(e.bitwise_accuracy.value() == p.train_accuracy);
    }
  }
}

TEST_CASE("model containers round-trip") {
  const auto s = testing::random_split(200, 10, 3, 10);
  for (auto f : {LearnerFamily::Tree, LearnerFamily::Forest, LearnerFamily::BoostedTrees, LearnerFamily::Mlp,
                 LearnerFamily::Gbnn, LearnerFamily::Linear}) {
    const auto r = fit_learner(s, small(f));
    const auto bytes = r.models.serialize();
    const auto back = PerBitModelSet::deserialize(bytes);
    CHECK(back.family() == f);
    CHECK(back.serialize() == bytes);
    CHECK(back.predict(s.test.challenges()) == r.models.predict(s.test.challenges()));

    // identical seeds give identical models
    CHECK(fit_learner(s, small(f)).models.serialize() == bytes);

    auto bad = bytes;
    bad[1] = 'X';
    CHECK_THROWS_AS(PerBitModelSet::deserialize(bad), Error);
    bad = bytes;
    bad.pop_back();
    CHECK_THROWS_AS(PerBitModelSet::deserialize(bad), Error);
  }
}

TEST_CASE("linear learner recovers an arbiter") {
  PufConfig pc;
  pc.variant = PufVariant::Arbiter;
  pc.challenge_bits = 16;
  pc.response_bits = 1;
  pc.seed = 3;
  const auto ds = generate(create_instance(pc), 3000, 4);
  const auto s = split(ds, 5);
  auto c = LearnerConfig::preset(LearnerFamily::Linear, Scale::Desk);
  const auto r = fit_learner(s, c);
  const auto e = evaluate(r.models.predict(s.test.challenges()), s.test.responses());
  CHECK(e.bitwise_accuracy.value() > 0.95);
}
