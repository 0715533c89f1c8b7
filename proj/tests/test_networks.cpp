#include <cmath>

#include "doctest.h"
#include "gradcheck.hpp"
#include "helpers.hpp"
#include "pufbench/error.hpp"
#include "pufbench/learn/gbnn.hpp"
#include "pufbench/learn/loss.hpp"
#include "pufbench/learn/mlp.hpp"

using namespace pufbench;
using namespace pufbench::learn;

using namespace testing;

TEST_CASE("mlp gradients, inference-mode batch-norm") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) CHECK(mlp_inference_gradient_error(seed) < 1e-4);
}

TEST_CASE("mlp gradients, batch-statistics batch-norm") {
  Rng rng = make_rng(2);
  Net net(toy_shape(), 3);
  randomize_norm_stats(net, rng);
  const auto x = random_matrix(5, 9, rng);
  const auto r = random_matrix(3, 9, rng);
  auto loss = [&] {
    Net::Cache cache;
    return (net.forward(x, Mode::Train, nullptr, false, cache).array() * r.array()).sum();
  };
  auto backward = [&] {
    Net::Cache cache;
    net.forward(x, Mode::Train, nullptr, false, cache);
    return net.backward(cache, r);
  };
  CHECK(gradient_error(net, loss, backward) < 1e-4);
}

TEST_CASE("gbnn base learner gradients through the stage loss") {
  LearnerConfig config = LearnerConfig::preset(LearnerFamily::Gbnn, Scale::Desk);
  CHECK(gbnn_base_shape(config, 32, 32).hidden.size() + 1 == 8);
  for (std::uint64_t seed = 0; seed < 5; ++seed) CHECK(gbnn_stage_gradient_error(seed) < 1e-4);
}

TEST_CASE("float and double networks agree") {
  Rng rng = make_rng(4);
  Net net(toy_shape(), 7);
  randomize_norm_stats(net, rng);
  const auto x = random_matrix(5, 4, rng);
  const auto f = net.cast<float>();
  const Eigen::MatrixXf xf = x.cast<float>();
  CHECK((f.infer(xf).cast<double>() - net.infer(x)).cwiseAbs().maxCoeff() < 1e-4);
  CHECK(f.parameter_count() == net.parameter_count());
}

TEST_CASE("mlp learns a copied bit") {
  Rng rng = make_rng(5);
  auto x = testing::random_bits(600, 8, rng);
  BitMatrix y(600, 1);
  for (std::size_t i = 0; i < 600; ++i) y(i, 0) = x(i, 0);
  const auto data = testing::make_dataset(x, y);
  LearnerConfig c = LearnerConfig::preset(LearnerFamily::Mlp, Scale::Desk);
  c.mlp_hidden_sizes = {32, 16, 8};
  c.epochs = 10;
  c.learning_rate = 1e-2;
  c.seed = 3;
  const auto r = train_mlp(data, data, c);
  REQUIRE(r.trace.points.size() == 10);
  CHECK(r.trace.points.back().train_accuracy == 1.0);
  CHECK(r.trace.axis == "epoch");
  CHECK(logit_accuracy(infer_all(r.model, x), y) == 1.0);
}

TEST_CASE("mlp training is deterministic") {
  const auto s = testing::random_split(300, 8, 4, 6);
  LearnerConfig c = LearnerConfig::preset(LearnerFamily::Mlp, Scale::Desk);
  c.mlp_hidden_sizes = {16, 8};
  c.epochs = 3;
  c.seed = 9;
  const auto a = train_mlp(s.train, s.validation, c);
  const auto b = train_mlp(s.train, s.validation, c);
  CHECK(infer_all(a.model, s.test.challenges()) == infer_all(b.model, s.test.challenges()));
}

TEST_CASE("divergence names the epoch") {
  const auto s = testing::random_split(200, 8, 4, 7);
  LearnerConfig c = LearnerConfig::preset(LearnerFamily::Mlp, Scale::Desk);
  c.mlp_hidden_sizes = {16, 8};
  c.epochs = 20;
  c.learning_rate = 1e30;
  c.seed = 1;
  try {
    train_mlp(s.train, s.validation, c);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Divergence);
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("gbnn with no stages is the majority predictor") {
  const auto s = testing::random_split(400, 8, 4, 8);
  LearnerConfig c = LearnerConfig::preset(LearnerFamily::Gbnn, Scale::Desk);
  c.gbnn_stages = 0;
  const auto r = train_gbnn(s.train, s.validation, c);
  REQUIRE(r.trace.points.size() == 1);
  std::size_t majority = 0;
  const auto& y = s.train.responses();
  for (std::size_t j = 0; j < y.cols(); ++j) {
    std::size_t ones = 0;
    for (std::size_t i = 0; i < y.rows(); ++i) ones += y(i, j);
    majority += std::max(ones, y.rows() - ones);
  }
  // ties resolve to 0, which is also a majority
  CHECK(r.trace.points[0].train_accuracy == doctest::Approx(static_cast<double>(majority) / (y.rows() * y.cols())));
}

TEST_CASE("gbnn logits follow the additive form") {
  const auto s = testing::random_split(200, 8, 3, 9);
  LearnerConfig c = LearnerConfig::preset(LearnerFamily::Gbnn, Scale::Desk);
  c.gbnn_stages = 2;
  c.gbnn_hidden_sizes = {8, 8, 8, 8, 8, 8, 8};
  c.gbnn_epochs_per_stage = 1;
  const auto r = train_gbnn(s.train, s.validation, c);
  REQUIRE(r.model.stages.size() == 2);
  const auto& x = s.test.challenges();
  Eigen::MatrixXf f = r.model.base_logits.replicate(1, static_cast<Eigen::Index>(x.rows()));
  for (const auto& st : r.model.stages) f += static_cast<float>(st.rho) * infer_all(st.learner, x);
  CHECK((f - r.model.logits(x)).cwiseAbs().maxCoeff() < 1e-5f);
  CHECK(r.model.stages[0].rho == 0.5);
}
