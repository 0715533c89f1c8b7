#include "doctest.h"
#include "pufbench/curve.hpp"
#include "pufbench/error.hpp"
#include "pufbench/rng.hpp"

using namespace pufbench;
using learn::TrainingTrace;

namespace {

TrainingTrace trace_of(const std::vector<double>& acc) {
  TrainingTrace t{"epoch", {}};
  for (std::size_t i = 0; i < acc.size(); ++i) t.points.push_back({i + 1, acc[i], acc[i]});
  return t;
}

}  // namespace

TEST_CASE("normalized steps") {
  CHECK(normalize_steps(trace_of({0, 0, 0, 0, 0})) == std::vector<double>{0, 25, 50, 75, 100});
  CHECK(normalize_steps(trace_of({0, 0})) == std::vector<double>{0, 100});
  for (std::size_t n = 2; n <= 1000; ++n) {
    const auto tau = normalize_steps(trace_of(std::vector<double>(n, 0.5)));
    CHECK(tau.front() == 0.0);
    CHECK(tau.back() == 100.0);
  }
  CHECK_THROWS_AS(normalize_steps(trace_of({0.5})), Error);
  TrainingTrace dup{"epoch", {{1, 0.5, 0.5}, {1, 0.6, 0.6}}};
  CHECK_THROWS_AS(normalize_steps(dup), Error);
}

TEST_CASE("worked interpolation cases") {
  const auto line = interpolate_curve(trace_of({0, 1}), CurveSplit::Train);
  CHECK(line.accuracy[50] == 0.5);
  const auto bent = interpolate_curve(trace_of({0, 0.6, 1.0}), CurveSplit::Train);
  CHECK(bent.accuracy[25] == 0.3);
  CHECK(bent.accuracy.size() == 101);
}

TEST_CASE("knots, endpoints and segment bounds on random traces") {
  Rng rng = make_rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng() % 60;
    std::vector<double> acc(n);
    for (auto& a : acc) a = uniform01(rng);
    const auto t = trace_of(acc);
    const auto tau = normalize_steps(t);
    const auto c = interpolate_curve(t, CurveSplit::Validation);
    CHECK(c.accuracy[0] == acc.front());
    CHECK(c.accuracy[100] == acc.back());
    for (std::size_t i = 0; i < n; ++i) {
      const double k = tau[i];
      if (k == static_cast<double>(static_cast<std::size_t>(k))) CHECK(c.accuracy[static_cast<std::size_t>(k)] == acc[i]);
    }
    for (std::size_t k = 0; k <= 100; ++k) {
      std::size_t i = 0;
      while (i + 2 < n && tau[i + 1] <= static_cast<double>(k)) ++i;
      CHECK(c.accuracy[k] >= std::min(acc[i], acc[i + 1]));
      CHECK(c.accuracy[k] <= std::max(acc[i], acc[i + 1]));
    }
  }
}

TEST_CASE("monotone traces give monotone curves") {
  Rng rng = make_rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> acc(2 + rng() % 40);
    double v = 0;
    for (auto& a : acc) a = v = std::min(1.0, v + 0.05 * uniform01(rng));
    const auto c = interpolate_curve(trace_of(acc), CurveSplit::Train);
    for (std::size_t k = 1; k <= 100; ++k) CHECK(c.accuracy[k] >= c.accuracy[k - 1]);
  }
}

TEST_CASE("comparison tables") {
  const auto t = trace_of({0.5, 0.7, 0.9, 1.0});
  std::vector<LabeledTrace> five;
  for (const char* m : {"A", "B", "C", "D", "E"}) five.push_back({m, t});
  const auto curves = build_comparison(five);
  REQUIRE(curves.size() == 10);
  for (std::size_t i = 2; i < curves.size(); ++i) CHECK(curves[i].accuracy == curves[i % 2].accuracy);

  const auto mixed = build_comparison({{"short", trace_of(std::vector<double>(20, 0.5))},
                                       {"long", trace_of(std::vector<double>(35, 0.5))}});
  CHECK(mixed[0].accuracy.size() == mixed[2].accuracy.size());

  const auto csv = curves_to_csv(build_comparison({{"DT", trace_of({0, 1})}}));
  CHECK(csv.rfind("s,model,split,accuracy\n0,DT,train,0\n", 0) == 0);
  CHECK(csv.find("100,DT,validation,1\n") != std::string::npos);
}
