#include "pufbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "json.hpp"

#include "pufbench/error.hpp"
#include "pufbench/rng.hpp"

namespace pufbench {

namespace {

void check_pair(const BitMatrix& predicted, const BitMatrix& target) {
  if (predicted.rows() != target.rows() || predicted.cols() != target.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "prediction is " + std::to_string(predicted.rows()) + "x" +
                                              std::to_string(predicted.cols()) + ", target is " +
                                              std::to_string(target.rows()) + "x" + std::to_string(target.cols()));
  }
  if (target.rows() == 0 || target.cols() == 0) throw Error(ErrorKind::InvalidArgument, "empty metric input");
}

std::uint64_t matching_bits(const BitMatrix& a, const BitMatrix& b) {
  const auto x = a.data();
  const auto y = b.data();
  std::uint64_t n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) n += x[i] == y[i];
  return n;
}

}  // namespace

Fraction bitwise_accuracy(const BitMatrix& predicted, const BitMatrix& target) {
  check_pair(predicted, target);
  return {matching_bits(predicted, target), static_cast<std::uint64_t>(target.rows() * target.cols())};
}

Fraction hamming_loss(const BitMatrix& predicted, const BitMatrix& target) {
  check_pair(predicted, target);
  const auto total = static_cast<std::uint64_t>(target.rows() * target.cols());
  return {total - matching_bits(predicted, target), total};
}

Fraction exact_match(const BitMatrix& predicted, const BitMatrix& target) {
  check_pair(predicted, target);
  std::uint64_t rows = 0;
  for (std::size_t i = 0; i < target.rows(); ++i) rows += std::ranges::equal(predicted.row(i), target.row(i));
  return {rows, target.rows()};
}

EvalReport evaluate(const BitMatrix& predicted, const BitMatrix& target) {
  return {bitwise_accuracy(predicted, target), hamming_loss(predicted, target), exact_match(predicted, target),
          target.rows(), target.cols()};
}

double binary_entropy(double p) {
  if (p < 0 || p > 1) throw Error(ErrorKind::Domain, "probability outside [0, 1]");
  double h = 0;
  if (p > 0) h -= p * std::log2(p);
  if (p < 1) h -= (1 - p) * std::log2(1 - p);
  return h;
}

BitStats bit_stats(const BitMatrix& responses) {
  if (responses.rows() == 0 || responses.cols() == 0) throw Error(ErrorKind::InvalidArgument, "empty response matrix");
  const std::size_t n = responses.rows();
  const std::size_t m = responses.cols();
  std::vector<std::uint64_t> ones(m, 0);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = responses.row(i);
    for (std::size_t j = 0; j < m; ++j) ones[j] += row[j];
  }
  BitStats s;
  std::uint64_t total = 0;
  for (std::size_t j = 0; j < m; ++j) {
    const double p = static_cast<double>(ones[j]) / static_cast<double>(n);
    s.mean.push_back(p);
    s.variance.push_back(p * (1 - p));
    s.entropy.push_back(binary_entropy(p));
    total += ones[j];
  }
  s.overall_mean = static_cast<double>(total) / static_cast<double>(n * m);
  s.overall_variance = s.overall_mean * (1 - s.overall_mean);
  double sum = 0;
  for (double h : s.entropy) sum += h;
  s.average_entropy = sum / static_cast<double>(m);
  s.min_entropy = *std::ranges::min_element(s.entropy);
  s.max_entropy = *std::ranges::max_element(s.entropy);
  return s;
}

PufQualityReport puf_quality(const std::vector<PufInstance>& population, const std::vector<Challenge>& challenges,
                             std::size_t repeats, double flip_rate, std::uint64_t noise_seed) {
  if (population.size() < 2) throw Error(ErrorKind::InvalidArgument, "quality needs at least 2 devices");
  if (challenges.empty()) throw Error(ErrorKind::InvalidArgument, "quality needs at least 1 challenge");
  if (repeats < 2) throw Error(ErrorKind::InvalidArgument, "reliability needs at least 2 reads");
  const std::size_t d = population.size();
  const std::size_t m = population.front().config().response_bits;
  for (const auto& dev : population) {
    if (dev.config().response_bits != m) throw Error(ErrorKind::WidthMismatch, "population response widths differ");
  }

  // reference reads, [device][challenge]
  std::vector<std::vector<Response>> reads(d);
  for (std::size_t k = 0; k < d; ++k) {
    for (const auto& c : challenges) reads[k].push_back(population[k].evaluate(c));
  }
  const double bits = static_cast<double>(m);

  double inter = 0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a + 1; b < d; ++b) {
      for (std::size_t c = 0; c < challenges.size(); ++c) {
        inter += static_cast<double>(hamming_distance(reads[a][c], reads[b][c])) / bits;
        ++pairs;
      }
    }
  }

  // repeats - 1 noisy re-reads against the reference read
  double intra = 0;
  std::size_t rereads = 0;
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t c = 0; c < challenges.size(); ++c) {
      for (std::size_t r = 1; r < repeats; ++r) {
        const auto seed = child_seed(child_seed(child_seed(noise_seed, k), c), r);
        const auto noisy = population[k].evaluate_noisy(challenges[c], flip_rate, seed);
        intra += static_cast<double>(hamming_distance(reads[k][c], noisy)) / bits;
        ++rereads;
      }
    }
  }

  BitMatrix pooled(d * challenges.size(), m);
  std::vector<double> aliasing(m, 0.0);
  std::uint64_t weight = 0;
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t c = 0; c < challenges.size(); ++c) {
      const auto& r = reads[k][c];
      pooled.set_row(k * challenges.size() + c, r);
      weight += r.weight();
      for (std::size_t j = 0; j < m; ++j) aliasing[j] += r[j];
    }
  }
  PufQualityReport q;
  q.uniqueness = inter / static_cast<double>(pairs);
  q.reliability = 1.0 - intra / static_cast<double>(rereads);
  q.uniformity = static_cast<double>(weight) / static_cast<double>(pooled.rows() * m);
  for (auto& a : aliasing) {
    a /= static_cast<double>(pooled.rows());
    q.bit_aliasing_max_deviation = std::max(q.bit_aliasing_max_deviation, std::abs(a - 0.5));
  }
  q.bit_aliasing = std::move(aliasing);
  q.randomness_score = bit_stats(pooled).average_entropy;
  return q;
}

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction);
  return buf;
}

nlohmann::json to_json(const EvalReport& r) {
  return {{"bitwise_accuracy", r.bitwise_accuracy.value()},
          {"hamming_loss", r.hamming_loss.value()},
          {"exact_match", r.exact_match.value()},
          {"n_samples", r.n_samples},
          {"n_bits", r.n_bits},
          {"counts",
           {{"correct_bits", r.bitwise_accuracy.numerator},
            {"wrong_bits", r.hamming_loss.numerator},
            {"exact_rows", r.exact_match.numerator}}}};
}

nlohmann::json to_json(const BitStats& s) {
  return {{"mean", s.mean},
          {"variance", s.variance},
          {"entropy", s.entropy},
          {"overall_mean", s.overall_mean},
          {"overall_variance", s.overall_variance},
          {"average_entropy", s.average_entropy},
          {"min_entropy", s.min_entropy},
          {"max_entropy", s.max_entropy}};
}

nlohmann::json to_json(const PufQualityReport& q) {
  return {{"uniqueness", q.uniqueness},
          {"reliability", q.reliability},
          {"uniformity", q.uniformity},
          {"bit_aliasing", q.bit_aliasing},
          {"bit_aliasing_max_deviation", q.bit_aliasing_max_deviation},
          {"randomness_score", q.randomness_score}};
}

}  // namespace pufbench
