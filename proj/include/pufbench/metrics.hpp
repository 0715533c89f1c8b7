#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "pufbench/bits.hpp"
#include "pufbench/puf.hpp"

namespace pufbench {

/// Exact count ratio. Metrics are kept as integers and only turned into doubles for output.
struct Fraction {
  std::uint64_t numerator = 0;
  std::uint64_t denominator = 1;

  double value() const { return static_cast<double>(numerator) / static_cast<double>(denominator); }
  friend bool operator==(const Fraction& a, const Fraction& b) {
    return static_cast<unsigned __int128>(a.numerator) * b.denominator ==
           static_cast<unsigned __int128>(b.numerator) * a.denominator;
  }
  friend bool operator<=(const Fraction& a, const Fraction& b) {
    return static_cast<unsigned __int128>(a.numerator) * b.denominator <=
           static_cast<unsigned __int128>(b.numerator) * a.denominator;
  }
};

Fraction bitwise_accuracy(const BitMatrix& predicted, const BitMatrix& target);
Fraction hamming_loss(const BitMatrix& predicted, const BitMatrix& target);
Fraction exact_match(const BitMatrix& predicted, const BitMatrix& target);

struct EvalReport {
  Fraction bitwise_accuracy;
  Fraction hamming_loss;
  Fraction exact_match;
  std::size_t n_samples = 0;
  std::size_t n_bits = 0;
};

EvalReport evaluate(const BitMatrix& predicted, const BitMatrix& target);

struct BitStats {
  std::vector<double> mean;
  std::vector<double> variance;
  std::vector<double> entropy;
  double overall_mean = 0;
  double overall_variance = 0;
  double average_entropy = 0;
  double min_entropy = 0;
  double max_entropy = 0;
};

/// Shannon entropy in bits of a Bernoulli(p) source, with 0 log 0 = 0.
double binary_entropy(double p);

BitStats bit_stats(const BitMatrix& responses);

struct PufQualityReport {
  double uniqueness = 0;
  double reliability = 0;
  double uniformity = 0;
  std::vector<double> bit_aliasing;
  double bit_aliasing_max_deviation = 0;  // max |aliasing - 0.5|
  double randomness_score = 0;
};

PufQualityReport puf_quality(const std::vector<PufInstance>& population, const std::vector<Challenge>& challenges,
                             std::size_t repeats, double flip_rate, std::uint64_t noise_seed = 0);

/// Two decimals, as in the result tables.
std::string percent(double fraction);

nlohmann::json to_json(const EvalReport& report);
nlohmann::json to_json(const BitStats& stats);
nlohmann::json to_json(const PufQualityReport& report);

}  // namespace pufbench
