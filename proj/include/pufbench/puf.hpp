#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pufbench/bits.hpp"
#include "pufbench/config_file.hpp"

namespace pufbench {

enum class PufVariant {
  RcFirstOrder,
  RcSecondOrder,
  IdealEntropy,
  Arbiter,
  XorArbiter,
  FfArbiter,
  RingOscillator,
};

std::string to_string(PufVariant v);
PufVariant parse_puf_variant(std::string_view name);
bool is_arbiter_family(PufVariant v);

struct PufConfig {
  PufVariant variant = PufVariant::RcFirstOrder;
  std::size_t challenge_bits = 32;
  std::size_t response_bits = 32;
  bool uid_enabled = false;
  int pulse_width_us = 32;
  std::size_t xor_chains = 4;
  std::size_t ff_loops = 1;
  double bias_p = 0.5501;
  std::uint64_t seed = 0;

  /// Throws invalid-config on any violated field or unsupported combination.
  void validate() const;

  /// Keys: variant, n_c, n_r, uid_enabled, pulse_width_us, xor_chains, ff_loops, bias_p, seed.
  /// Unknown keys are rejected. When n_r is absent, arbiter variants default to one bit.
  static PufConfig from_config(const ConfigFile& cfg);
  ConfigFile to_config() const;

  /// Stable 64-bit digest of every field.
  std::uint64_t fingerprint() const;

  friend bool operator==(const PufConfig&, const PufConfig&) = default;
};

// Behavioral device models. Each is immutable once sampled.

struct RcBranch {
  double resistance;   // ohms
  double capacitance;  // farads
  // second section, zero for first-order networks
  double resistance2 = 0;
  double capacitance2 = 0;
};

struct RcPufModel {
  bool second_order = false;
  std::size_t challenge_bits = 0;
  std::size_t response_bits = 0;
  /// branches[lane][stage] = {branch for c=0, branch for c=1}
  std::vector<std::vector<std::array<RcBranch, 2>>> branches;
  std::vector<double> reference_delays;  // seconds, one per lane
  std::vector<std::uint8_t> uid_word;    // empty when UID integration is off
  double pulse_width = 0;                // seconds

  /// Charge-to-threshold delay of one branch.
  double branch_delay(const RcBranch& b) const;
  /// Accumulated, clamped delay of `lane` for `challenge`.
  double lane_delay(std::size_t lane, std::span<const std::uint8_t> challenge) const;
  /// Response before UID integration.
  Response raw_response(std::span<const std::uint8_t> challenge) const;
};

/// Additive delay model of one arbiter chain; weights has n_c + 1 entries.
struct ArbiterChain {
  std::vector<double> weights;

  /// Parity features Phi_i(c) = prod_{j>=i} (1 - 2 c_j), Phi_{n_c} = 1.
  static std::vector<double> parity_features(std::span<const std::uint8_t> challenge);
  /// Final delay difference, computed stage by stage.
  double delay_difference(std::span<const std::uint8_t> challenge) const;
  bool evaluate(std::span<const std::uint8_t> challenge) const;
};

struct XorArbiterModel {
  std::vector<ArbiterChain> chains;
};

struct FeedForwardLoop {
  std::size_t tap;     // stage whose intermediate race result is sampled
  std::size_t target;  // later stage whose challenge bit it overwrites
};

struct FfArbiterModel {
  ArbiterChain chain;
  std::vector<FeedForwardLoop> loops;

  /// Effective challenge after feed-forward overwrites, plus the final bit.
  bool evaluate(std::span<const std::uint8_t> challenge) const;
};

struct RingOscillatorModel {
  std::vector<double> frequencies;  // hertz
  std::size_t address_bits = 0;

  std::pair<std::size_t, std::size_t> pair_for(std::size_t lane, std::span<const std::uint8_t> challenge) const;
};

struct IdealEntropyModel {
  std::array<std::uint64_t, 2> key{};
  double bias_p = 0.5;

  /// Keyed avalanche mix of (challenge, lane) into a uniform 64-bit word.
  std::uint64_t mix(std::span<const std::uint8_t> challenge, std::size_t lane) const;
};

using PufModel =
    std::variant<RcPufModel, ArbiterChain, XorArbiterModel, FfArbiterModel, RingOscillatorModel, IdealEntropyModel>;

/// A seeded behavioral device. Immutable; evaluation is a pure function.
class PufInstance {
 public:
  PufInstance(PufConfig config, PufModel model);

  const PufConfig& config() const noexcept { return config_; }
  const PufModel& model() const noexcept { return model_; }
  std::size_t challenge_bits() const noexcept { return config_.challenge_bits; }
  std::size_t response_bits() const noexcept { return config_.response_bits; }

  Response evaluate(const Challenge& challenge) const;
  /// Span form used by bulk generation; writes response_bits() bits to `out`.
  void evaluate_into(std::span<const std::uint8_t> challenge, std::span<std::uint8_t> out) const;
  /// evaluate() with each bit flipped independently with probability flip_rate.
  Response evaluate_noisy(const Challenge& challenge, double flip_rate, std::uint64_t noise_seed) const;

 private:
  PufConfig config_;
  PufModel model_;
};

PufInstance create_instance(const PufConfig& config);

/// Device i is created from child_seed(config.seed, i).
std::vector<PufInstance> device_population(const PufConfig& config, std::size_t n_devices);

/// Samples the RC network for `config` with an explicit excitation window in seconds.
RcPufModel sample_rc_model(const PufConfig& config, double pulse_width_seconds);

}  // namespace pufbench
