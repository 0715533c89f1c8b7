#include "pufbench/puf.hpp"

#include <bit>
#include <cmath>
#include <numbers>

#include "pufbench/error.hpp"
#include "pufbench/rng.hpp"

namespace pufbench {

namespace {

constexpr double kNominalResistance = 10e3;     // ohms
constexpr double kNominalCapacitance = 100e-12; // farads
constexpr double kComponentSigma = 0.05;        // lognormal spread of R and C
constexpr double kRoNominalFrequency = 200e6;   // hertz
constexpr double kRoSigma = 0.02;
constexpr std::size_t kRoMaxAddressBits = 8;

struct VariantName {
  PufVariant variant;
  const char* name;
};

constexpr VariantName kVariantNames[] = {
    {PufVariant::RcFirstOrder, "rc-first-order"}, {PufVariant::RcSecondOrder, "rc-second-order"},
    {PufVariant::IdealEntropy, "ideal-entropy"},  {PufVariant::Arbiter, "arbiter"},
    {PufVariant::XorArbiter, "xor-arbiter"},      {PufVariant::FfArbiter, "ff-arbiter"},
    {PufVariant::RingOscillator, "ring-oscillator"},
};

double sample_component(Rng& rng, double nominal) {
  std::normal_distribution<double> normal(0.0, kComponentSigma);
  return nominal * std::exp(normal(rng));
}

RcBranch sample_branch(Rng& rng, bool second_order) {
  RcBranch b{sample_component(rng, kNominalResistance), sample_component(rng, kNominalCapacitance)};
  if (second_order) {
    b.resistance2 = sample_component(rng, kNominalResistance);
    b.capacitance2 = sample_component(rng, kNominalCapacitance);
  }
  return b;
}

ArbiterChain sample_chain(Rng& rng, std::size_t stages) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ArbiterChain chain;
  chain.weights.resize(stages + 1);
  for (auto& w : chain.weights) w = normal(rng);
  return chain;
}

std::uint64_t pack_word(std::span<const std::uint8_t> bits, std::size_t word) {
  std::uint64_t v = 0;
  const std::size_t begin = word * 64;
  const std::size_t end = std::min(bits.size(), begin + 64);
  for (std::size_t j = begin; j < end; ++j) v |= std::uint64_t{bits[j]} << (j - begin);
  return v;
}

void mix_round(std::uint64_t& a, std::uint64_t& b) {
  a ^= b;
  a *= 0xBF58476D1CE4E5B9ULL;
  a ^= a >> 31;
  b += std::rotl(a, 23);
  b *= 0x94D049BB133111EBULL;
  b ^= b >> 29;
}

}  // namespace

std::string to_string(PufVariant v) {
  for (const auto& entry : kVariantNames) {
    if (entry.variant == v) return entry.name;
  }
  return "unknown";
}

PufVariant parse_puf_variant(std::string_view name) {
  for (const auto& entry : kVariantNames) {
    if (name == entry.name) return entry.variant;
  }
  throw Error(ErrorKind::InvalidConfig, "unsupported PUF variant '" + std::string(name) + "'");
}

bool is_arbiter_family(PufVariant v) {
  return v == PufVariant::Arbiter || v == PufVariant::XorArbiter || v == PufVariant::FfArbiter;
}

void PufConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidConfig, msg); };
  if (challenge_bits == 0 || response_bits == 0) fail("challenge and response widths must be at least 1");
  if (challenge_bits > 255 || response_bits > 255) fail("widths above 255 bits are not supported");
  if (pulse_width_us != 2 && pulse_width_us != 32) fail("pulse_width_us must be 2 or 32");
  if (!(bias_p > 0.0 && bias_p < 1.0)) fail("bias_p must lie strictly inside (0, 1)");
  if (is_arbiter_family(variant) && response_bits != 1) fail(to_string(variant) + " produces a single response bit");
  const bool rc = variant == PufVariant::RcFirstOrder || variant == PufVariant::RcSecondOrder;
  if (uid_enabled && !rc) fail("UID integration applies to RC variants only");
  if (variant == PufVariant::XorArbiter && xor_chains < 1) fail("xor-arbiter needs at least one chain");
  if (variant == PufVariant::FfArbiter) {
    if (ff_loops < 1) fail("ff-arbiter needs at least one feed-forward loop");
    if (challenge_bits < 2) fail("ff-arbiter needs at least two stages");
  }
}

PufConfig PufConfig::from_config(const ConfigFile& cfg) {
  cfg.reject_unknown({"variant", "n_c", "n_r", "uid_enabled", "pulse_width_us", "xor_chains", "ff_loops", "bias_p",
                      "seed"});
  PufConfig c;
  c.variant = parse_puf_variant(cfg.get_string("variant", to_string(c.variant)));
  c.challenge_bits = cfg.get_u64("n_c", c.challenge_bits);
  c.response_bits = cfg.get_u64("n_r", is_arbiter_family(c.variant) ? 1 : c.response_bits);
  c.uid_enabled = cfg.get_bool("uid_enabled", c.uid_enabled);
  c.pulse_width_us = static_cast<int>(cfg.get_u64("pulse_width_us", static_cast<std::uint64_t>(c.pulse_width_us)));
  c.xor_chains = cfg.get_u64("xor_chains", c.xor_chains);
  c.ff_loops = cfg.get_u64("ff_loops", c.ff_loops);
  c.bias_p = cfg.get_double("bias_p", c.bias_p);
  c.seed = cfg.get_u64("seed", c.seed);
  c.validate();
  return c;
}

ConfigFile PufConfig::to_config() const {
  ConfigFile cfg;
  cfg.set("variant", to_string(variant));
  cfg.set("n_c", std::to_string(challenge_bits));
  cfg.set("n_r", std::to_string(response_bits));
  cfg.set("uid_enabled", uid_enabled ? "true" : "false");
  cfg.set("pulse_width_us", std::to_string(pulse_width_us));
  cfg.set("xor_chains", std::to_string(xor_chains));
  cfg.set("ff_loops", std::to_string(ff_loops));
  cfg.set("bias_p", format_double(bias_p));
  cfg.set("seed", std::to_string(seed));
  return cfg;
}

std::uint64_t PufConfig::fingerprint() const { return text_digest(to_config().to_string()); }

// --- RC network -------------------------------------------------------------

double RcPufModel::branch_delay(const RcBranch& b) const {
  // charge to half rail: ln(Vdd / (Vdd - Vth)) = ln 2
  const double tau1 = b.resistance * b.capacitance * std::numbers::ln2;
  if (!second_order) return tau1;
  const double tau2 = b.resistance2 * b.capacitance2 * std::numbers::ln2;
  return tau1 + tau2 + std::sqrt(tau1 * tau2);
}

double RcPufModel::lane_delay(std::size_t lane, std::span<const std::uint8_t> challenge) const {
  double d = 0;
  const auto& stages = branches[lane];
  for (std::size_t j = 0; j < challenge_bits; ++j) d += branch_delay(stages[j][challenge[j]]);
  return std::min(d, pulse_width);
}

Response RcPufModel::raw_response(std::span<const std::uint8_t> challenge) const {
  Response r(response_bits);
  for (std::size_t lane = 0; lane < response_bits; ++lane) {
    const double reference = std::min(reference_delays[lane], pulse_width);
    r.set(lane, lane_delay(lane, challenge) > reference);
  }
  return r;
}

RcPufModel sample_rc_model(const PufConfig& config, double pulse_width_seconds) {
  config.validate();
  if (!(pulse_width_seconds > 0)) throw Error(ErrorKind::InvalidConfig, "pulse width must be positive");
  RcPufModel m;
  m.second_order = config.variant == PufVariant::RcSecondOrder;
  m.challenge_bits = config.challenge_bits;
  m.response_bits = config.response_bits;
  m.pulse_width = pulse_width_seconds;
  Rng rng = make_rng(config.seed);
  m.branches.resize(config.response_bits);
  m.reference_delays.resize(config.response_bits);
  for (std::size_t lane = 0; lane < config.response_bits; ++lane) {
    auto& stages = m.branches[lane];
    stages.resize(config.challenge_bits);
    for (auto& stage : stages) {
      stage[0] = sample_branch(rng, m.second_order);
      stage[1] = sample_branch(rng, m.second_order);
    }
    double reference = 0;
    for (std::size_t j = 0; j < config.challenge_bits; ++j) reference += m.branch_delay(sample_branch(rng, m.second_order));
    m.reference_delays[lane] = reference;
  }
  if (config.uid_enabled) {
    m.uid_word.resize(config.response_bits);
    for (auto& b : m.uid_word) b = static_cast<std::uint8_t>(rng() >> 63);
  }
  return m;
}

// --- arbiter family -----------------------------------------------------------

std::vector<double> ArbiterChain::parity_features(std::span<const std::uint8_t> challenge) {
  const std::size_t n = challenge.size();
  std::vector<double> phi(n + 1);
  phi[n] = 1.0;
  for (std::size_t i = n; i-- > 0;) phi[i] = phi[i + 1] * (challenge[i] ? -1.0 : 1.0);
  return phi;
}

double ArbiterChain::delay_difference(std::span<const std::uint8_t> challenge) const {
  if (challenge.size() + 1 != weights.size()) throw Error(ErrorKind::WidthMismatch, "arbiter stage count mismatch");
  double delta = 0;
  for (std::size_t i = 0; i < challenge.size(); ++i) {
    delta = (delta + weights[i]) * (challenge[i] ? -1.0 : 1.0);
  }
  return delta + weights.back();
}

bool ArbiterChain::evaluate(std::span<const std::uint8_t> challenge) const { return delay_difference(challenge) > 0; }

bool FfArbiterModel::evaluate(std::span<const std::uint8_t> challenge) const {
  const auto& w = chain.weights;
  if (challenge.size() + 1 != w.size()) throw Error(ErrorKind::WidthMismatch, "arbiter stage count mismatch");
  std::vector<std::uint8_t> effective(challenge.begin(), challenge.end());
  double delta = 0;
  for (std::size_t i = 0; i < effective.size(); ++i) {
    delta = (delta + w[i]) * (effective[i] ? -1.0 : 1.0);
    for (const auto& loop : loops) {
      if (loop.tap == i) effective[loop.target] = delta > 0;
    }
  }
  return delta + w.back() > 0;
}

// --- ring oscillator ------------------------------------------------------------

std::pair<std::size_t, std::size_t> RingOscillatorModel::pair_for(std::size_t lane,
                                                                  std::span<const std::uint8_t> challenge) const {
  std::size_t address = 0;
  for (std::size_t j = 0; j < challenge.size(); ++j) {
    address ^= std::size_t{challenge[j]} << ((j + lane) % address_bits);
  }
  const std::size_t count = frequencies.size();
  const std::size_t partner = address ^ (1 + lane % (count - 1));
  return {address, partner};
}

// --- ideal entropy ----------------------------------------------------------------

std::uint64_t IdealEntropyModel::mix(std::span<const std::uint8_t> challenge, std::size_t lane) const {
  std::uint64_t a = key[0];
  std::uint64_t b = key[1] ^ mix64(lane);
  const std::size_t words = (challenge.size() + 63) / 64;
  for (std::size_t w = 0; w < words; ++w) {
    a ^= pack_word(challenge, w);
    for (int r = 0; r < 4; ++r) mix_round(a, b);
  }
  mix_round(a, b);
  return a ^ b;
}

// --- instance -----------------------------------------------------------------------

PufInstance::PufInstance(PufConfig config, PufModel model) : config_(std::move(config)), model_(std::move(model)) {}

void PufInstance::evaluate_into(std::span<const std::uint8_t> c, std::span<std::uint8_t> out) const {
  if (c.size() != config_.challenge_bits) {
    throw Error(ErrorKind::WidthMismatch, "challenge has " + std::to_string(c.size()) + " bits, device expects " +
                                              std::to_string(config_.challenge_bits));
  }
  if (out.size() != config_.response_bits) throw Error(ErrorKind::WidthMismatch, "response buffer width");
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, RcPufModel>) {
          for (std::size_t lane = 0; lane < m.response_bits; ++lane) {
            const double reference = std::min(m.reference_delays[lane], m.pulse_width);
            std::uint8_t bit = m.lane_delay(lane, c) > reference;
            if (!m.uid_word.empty()) bit ^= m.uid_word[lane];
            out[lane] = bit;
          }
        } else if constexpr (std::is_same_v<M, ArbiterChain>) {
          out[0] = m.evaluate(c);
        } else if constexpr (std::is_same_v<M, XorArbiterModel>) {
          std::uint8_t bit = 0;
          for (const auto& chain : m.chains) bit ^= chain.evaluate(c);
          out[0] = bit;
        } else if constexpr (std::is_same_v<M, FfArbiterModel>) {
          out[0] = m.evaluate(c);
        } else if constexpr (std::is_same_v<M, RingOscillatorModel>) {
          for (std::size_t lane = 0; lane < out.size(); ++lane) {
            auto [a, b] = m.pair_for(lane, c);
            out[lane] = m.frequencies[a] > m.frequencies[b];
          }
        } else {
          for (std::size_t lane = 0; lane < out.size(); ++lane) {
            const double u = static_cast<double>(m.mix(c, lane) >> 11) * 0x1.0p-53;
            out[lane] = u < m.bias_p;
          }
        }
      },
      model_);
}

Response PufInstance::evaluate(const Challenge& challenge) const {
  std::vector<std::uint8_t> out(config_.response_bits);
  evaluate_into(challenge.bits(), out);
  return Response(std::move(out));
}

Response PufInstance::evaluate_noisy(const Challenge& challenge, double flip_rate, std::uint64_t noise_seed) const {
  if (!(flip_rate >= 0.0 && flip_rate <= 1.0)) throw Error(ErrorKind::InvalidArgument, "flip_rate must lie in [0, 1]");
  Response r = evaluate(challenge);
  Rng rng = make_rng(noise_seed);
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (uniform01(rng) < flip_rate) r.flip(i);
  }
  return r;
}

PufInstance create_instance(const PufConfig& config) {
  config.validate();
  Rng rng = make_rng(config.seed);
  switch (config.variant) {
    case PufVariant::RcFirstOrder:
    case PufVariant::RcSecondOrder:
      return PufInstance(config, sample_rc_model(config, config.pulse_width_us * 1e-6));
    case PufVariant::Arbiter:
      return PufInstance(config, sample_chain(rng, config.challenge_bits));
    case PufVariant::XorArbiter: {
      XorArbiterModel m;
      for (std::size_t k = 0; k < config.xor_chains; ++k) m.chains.push_back(sample_chain(rng, config.challenge_bits));
      return PufInstance(config, std::move(m));
    }
    case PufVariant::FfArbiter: {
      FfArbiterModel m;
      m.chain = sample_chain(rng, config.challenge_bits);
      for (std::size_t k = 0; k < config.ff_loops; ++k) {
        std::uniform_int_distribution<std::size_t> tap_dist(0, config.challenge_bits - 2);
        const std::size_t tap = tap_dist(rng);
        std::uniform_int_distribution<std::size_t> target_dist(tap + 1, config.challenge_bits - 1);
        m.loops.push_back({tap, target_dist(rng)});
      }
      return PufInstance(config, std::move(m));
    }
    case PufVariant::RingOscillator: {
      RingOscillatorModel m;
      m.address_bits = std::max<std::size_t>(1, std::min(config.challenge_bits, kRoMaxAddressBits));
      m.frequencies.resize(std::size_t{1} << m.address_bits);
      std::normal_distribution<double> normal(0.0, kRoSigma);
      for (auto& f : m.frequencies) f = kRoNominalFrequency * (1.0 + normal(rng));
      return PufInstance(config, std::move(m));
    }
    case PufVariant::IdealEntropy: {
      IdealEntropyModel m;
      m.key = {rng(), rng()};
      m.bias_p = config.bias_p;
      return PufInstance(config, m);
    }
  }
  throw Error(ErrorKind::InvalidConfig, "unsupported variant");
}

std::vector<PufInstance> device_population(const PufConfig& config, std::size_t n_devices) {
  if (n_devices < 2) throw Error(ErrorKind::InvalidArgument, "a population needs at least two devices");
  std::vector<PufInstance> devices;
  devices.reserve(n_devices);
  for (std::size_t i = 0; i < n_devices; ++i) {
    PufConfig child = config;
    child.seed = child_seed(config.seed, i);
    devices.push_back(create_instance(child));
  }
  return devices;
}

}  // namespace pufbench
