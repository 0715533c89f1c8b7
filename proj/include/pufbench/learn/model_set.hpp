#pragma once

#include <filesystem>
#include <variant>
#include <vector>

#include "pufbench/bits.hpp"
#include "pufbench/dataset.hpp"
#include "pufbench/learn/boosted.hpp"
#include "pufbench/learn/gbnn.hpp"
#include "pufbench/learn/learner_config.hpp"
#include "pufbench/learn/linear.hpp"
#include "pufbench/learn/mlp.hpp"
#include "pufbench/learn/trace.hpp"
#include "pufbench/learn/tree.hpp"

namespace pufbench::learn {

/// A trained attack model. Tree, forest and boosted-tree families hold one independent model
/// per response bit; network families hold a single multi-output model.
class PerBitModelSet {
 public:
  using Models = std::variant<std::vector<DecisionTree>, std::vector<RandomForest>, std::vector<BoostedTrees>, Mlp,
                              GbnnEnsemble, ParityLogistic>;

  PerBitModelSet(LearnerFamily family, std::size_t challenge_bits, std::size_t response_bits, Models models);

  LearnerFamily family() const noexcept { return family_; }
  std::size_t challenge_bits() const noexcept { return challenge_bits_; }
  std::size_t response_bits() const noexcept { return response_bits_; }
  const Models& models() const noexcept { return models_; }

  /// Predicted responses, one row per challenge row.
  BitMatrix predict(const BitMatrix& challenges) const;
  /// Bit j comes from model j, concatenated in bit-position order.
  Response predict_response(const Challenge& challenge) const;

  /// Versioned `PBM1` container.
  std::vector<std::uint8_t> serialize() const;
  static PerBitModelSet deserialize(std::span<const std::uint8_t> bytes);
  void save(const std::filesystem::path& path) const;
  static PerBitModelSet load(const std::filesystem::path& path);

 private:
  LearnerFamily family_;
  std::size_t challenge_bits_;
  std::size_t response_bits_;
  Models models_;
};

struct FitResult {
  PerBitModelSet models;
  TrainingTrace trace;
};

struct CapacityRange {
  std::size_t first = 1;
  std::size_t last = 1;
};

/// Legal capacity bounds: depth 1-20, trees 1-35, rounds 1-35; epochs or stages for networks.
CapacityRange capacity_bounds(LearnerFamily family);
/// The configured maximum capacity: tree_depth, n_trees, boost_rounds, epochs, gbnn_stages or linear_epochs.
std::size_t configured_capacity(const LearnerConfig& config);

/// Trains at range.last and reports one trace point per capacity value in the range. Boosted and
/// bagged families are grown once and read out staged; trees are grown once and read truncated.
FitResult sweep_fit(LearnerFamily family, const SplitDataset& split, CapacityRange range, const LearnerConfig& config);

/// Trace-only view of sweep_fit.
TrainingTrace capacity_sweep(LearnerFamily family, const SplitDataset& split, CapacityRange range,
                             const LearnerConfig& config);

/// One model per response bit (tree, forest, boosted-trees), swept from capacity 1 to the configured maximum.
FitResult fit_per_bit(LearnerFamily family, const SplitDataset& split, const LearnerConfig& config);

/// Any family: per-bit families via fit_per_bit, networks via their trainers.
FitResult fit_learner(const SplitDataset& split, const LearnerConfig& config);

/// Runs `fn(i)` for i in [0, n) on up to hardware_concurrency threads.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace pufbench::learn
