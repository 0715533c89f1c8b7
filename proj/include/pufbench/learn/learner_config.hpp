#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pufbench/config_file.hpp"

namespace pufbench::learn {

enum class LearnerFamily { Tree, Forest, BoostedTrees, Mlp, Gbnn, Linear };

std::string to_string(LearnerFamily f);
LearnerFamily parse_learner_family(std::string_view name);
/// Short label used in reports: DT, RF, XGBoost, ANN, GBNN, LR.
std::string display_name(LearnerFamily f);
bool is_per_bit_family(LearnerFamily f);

enum class Scale { Desk, Paper };
std::string to_string(Scale s);
Scale parse_scale(std::string_view name);

/// How a GBNN stage fits its base learner.
enum class GbnnStageFit {
  Logistic,        // BCE-with-logits on F_{t-1}(x) + rho * h_t(x)
  ResidualSquared  // squared error against y - sigmoid(F_{t-1}(x))
};

struct LearnerConfig {
  LearnerFamily family = LearnerFamily::Tree;

  // trees
  std::size_t tree_depth = 20;
  std::size_t n_trees = 35;
  std::size_t forest_tree_depth = 20;
  std::size_t boost_rounds = 35;
  std::size_t boost_tree_depth = 3;
  double boost_shrinkage = 0.3;
  double boost_lambda = 1.0;

  // multi-output network
  std::vector<std::size_t> mlp_hidden_sizes{256, 128, 64};
  double leaky_slope = 0.01;
  double dropout_rate = 0.2;
  std::size_t norm_layers = 3;  // leading hidden layers with batch-norm and dropout
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;
  std::size_t epochs = 30;
  std::size_t batch_size = 128;
  std::size_t lr_step_epochs = 20;
  double lr_gamma = 0.5;

  // boosted network ensemble
  std::size_t gbnn_stages = 10;
  std::vector<std::size_t> gbnn_hidden_sizes{256, 256, 256, 256, 256, 256, 256};
  std::size_t gbnn_norm_layers = 3;
  double gbnn_learning_rate = 1e-2;
  double gbnn_weight_decay = 1e-5;
  double gbnn_rho = 0.5;
  std::size_t gbnn_epochs_per_stage = 3;
  GbnnStageFit gbnn_stage_fit = GbnnStageFit::Logistic;

  // logistic model on arbiter parity features
  std::size_t linear_epochs = 60;
  double linear_learning_rate = 1e-2;

  std::uint64_t seed = 0;

  /// Throws invalid-config when a field leaves its legal range.
  void validate() const;

  /// Workbench presets. Desk scale finishes in minutes on one core.
  static LearnerConfig preset(LearnerFamily family, Scale scale);

  /// Overlays keys from `cfg` (same names as the fields) onto `base`; unknown keys are rejected.
  static LearnerConfig from_config(const ConfigFile& cfg, LearnerConfig base);
  static LearnerConfig from_config(const ConfigFile& cfg);
  ConfigFile to_config() const;

  friend bool operator==(const LearnerConfig&, const LearnerConfig&) = default;
};

}  // namespace pufbench::learn
