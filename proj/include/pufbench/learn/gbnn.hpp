#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pufbench/learn/mlp.hpp"

namespace pufbench::learn {

/// Additive ensemble F_T(x) = F_0 + sum_t rho_t h_t(x) over network base learners.
class GbnnEnsemble {
 public:
  struct Stage {
    Mlp learner;
    double rho = 0.5;
  };

  Eigen::VectorXf base_logits;  // F_0, one entry per response bit
  std::vector<Stage> stages;

  /// Combined logits (outputs x rows) using the first `n_stages` stages.
  Eigen::MatrixXf logits(const BitMatrix& x, std::size_t n_stages = static_cast<std::size_t>(-1)) const;
};

struct GbnnResult {
  GbnnEnsemble model;
  TrainingTrace trace;
};

MlpShape gbnn_base_shape(const LearnerConfig& config, std::size_t inputs, std::size_t outputs);

/// Stage-wise boosting of network base learners; one trace point per stage (a single point at
/// step 0 when gbnn_stages is 0).
GbnnResult train_gbnn(const CrpDataset& train, const CrpDataset& validation, const LearnerConfig& config);

}  // namespace pufbench::learn
