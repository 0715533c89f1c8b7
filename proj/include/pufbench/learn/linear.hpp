#pragma once

#include <Eigen/Dense>

#include "pufbench/bits.hpp"
#include "pufbench/learn/learner_config.hpp"
#include "pufbench/learn/trace.hpp"

namespace pufbench {
class CrpDataset;
}

namespace pufbench::learn {

/// Logistic model on arbiter parity features, one weight row per response bit.
/// Serves as the positive control: an additive-delay arbiter is linear in these features.
class ParityLogistic {
 public:
  Eigen::MatrixXd weights;  // n_r x (n_c + 1)

  /// Parity features of every row, shaped rows x (n_c + 1).
  static Eigen::MatrixXd features(const BitMatrix& challenges);
  Eigen::MatrixXd logits(const BitMatrix& challenges) const;  // rows x n_r
};

struct LinearResult {
  ParityLogistic model;
  TrainingTrace trace;
};

/// Mini-batch Adam on BCE-with-logits; one trace point per epoch.
LinearResult train_linear(const CrpDataset& train, const CrpDataset& validation, const LearnerConfig& config);

}  // namespace pufbench::learn
