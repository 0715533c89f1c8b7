#pragma once

#include <Eigen/Dense>

#include "pufbench/bits.hpp"

namespace pufbench::learn {

inline constexpr double kProbabilityClamp = 1e-7;

double sigmoid(double z);
/// log(p / (1 - p)) with p clamped to [1e-7, 1 - 1e-7].
double clamped_logit(double p);

/// Mean binary cross-entropy over all N x n_r entries. Probabilities must lie strictly inside (0, 1).
double bce_loss(const Eigen::MatrixXd& probabilities, const BitMatrix& targets);

struct LossAndGradient {
  double loss;
  Eigen::MatrixXd gradient;  // dL/dz, same shape as the logits
};

/// Numerically stable BCE on raw logits: max(z,0) - z*y + log(1 + exp(-|z|)).
LossAndGradient bce_with_logits(const Eigen::MatrixXd& logits, const BitMatrix& targets);

/// bit = 1 iff logit > 0 (sigmoid strictly above one half).
Response threshold(std::span<const double> logits);
BitMatrix threshold(const Eigen::MatrixXd& logits);

}  // namespace pufbench::learn
