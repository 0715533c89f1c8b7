#include "pufbench/learn/loss.hpp"

#include <algorithm>
#include <cmath>

#include "pufbench/error.hpp"

namespace pufbench::learn {

namespace {

void check_shape(const Eigen::MatrixXd& m, const BitMatrix& targets) {
  if (static_cast<std::size_t>(m.rows()) != targets.rows() || static_cast<std::size_t>(m.cols()) != targets.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "prediction and target shapes differ");
  }
  if (targets.rows() == 0 || targets.cols() == 0) throw Error(ErrorKind::ShapeMismatch, "empty target matrix");
}

}  // namespace

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double clamped_logit(double p) {
  p = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
  return std::log(p / (1.0 - p));
}

double bce_loss(const Eigen::MatrixXd& p, const BitMatrix& targets) {
  check_shape(p, targets);
  double sum = 0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      const double pij = p(i, j);
      if (!(pij > 0.0 && pij < 1.0)) throw Error(ErrorKind::Domain, "probability outside (0, 1); clamp before calling");
      sum += targets(i, j) ? std::log(pij) : std::log1p(-pij);
    }
  }
  return -sum / static_cast<double>(p.size());
}

LossAndGradient bce_with_logits(const Eigen::MatrixXd& z, const BitMatrix& targets) {
  check_shape(z, targets);
  const double scale = 1.0 / static_cast<double>(z.size());
  LossAndGradient out{0.0, Eigen::MatrixXd(z.rows(), z.cols())};
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      const double zij = z(i, j);
      const double y = targets(i, j);
      out.loss += std::max(zij, 0.0) - zij * y + std::log1p(std::exp(-std::abs(zij)));
      out.gradient(i, j) = (sigmoid(zij) - y) * scale;
    }
  }
  out.loss *= scale;
  return out;
}

Response threshold(std::span<const double> logits) {
  Response r(logits.size());
  for (std::size_t j = 0; j < logits.size(); ++j) r.set(j, logits[j] > 0.0);
  return r;
}

BitMatrix threshold(const Eigen::MatrixXd& logits) {
  BitMatrix out(static_cast<std::size_t>(logits.rows()), static_cast<std::size_t>(logits.cols()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    for (Eigen::Index j = 0; j < logits.cols(); ++j) out(i, j) = logits(i, j) > 0.0;
  }
  return out;
}

}  // namespace pufbench::learn
