#include "pufbench/curve.hpp"

#include <cmath>

#include "pufbench/config_file.hpp"
#include "pufbench/error.hpp"

namespace pufbench {

std::string to_string(CurveSplit split) { return split == CurveSplit::Train ? "train" : "validation"; }

std::vector<double> normalize_steps(const learn::TrainingTrace& trace) {
  const std::size_t n = trace.points.size();
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "a trace needs at least 2 points to normalize");
  trace.validate();
  std::vector<double> tau(n);
  // 100 * (i - 1) / (N - 1) keeps knots that land on integers exact
  for (std::size_t i = 0; i < n; ++i) tau[i] = 100.0 * static_cast<double>(i) / static_cast<double>(n - 1);
  return tau;
}

NormalizedCurve interpolate_curve(const learn::TrainingTrace& trace, CurveSplit which, std::string model) {
  const auto tau = normalize_steps(trace);
  const auto acc = which == CurveSplit::Train ? trace.train_accuracies() : trace.validation_accuracies();
  NormalizedCurve curve{std::move(model), which, {}};
  std::size_t i = 0;
  for (std::size_t k = 0; k + 1 < kCurvePoints; ++k) {
    const double s = static_cast<double>(k);
    while (tau[i + 1] <= s) ++i;
    if (s == tau[i]) {
      curve.accuracy[k] = acc[i];
    } else {
      const double t = (s - tau[i]) / (tau[i + 1] - tau[i]);
      curve.accuracy[k] = std::lerp(acc[i], acc[i + 1], t);
    }
  }
  curve.accuracy[kCurvePoints - 1] = acc.back();
  return curve;
}

std::vector<NormalizedCurve> build_comparison(const std::vector<LabeledTrace>& traces) {
  std::vector<NormalizedCurve> out;
  for (const auto& t : traces) {
    out.push_back(interpolate_curve(t.trace, CurveSplit::Train, t.model));
    out.push_back(interpolate_curve(t.trace, CurveSplit::Validation, t.model));
  }
  return out;
}

std::string curves_to_csv(const std::vector<NormalizedCurve>& curves) {
  std::string out = "s,model,split,accuracy\n";
  for (const auto& c : curves) {
    for (std::size_t k = 0; k < kCurvePoints; ++k) {
      out += std::to_string(k) + "," + c.model + "," + to_string(c.split) + "," + format_double(c.accuracy[k]) + "\n";
    }
  }
  return out;
}

}  // namespace pufbench
