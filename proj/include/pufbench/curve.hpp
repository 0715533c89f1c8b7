#pragma once

#include <array>
#include <string>
#include <vector>

#include "pufbench/learn/trace.hpp"

namespace pufbench {

inline constexpr std::size_t kCurvePoints = 101;

enum class CurveSplit { Train, Validation };
std::string to_string(CurveSplit split);

struct NormalizedCurve {
  std::string model;
  CurveSplit split = CurveSplit::Train;
  std::array<double, kCurvePoints> accuracy{};  // accuracy[k] is the value at s_k = k
};

/// tau_i = (i - 1) / (N - 1) * 100 for each trace point.
std::vector<double> normalize_steps(const learn::TrainingTrace& trace);

NormalizedCurve interpolate_curve(const learn::TrainingTrace& trace, CurveSplit which, std::string model = {});

struct LabeledTrace {
  std::string model;
  learn::TrainingTrace trace;
};

/// Train then validation curve for every trace, in input order.
std::vector<NormalizedCurve> build_comparison(const std::vector<LabeledTrace>& traces);

/// `s,model,split,accuracy` rows.
std::string curves_to_csv(const std::vector<NormalizedCurve>& curves);

}  // namespace pufbench
