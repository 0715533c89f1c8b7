#pragma once

#include <string>
#include <vector>

namespace pufbench::learn {

struct TracePoint {
  std::size_t step = 0;
  double train_accuracy = 0;
  double validation_accuracy = 0;
};

/// Accuracy along a model's own training axis: epochs, boosting rounds, tree depth or tree count.
struct TrainingTrace {
  std::string axis;
  std::vector<TracePoint> points;

  /// Throws invalid-argument unless steps strictly increase and accuracies lie in [0, 1].
  void validate() const;
  std::vector<double> train_accuracies() const;
  std::vector<double> validation_accuracies() const;
};

}  // namespace pufbench::learn
