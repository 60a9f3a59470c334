#ifndef COMPLYFED_METRICS_H_
#define COMPLYFED_METRICS_H_

#include <cstddef>
#include <span>
#include <vector>

#include "complyfed/dataset.h"
#include "complyfed/model.h"
#include "complyfed/param_vector.h"

namespace complyfed {

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

enum class Averaging { kWeighted, kMacro };

struct MetricsReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<ClassMetrics> per_class;
  // confusion[true][predicted]
  std::vector<std::vector<std::size_t>> confusion;

  std::size_t total() const;
};

// Metrics from a confusion matrix (rows = true class). Aggregate precision,
// recall and F1 are support-weighted (or plain means under kMacro); a class
// with a zero denominator contributes 0.
MetricsReport metrics_from_confusion(std::vector<std::vector<std::size_t>> confusion,
                                     Averaging averaging = Averaging::kWeighted);

MetricsReport metrics_from_predictions(std::span<const int> labels,
                                       std::span<const int> predictions, int num_classes,
                                       Averaging averaging = Averaging::kWeighted);

// Argmax predictions of the model on eval_data, scored against its labels.
MetricsReport evaluate(const ModelSpec &spec, const ParamVector &params, const Dataset &eval_data,
                       Averaging averaging = Averaging::kWeighted);

}  // namespace complyfed

#endif  // COMPLYFED_METRICS_H_
