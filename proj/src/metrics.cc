#include "complyfed/metrics.h"

#include "complyfed/error.h"

namespace complyfed {

std::size_t MetricsReport::total() const {
  std::size_t sum = 0;
  for (const auto &row : confusion) {
    for (std::size_t v : row) sum += v;
  }
  return sum;
}

MetricsReport metrics_from_confusion(std::vector<std::vector<std::size_t>> confusion,
                                     Averaging averaging) {
  const std::size_t k = confusion.size();
  for (const auto &row : confusion) {
    if (row.size() != k) throw Error(ErrorCode::kBadDims, "confusion matrix must be square");
  }
  MetricsReport report;
  report.confusion = std::move(confusion);
  const auto &cm = report.confusion;
  const std::size_t total = report.total();
  if (total == 0) throw Error(ErrorCode::kEmptyDataset, "confusion matrix is empty");

  std::size_t trace = 0;
  for (std::size_t c = 0; c < k; ++c) trace += cm[c][c];
  report.accuracy = static_cast<double>(trace) / static_cast<double>(total);

  report.per_class.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t predicted = 0;
    std::size_t actual = 0;
    for (std::size_t o = 0; o < k; ++o) {
      predicted += cm[o][c];
      actual += cm[c][o];
    }
    auto &m = report.per_class[c];
    const auto tp = static_cast<double>(cm[c][c]);
    m.support = actual;
    m.precision = predicted > 0 ? tp / static_cast<double>(predicted) : 0.0;
    m.recall = actual > 0 ? tp / static_cast<double>(actual) : 0.0;
    m.f1 = m.precision + m.recall > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
  }

  for (const auto &m : report.per_class) {
    const double w = averaging == Averaging::kWeighted
                         ? static_cast<double>(m.support) / static_cast<double>(total)
                         : 1.0 / static_cast<double>(k);
    report.precision += w * m.precision;
    report.recall += w * m.recall;
    report.f1 += w * m.f1;
  }
  return report;
}

MetricsReport metrics_from_predictions(std::span<const int> labels,
                                       std::span<const int> predictions, int num_classes,
                                       Averaging averaging) {
  if (labels.size() != predictions.size()) {
    throw Error(ErrorCode::kBadDims, "labels and predictions differ in length");
  }
  if (labels.empty()) throw Error(ErrorCode::kEmptyDataset, "nothing to evaluate");
  const auto k = static_cast<std::size_t>(num_classes);
  std::vector<std::vector<std::size_t>> confusion(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes || predictions[i] < 0 ||
        predictions[i] >= num_classes) {
      throw Error(ErrorCode::kInvalidArgument, "class index out of range");
    }
    ++confusion[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(predictions[i])];
  }
  return metrics_from_confusion(std::move(confusion), averaging);
}

MetricsReport evaluate(const ModelSpec &spec, const ParamVector &params, const Dataset &eval_data,
                       Averaging averaging) {
  if (eval_data.empty()) throw Error(ErrorCode::kEmptyDataset, "evaluation set is empty");
  const auto predictions = predict(spec, params, eval_data);
  return metrics_from_predictions(eval_data.labels(), predictions, spec.num_classes, averaging);
}

}  // namespace complyfed
