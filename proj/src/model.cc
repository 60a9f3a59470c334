#include "complyfed/model.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "complyfed/error.h"
#include "complyfed/rng.h"

namespace complyfed {

namespace {

void check_params(const ModelSpec &spec, const ParamVector &params) {
  if (params.layout() != spec.layout()) {
    throw Error(ErrorCode::kLayoutMismatch, "parameters do not match the model layout");
  }
}

void check_data(const ModelSpec &spec, const Dataset &data) {
  if (data.dim() != spec.input_dim) {
    throw Error(ErrorCode::kLayoutMismatch, "feature dimension " + std::to_string(data.dim()) +
                                                " does not match model input " +
                                                std::to_string(spec.input_dim));
  }
  for (int label : data.labels()) {
    if (label < 0 || label >= spec.num_classes) {
      throw Error(ErrorCode::kInvalidArgument,
                  "label " + std::to_string(label) + " outside model classes");
    }
  }
}

std::vector<std::size_t> all_rows(const Dataset &data) {
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

// out = W x + b for W stored rows x cols.
void affine(std::span<const double> weights, std::span<const double> bias,
            std::span<const double> x, std::span<double> out) {
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < out.size(); ++r) {
    const double *w = weights.data() + r * cols;
    double acc = bias[r];
    for (std::size_t c = 0; c < cols; ++c) acc += w[c] * x[c];
    out[r] = acc;
  }
}

// In-place softmax; returns log-sum-exp.
double softmax(std::span<double> logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double &v : logits) {
    v = std::exp(v - peak);
    total += v;
  }
  for (double &v : logits) v /= total;
  return peak + std::log(total);
}

// Fills logits with class probabilities for one sample and returns its loss.
struct Forward {
  const ModelSpec &spec;
  std::vector<double> hidden_pre;
  std::vector<double> hidden;
  std::vector<double> logits;

  explicit Forward(const ModelSpec &s)
      : spec(s), hidden_pre(s.hidden_dim), hidden(s.hidden_dim), logits(s.num_classes) {}

  double run(const ParamVector &params, std::span<const double> x, int label) {
    auto values = params.values();
    const std::size_t d = spec.input_dim;
    const std::size_t k = static_cast<std::size_t>(spec.num_classes);
    if (spec.kind == ModelKind::kLogistic) {
      affine(values.subspan(0, k * d), values.subspan(k * d, k), x, logits);
    } else {
      const std::size_t h = spec.hidden_dim;
      affine(values.subspan(0, h * d), values.subspan(h * d, h), x, hidden_pre);
      for (std::size_t j = 0; j < h; ++j) hidden[j] = std::max(0.0, hidden_pre[j]);
      const std::size_t off = h * d + h;
      affine(values.subspan(off, k * h), values.subspan(off + k * h, k), hidden, logits);
    }
    const double raw_label_logit = logits[static_cast<std::size_t>(label)];
    const double lse = softmax(logits);
    return lse - raw_label_logit;
  }
};

ParamVector run_epoch(const ModelSpec &spec, ParamVector params, const ParamVector *anchor,
                      double mu, const Dataset &data, double lr, std::size_t batch_size,
                      std::uint64_t shuffle_seed) {
  if (data.empty()) throw Error(ErrorCode::kEmptyDataset, "cannot train on an empty dataset");
  check_params(spec, params);
  check_data(spec, data);
  if (anchor != nullptr) params.check_layout(*anchor);

  GradientWorkspace workspace(spec);
  std::vector<double> sample(params.size());
  std::vector<double> step(params.size());
  for (const auto &rows : epoch_batches(data.size(), batch_size, shuffle_seed)) {
    std::fill(step.begin(), step.end(), 0.0);
    for (std::size_t row : rows) {
      workspace.sample_gradient(params, data.row(row), data.label(row), sample);
      for (std::size_t i = 0; i < step.size(); ++i) step[i] += sample[i];
    }
    const double inv = 1.0 / static_cast<double>(rows.size());
    auto values = params.values();
    if (anchor == nullptr) {
      for (std::size_t i = 0; i < step.size(); ++i) values[i] -= lr * (step[i] * inv);
    } else {
      auto pull = anchor->values();
      for (std::size_t i = 0; i < step.size(); ++i) {
        values[i] -= lr * (step[i] * inv + mu * (values[i] - pull[i]));
      }
    }
  }
  return params;
}

}  // namespace

void ModelSpec::validate() const {
  if (input_dim == 0) throw Error(ErrorCode::kInvalidSpec, "input_dim must be positive");
  if (num_classes < 2) throw Error(ErrorCode::kInvalidSpec, "num_classes must be at least 2");
  if (kind == ModelKind::kMlp && hidden_dim == 0) {
    throw Error(ErrorCode::kInvalidSpec, "mlp requires hidden_dim > 0");
  }
  if (kind == ModelKind::kLogistic && hidden_dim != 0) {
    throw Error(ErrorCode::kInvalidSpec, "logistic model takes hidden_dim = 0");
  }
}

Layout ModelSpec::layout() const {
  validate();
  const auto k = static_cast<std::size_t>(num_classes);
  if (kind == ModelKind::kLogistic) {
    return {{"W", {k, input_dim}}, {"b", {k}}};
  }
  return {{"W1", {hidden_dim, input_dim}},
          {"b1", {hidden_dim}},
          {"W2", {k, hidden_dim}},
          {"b2", {k}}};
}

ParamVector init_params(const ModelSpec &spec, std::uint64_t seed) {
  ParamVector params(spec.layout());
  Rng rng(seed);
  for (const auto &shape : params.layout()) {
    if (shape.dims.size() != 2) continue;  // biases stay zero
    const double fan_out = static_cast<double>(shape.dims[0]);
    const double fan_in = static_cast<double>(shape.dims[1]);
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    for (double &w : params.tensor(shape.name)) w = rng.uniform(-bound, bound);
  }
  return params;
}

ForwardResult forward_loss(const ModelSpec &spec, const ParamVector &params, const Dataset &data,
                           std::span<const std::size_t> rows) {
  check_params(spec, params);
  check_data(spec, data);
  if (rows.empty()) throw Error(ErrorCode::kEmptyDataset, "empty batch");
  Forward forward(spec);
  ForwardResult result;
  result.probs.reserve(rows.size() * forward.logits.size());
  double total = 0.0;
  for (std::size_t row : rows) {
    total += forward.run(params, data.row(row), data.label(row));
    result.probs.insert(result.probs.end(), forward.logits.begin(), forward.logits.end());
  }
  result.loss = total / static_cast<double>(rows.size());
  return result;
}

ForwardResult forward_loss(const ModelSpec &spec, const ParamVector &params, const Batch &batch) {
  const auto rows = all_rows(batch);
  return forward_loss(spec, params, batch, rows);
}

GradientWorkspace::GradientWorkspace(const ModelSpec &spec)
    : spec_(spec),
      hidden_pre_(spec.hidden_dim),
      hidden_(spec.hidden_dim),
      logits_(static_cast<std::size_t>(spec.num_classes)),
      hidden_grad_(spec.hidden_dim) {}

double GradientWorkspace::sample_gradient(const ParamVector &params, std::span<const double> x,
                                          int label, std::span<double> out) {
  auto values = params.values();
  const std::size_t d = spec_.input_dim;
  const std::size_t k = static_cast<std::size_t>(spec_.num_classes);
  const auto y = static_cast<std::size_t>(label);

  if (spec_.kind == ModelKind::kLogistic) {
    affine(values.subspan(0, k * d), values.subspan(k * d, k), x, logits_);
    const double raw = logits_[y];
    const double loss = softmax(logits_) - raw;
    logits_[y] -= 1.0;  // dL/dlogits = p - onehot
    for (std::size_t c = 0; c < k; ++c) {
      double *gw = out.data() + c * d;
      for (std::size_t j = 0; j < d; ++j) gw[j] = logits_[c] * x[j];
      out[k * d + c] = logits_[c];
    }
    return loss;
  }

  const std::size_t h = spec_.hidden_dim;
  const std::size_t off = h * d + h;
  affine(values.subspan(0, h * d), values.subspan(h * d, h), x, hidden_pre_);
  for (std::size_t j = 0; j < h; ++j) hidden_[j] = std::max(0.0, hidden_pre_[j]);
  const auto w2 = values.subspan(off, k * h);
  affine(w2, values.subspan(off + k * h, k), hidden_, logits_);
  const double raw = logits_[y];
  const double loss = softmax(logits_) - raw;
  logits_[y] -= 1.0;

  std::fill(hidden_grad_.begin(), hidden_grad_.end(), 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    const double g = logits_[c];
    double *gw2 = out.data() + off + c * h;
    const double *w2row = w2.data() + c * h;
    for (std::size_t j = 0; j < h; ++j) {
      gw2[j] = g * hidden_[j];
      hidden_grad_[j] += w2row[j] * g;
    }
    out[off + k * h + c] = g;
  }
  for (std::size_t j = 0; j < h; ++j) {
    const double gz = hidden_pre_[j] > 0.0 ? hidden_grad_[j] : 0.0;
    double *gw1 = out.data() + j * d;
    for (std::size_t i = 0; i < d; ++i) gw1[i] = gz * x[i];
    out[h * d + j] = gz;
  }
  return loss;
}

ParamVector grad(const ModelSpec &spec, const ParamVector &params, const Dataset &data,
                 std::span<const std::size_t> rows) {
  check_params(spec, params);
  check_data(spec, data);
  if (rows.empty()) throw Error(ErrorCode::kEmptyDataset, "empty batch");
  GradientWorkspace workspace(spec);
  ParamVector total(params.layout());
  std::vector<double> sample(params.size());
  auto acc = total.values();
  for (std::size_t row : rows) {
    workspace.sample_gradient(params, data.row(row), data.label(row), sample);
    for (std::size_t i = 0; i < sample.size(); ++i) acc[i] += sample[i];
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (double &v : acc) v *= inv;
  return total;
}

ParamVector grad(const ModelSpec &spec, const ParamVector &params, const Batch &batch) {
  const auto rows = all_rows(batch);
  return grad(spec, params, batch, rows);
}

std::vector<ParamVector> per_sample_grads(const ModelSpec &spec, const ParamVector &params,
                                          const Batch &batch) {
  check_params(spec, params);
  check_data(spec, batch);
  if (batch.empty()) throw Error(ErrorCode::kEmptyDataset, "empty batch");
  GradientWorkspace workspace(spec);
  std::vector<ParamVector> grads;
  grads.reserve(batch.size());
  for (std::size_t row = 0; row < batch.size(); ++row) {
    ParamVector g(params.layout());
    workspace.sample_gradient(params, batch.row(row), batch.label(row), g.values());
    grads.push_back(std::move(g));
  }
  return grads;
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size,
                                                    std::uint64_t shuffle_seed) {
  if (batch_size == 0) throw Error(ErrorCode::kInvalidArgument, "batch_size must be positive");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(shuffle_seed);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t stop = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return batches;
}

ParamVector sgd_epoch(const ModelSpec &spec, ParamVector params, const Dataset &data, double lr,
                      std::size_t batch_size, std::uint64_t shuffle_seed) {
  return run_epoch(spec, std::move(params), nullptr, 0.0, data, lr, batch_size, shuffle_seed);
}

ParamVector proximal_sgd_epoch(const ModelSpec &spec, ParamVector params,
                               const ParamVector &anchor, double mu, const Dataset &data,
                               double lr, std::size_t batch_size, std::uint64_t shuffle_seed) {
  if (mu < 0.0) throw Error(ErrorCode::kNegativeMu, "proximal mu must be >= 0");
  params.check_layout(anchor);
  if (mu == 0.0) {
    return run_epoch(spec, std::move(params), nullptr, 0.0, data, lr, batch_size, shuffle_seed);
  }
  return run_epoch(spec, std::move(params), &anchor, mu, data, lr, batch_size, shuffle_seed);
}

std::vector<int> predict(const ModelSpec &spec, const ParamVector &params, const Dataset &data) {
  check_params(spec, params);
  if (data.dim() != spec.input_dim) {
    throw Error(ErrorCode::kLayoutMismatch, "feature dimension does not match model input");
  }
  Forward forward(spec);
  std::vector<int> predictions(data.size());
  for (std::size_t row = 0; row < data.size(); ++row) {
    forward.run(params, data.row(row), 0);
    // max_element returns the first maximum, i.e. the lowest class index.
    predictions[row] = static_cast<int>(
        std::max_element(forward.logits.begin(), forward.logits.end()) - forward.logits.begin());
  }
  return predictions;
}

}  // namespace complyfed
