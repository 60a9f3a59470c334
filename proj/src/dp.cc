#include "complyfed/dp.h"

#include <cmath>
#include <vector>

#include "complyfed/error.h"
#include "complyfed/rng.h"

namespace complyfed {

void DPConfig::validate() const {
  if (!(noise_multiplier > 0.0) || !std::isfinite(noise_multiplier)) {
    throw Error(ErrorCode::kInvalidDPConfig, "noise multiplier must be > 0");
  }
  if (!(clip_norm > 0.0)) throw Error(ErrorCode::kInvalidDPConfig, "clip norm must be > 0");
  if (batch_size == 0) throw Error(ErrorCode::kInvalidDPConfig, "batch size must be >= 1");
}

void clip_in_place(std::span<double> g, double clip_norm) {
  if (!(clip_norm > 0.0)) throw Error(ErrorCode::kInvalidDPConfig, "clip norm must be > 0");
  double sq = 0.0;
  for (double v : g) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm <= clip_norm) return;
  const double scale = clip_norm / norm;
  for (double &v : g) v *= scale;
}

ParamVector clip(ParamVector g, double clip_norm) {
  clip_in_place(g.values(), clip_norm);
  return g;
}

ParamVector dp_sgd_epoch(const ModelSpec &spec, ParamVector params, const Dataset &data,
                         const DPConfig &dp) {
  dp.validate();
  if (data.empty()) throw Error(ErrorCode::kEmptyDataset, "cannot DP-train on an empty dataset");
  if (params.layout() != spec.layout()) {
    throw Error(ErrorCode::kLayoutMismatch, "parameters do not match the model layout");
  }
  if (data.dim() != spec.input_dim) {
    throw Error(ErrorCode::kLayoutMismatch, "feature dimension does not match model input");
  }

  GradientWorkspace workspace(spec);
  Rng noise(derive_seed(dp.seed, "dp-noise"));
  const double noise_std = dp.noise_multiplier * dp.clip_norm;
  std::vector<double> sample(params.size());
  std::vector<double> sum(params.size());
  for (const auto &rows : epoch_batches(data.size(), dp.batch_size, dp.seed)) {
    std::fill(sum.begin(), sum.end(), 0.0);
    for (std::size_t row : rows) {
      const int label = data.label(row);
      if (label < 0 || label >= spec.num_classes) {
        throw Error(ErrorCode::kInvalidArgument, "label outside model classes");
      }
      workspace.sample_gradient(params, data.row(row), label, sample);
      clip_in_place(sample, dp.clip_norm);
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += sample[i];
    }
    const double inv = 1.0 / static_cast<double>(rows.size());
    auto values = params.values();
    for (std::size_t i = 0; i < sum.size(); ++i) {
      values[i] -= dp.lr * ((sum[i] + noise_std * noise.normal()) * inv);
    }
  }
  return params;
}

ParamVector add_uniform_noise(ParamVector params, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "sigma must be >= 0");
  if (sigma == 0.0) return params;
  Rng rng(seed);
  for (double &v : params.values()) v += sigma * rng.normal();
  return params;
}

}  // namespace complyfed
