#ifndef COMPLYFED_DP_H_
#define COMPLYFED_DP_H_

#include <cstddef>
#include <cstdint>
#include <span>

#include "complyfed/dataset.h"
#include "complyfed/model.h"
#include "complyfed/param_vector.h"

namespace complyfed {

struct DPConfig {
  double noise_multiplier = 1.0;  // eta > 0
  double clip_norm = 1.0;         // C > 0
  double lr = 0.001;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;  // throws kInvalidDPConfig
};

// g * min(1, C / ||g||_2)
ParamVector clip(ParamVector g, double clip_norm);
void clip_in_place(std::span<double> g, double clip_norm);

// One DP-SGD pass over data. For each mini-batch: clip every per-sample
// gradient to clip_norm, sum, add N(0, (eta * C)^2) per coordinate, divide
// by the batch length and step with lr. The shuffle uses dp.seed exactly as
// sgd_epoch uses its shuffle seed; noise comes from a stream derived from
// the same seed.
ParamVector dp_sgd_epoch(const ModelSpec &spec, ParamVector params, const Dataset &data,
                         const DPConfig &dp);

// params + N(0, sigma^2) per coordinate.
ParamVector add_uniform_noise(ParamVector params, double sigma, std::uint64_t seed);

}  // namespace complyfed

#endif  // COMPLYFED_DP_H_
