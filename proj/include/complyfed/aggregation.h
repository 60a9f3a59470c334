#ifndef COMPLYFED_AGGREGATION_H_
#define COMPLYFED_AGGREGATION_H_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "complyfed/param_vector.h"

namespace complyfed {

struct ClientUpdate {
  std::string client_id;
  ParamVector params;
  std::size_t num_examples = 1;
};

enum class Weighting { kExamples, kUniform };

// Weighted mean of client parameters, sum(n_i * theta_i) / sum(n_i), with
// n_i = num_examples (or 1 under kUniform). Updates are folded in sorted
// client_id order as a running mean, so the result does not depend on input
// order and identical inputs come back unchanged.
ParamVector fed_avg(const std::vector<ClientUpdate> &updates,
                    Weighting weighting = Weighting::kExamples);

// Coordinate-wise median; even counts average the two central values.
// num_examples is ignored.
ParamVector fed_median(const std::vector<ClientUpdate> &updates);

// FedProx keeps the proximal term on the client side; the server side is
// plain FedAvg.
ParamVector fed_prox_aggregate(const std::vector<ClientUpdate> &updates,
                               Weighting weighting = Weighting::kExamples);

struct ServerOptHyper {
  double beta1 = 0.9;
  double beta2 = 0.99;
  double tau = 1e-3;
  double server_lr = 0.01;

  bool operator==(const ServerOptHyper &) const = default;
};

struct ServerOptState {
  ParamVector m;  // first moment, starts at 0
  ParamVector v;  // second moment, starts at tau^2
  ServerOptHyper hyper;
};

ServerOptState make_server_state(const ParamVector &global, const ServerOptHyper &hyper);

enum class ServerOptVariant { kAdam, kYogi };

struct ServerStepResult {
  ParamVector global;
  ServerOptState state;
};

// Adaptive server optimizer step on the pseudo-gradient
// delta = fed_avg(updates) - global:
//   m <- b1 m + (1 - b1) delta
//   adam: v <- b2 v + (1 - b2) delta^2
//   yogi: v <- v - (1 - b2) delta^2 sign(v - delta^2)
//   global <- global + server_lr * m / (sqrt(v) + tau)
ServerStepResult fed_opt_step(ServerOptState state, const ParamVector &global,
                              const std::vector<ClientUpdate> &updates, ServerOptVariant variant,
                              Weighting weighting = Weighting::kExamples);

enum class StrategyKind { kFedAvg, kFedMedian, kFedProx, kFedYogi, kFedAdam };

std::string_view strategy_name(StrategyKind kind);
std::optional<StrategyKind> parse_strategy(std::string_view name);

struct AggregationStrategy {
  StrategyKind kind = StrategyKind::kFedAvg;
  double prox_mu = 0.01;  // FedProx only
  ServerOptHyper server;  // FedYogi / FedAdam only
  Weighting weighting = Weighting::kExamples;

  bool uses_server_state() const {
    return kind == StrategyKind::kFedYogi || kind == StrategyKind::kFedAdam;
  }
};

// Applies the strategy's global update. state is read and advanced only for
// the adaptive optimizers.
ParamVector aggregate(const AggregationStrategy &strategy, const ParamVector &global,
                      const std::vector<ClientUpdate> &updates, ServerOptState &state);

}  // namespace complyfed

#endif  // COMPLYFED_AGGREGATION_H_
