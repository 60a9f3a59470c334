#ifndef COMPLYFED_FEDERATION_H_
#define COMPLYFED_FEDERATION_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "complyfed/aggregation.h"
#include "complyfed/compliance.h"
#include "complyfed/dataset.h"
#include "complyfed/metrics.h"
#include "complyfed/model.h"
#include "complyfed/param_vector.h"

namespace complyfed {

enum class DPMode { kAdaptivePerClient, kUniformPostAggregation, kNone };

std::string_view dp_mode_name(DPMode mode);
std::optional<DPMode> parse_dp_mode(std::string_view name);

struct FederationConfig {
  ModelSpec model;
  std::size_t rounds = 50;
  std::size_t local_epochs = 3;
  double lr = 0.001;
  std::size_t batch_size = 32;
  AggregationStrategy strategy;
  DPMode dp_mode = DPMode::kAdaptivePerClient;
  NoisePolicy noise_policy;
  double clip_norm = 1.0;
  // When false every client is treated as fully compliant (S_c = 1), so
  // only the minimum noise floor applies and nobody is gated out.
  bool compliance_applied = true;
  // Post-aggregation noise std for kUniformPostAggregation. Unset means the
  // mean eta of the round's participants.
  std::optional<double> uniform_sigma;
  Averaging metric_averaging = Averaging::kWeighted;
  std::uint64_t master_seed = 0;
  std::size_t threads = 0;  // 0: default_thread_count()

  void validate() const;
};

struct FederatedClient {
  std::string client_id;
  Dataset data;
  double compliance_score = 1.0;
};

struct ClientRoundEntry {
  std::string client_id;
  std::optional<double> score;  // absent when dp_mode is none
  std::optional<double> eta;
  double local_loss = 0.0;
};

struct RoundRecord {
  std::size_t round = 0;  // 1-based
  std::vector<ClientRoundEntry> per_client;
  std::optional<double> uniform_sigma;
  MetricsReport global_metrics;
  double wall_time = 0.0;  // seconds
};

struct RoundOutcome {
  ParamVector global;
  ServerOptState state;
  RoundRecord record;
};

// Seed of one client's randomness in one round: a function of
// (master_seed, round, client_id) only.
std::uint64_t client_round_seed(std::uint64_t master_seed, std::size_t round,
                                std::string_view client_id);

// One round of compliance-aware federated training:
//   1. every eligible client trains a copy of global for local_epochs on its
//      own data (proximal steps under FedProx);
//   2. adaptive mode: each returned model is copied and DP-SGD trained for
//      one epoch on agg_data with eta_i = noise_multiplier(S_c_i);
//   3. the strategy aggregates the resulting models;
//   4. uniform mode skips step 2 and perturbs the aggregate instead.
// global_metrics is left empty; run_federation fills it.
RoundOutcome run_round(const ParamVector &global, std::span<const FederatedClient> clients,
                       const Dataset &agg_data, const FederationConfig &cfg,
                       const ServerOptState &state, std::size_t round);

struct FederationResult {
  std::vector<RoundRecord> records;
  ParamVector final_params;
  std::optional<std::size_t> best_round;  // highest eval accuracy, earliest on ties
};

// Runs cfg.rounds rounds from init_params(cfg.model, seed derived from
// master_seed), evaluating the global model on eval_data after each round.
FederationResult run_federation(const FederationConfig &cfg,
                                std::span<const FederatedClient> clients, const Dataset &agg_data,
                                const Dataset &eval_data);

ParamVector initial_params(const FederationConfig &cfg);

}  // namespace complyfed

#endif  // COMPLYFED_FEDERATION_H_
