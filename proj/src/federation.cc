#include "complyfed/federation.h"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "complyfed/dp.h"
#include "complyfed/error.h"
#include "complyfed/parallel.h"
#include "complyfed/rng.h"

namespace complyfed {

std::string_view dp_mode_name(DPMode mode) {
  switch (mode) {
    case DPMode::kAdaptivePerClient: return "adaptive_per_client";
    case DPMode::kUniformPostAggregation: return "uniform_post_aggregation";
    case DPMode::kNone: return "none";
  }
  return "unknown";
}

std::optional<DPMode> parse_dp_mode(std::string_view name) {
  for (auto mode : {DPMode::kAdaptivePerClient, DPMode::kUniformPostAggregation, DPMode::kNone}) {
    if (dp_mode_name(mode) == name) return mode;
  }
  return std::nullopt;
}

void FederationConfig::validate() const {
  model.validate();
  if (local_epochs == 0) throw Error(ErrorCode::kInvalidArgument, "local_epochs must be >= 1");
  if (batch_size == 0) throw Error(ErrorCode::kInvalidArgument, "batch_size must be >= 1");
  if (!(lr >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "lr must be >= 0");
  if (!(clip_norm > 0.0)) throw Error(ErrorCode::kInvalidArgument, "clip_norm must be > 0");
  if (strategy.prox_mu < 0.0) throw Error(ErrorCode::kNegativeMu, "prox_mu must be >= 0");
  if (uniform_sigma && !(*uniform_sigma >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "uniform_sigma must be >= 0");
  }
  if (dp_mode != DPMode::kNone) noise_policy.validate();
}

std::uint64_t client_round_seed(std::uint64_t master_seed, std::size_t round,
                                std::string_view client_id) {
  return derive_seed(master_seed, static_cast<std::uint64_t>(round), client_id);
}

ParamVector initial_params(const FederationConfig &cfg) {
  return init_params(cfg.model, derive_seed(cfg.master_seed, "init"));
}

RoundOutcome run_round(const ParamVector &global, std::span<const FederatedClient> clients,
                       const Dataset &agg_data, const FederationConfig &cfg,
                       const ServerOptState &state, std::size_t round) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  if (global.layout() != cfg.model.layout()) {
    throw Error(ErrorCode::kLayoutMismatch, "global model does not match the model spec");
  }

  const bool scored = cfg.dp_mode != DPMode::kNone;
  struct Participant {
    const FederatedClient *client;
    double score;
  };
  std::vector<Participant> participants;
  for (const auto &client : clients) {
    const double score = cfg.compliance_applied ? client.compliance_score : 1.0;
    if (scored && !(score >= 0.0 && score <= 1.0)) {
      throw Error(ErrorCode::kOutOfRangeScore, "client '" + client.client_id + "' score");
    }
    if (scored && cfg.compliance_applied && !eligible(score, cfg.noise_policy)) continue;
    participants.push_back({&client, score});
  }
  if (participants.empty()) {
    throw Error(ErrorCode::kNoEligibleClients, "no client passes the participation threshold");
  }
  std::sort(participants.begin(), participants.end(), [](const auto &a, const auto &b) {
    return a.client->client_id < b.client->client_id;
  });

  const bool adaptive = cfg.dp_mode == DPMode::kAdaptivePerClient;
  if (adaptive && agg_data.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "adaptive DP needs a non-empty aggregator dataset");
  }
  const bool proximal = cfg.strategy.kind == StrategyKind::kFedProx;

  std::vector<ClientUpdate> updates(participants.size());
  RoundRecord record;
  record.round = round;
  record.per_client.resize(participants.size());

  const std::size_t threads = cfg.threads > 0 ? cfg.threads : default_thread_count();
  parallel_for(participants.size(), threads, [&](std::size_t k) {
    const FederatedClient &client = *participants[k].client;
    const std::uint64_t seed = client_round_seed(cfg.master_seed, round, client.client_id);

    ParamVector local = global;
    for (std::size_t epoch = 0; epoch < cfg.local_epochs; ++epoch) {
      const std::uint64_t shuffle = derive_seed(seed, "local", epoch);
      local = proximal ? proximal_sgd_epoch(cfg.model, std::move(local), global,
                                            cfg.strategy.prox_mu, client.data, cfg.lr,
                                            cfg.batch_size, shuffle)
                       : sgd_epoch(cfg.model, std::move(local), client.data, cfg.lr,
                                   cfg.batch_size, shuffle);
    }

    ClientRoundEntry &entry = record.per_client[k];
    entry.client_id = client.client_id;
    entry.local_loss = forward_loss(cfg.model, local, client.data).loss;
    if (scored) {
      entry.score = participants[k].score;
      entry.eta = noise_multiplier(participants[k].score, cfg.noise_policy);
    }
    if (adaptive) {
      DPConfig dp{*entry.eta, cfg.clip_norm, cfg.lr, cfg.batch_size, derive_seed(seed, "dp")};
      local = dp_sgd_epoch(cfg.model, std::move(local), agg_data, dp);
    }
    updates[k] = ClientUpdate{client.client_id, std::move(local), client.data.size()};
  });

  ServerOptState next_state = state;
  if (cfg.strategy.uses_server_state() && next_state.m.layout() != global.layout()) {
    next_state = make_server_state(global, cfg.strategy.server);
  }
  ParamVector next = aggregate(cfg.strategy, global, updates, next_state);

  if (cfg.dp_mode == DPMode::kUniformPostAggregation) {
    double sigma = 0.0;
    if (cfg.uniform_sigma) {
      sigma = *cfg.uniform_sigma;
    } else {
      for (const auto &entry : record.per_client) sigma += *entry.eta;
      sigma /= static_cast<double>(record.per_client.size());
    }
    record.uniform_sigma = sigma;
    next = add_uniform_noise(std::move(next), sigma,
                             derive_seed(cfg.master_seed, static_cast<std::uint64_t>(round),
                                         "uniform-noise"));
  }

  record.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return {std::move(next), std::move(next_state), std::move(record)};
}

FederationResult run_federation(const FederationConfig &cfg,
                                std::span<const FederatedClient> clients, const Dataset &agg_data,
                                const Dataset &eval_data) {
  cfg.validate();
  if (eval_data.empty()) throw Error(ErrorCode::kEmptyDataset, "evaluation shard is empty");
  FederationResult result;
  result.final_params = initial_params(cfg);
  ServerOptState state = make_server_state(result.final_params, cfg.strategy.server);
  double best_accuracy = -1.0;
  for (std::size_t round = 1; round <= cfg.rounds; ++round) {
    RoundOutcome outcome = run_round(result.final_params, clients, agg_data, cfg, state, round);
    outcome.record.global_metrics =
        evaluate(cfg.model, outcome.global, eval_data, cfg.metric_averaging);
    if (outcome.record.global_metrics.accuracy > best_accuracy) {
      best_accuracy = outcome.record.global_metrics.accuracy;
      result.best_round = round;
    }
    result.final_params = std::move(outcome.global);
    state = std::move(outcome.state);
    result.records.push_back(std::move(outcome.record));
  }
  return result;
}

}  // namespace complyfed
