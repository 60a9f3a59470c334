#include "complyfed/aggregation.h"

#include <algorithm>
#include <cmath>

#include "complyfed/error.h"

namespace complyfed {

namespace {

// Updates in sorted client_id order; rejects empty sets, duplicate ids and
// mismatched layouts.
std::vector<const ClientUpdate *> ordered(const std::vector<ClientUpdate> &updates) {
  if (updates.empty()) throw Error(ErrorCode::kEmptyUpdateSet, "no client updates to aggregate");
  std::vector<const ClientUpdate *> out;
  out.reserve(updates.size());
  for (const auto &u : updates) out.push_back(&u);
  std::sort(out.begin(), out.end(),
            [](const ClientUpdate *a, const ClientUpdate *b) { return a->client_id < b->client_id; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i]->client_id == out[i - 1]->client_id) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate client '" + out[i]->client_id + "'");
    }
    out[i]->params.check_layout(out[0]->params);
  }
  return out;
}

}  // namespace

ParamVector fed_avg(const std::vector<ClientUpdate> &updates, Weighting weighting) {
  const auto sorted = ordered(updates);
  ParamVector mean = sorted.front()->params;
  double total = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    const ClientUpdate &u = *sorted[k];
    if (weighting == Weighting::kExamples && u.num_examples == 0) {
      throw Error(ErrorCode::kInvalidArgument, "client '" + u.client_id + "' has no examples");
    }
    const double n = weighting == Weighting::kExamples ? static_cast<double>(u.num_examples) : 1.0;
    total += n;
    if (k == 0) continue;
    const double share = n / total;
    auto acc = mean.values();
    auto theta = u.params.values();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += share * (theta[i] - acc[i]);
  }
  return mean;
}

ParamVector fed_median(const std::vector<ClientUpdate> &updates) {
  const auto sorted = ordered(updates);
  ParamVector out(sorted.front()->params.layout());
  const std::size_t count = sorted.size();
  std::vector<double> column(count);
  auto result = out.values();
  for (std::size_t i = 0; i < result.size(); ++i) {
    for (std::size_t k = 0; k < count; ++k) column[k] = sorted[k]->params[i];
    std::sort(column.begin(), column.end());
    result[i] = count % 2 == 1 ? column[count / 2]
                               : 0.5 * (column[count / 2 - 1] + column[count / 2]);
  }
  return out;
}

ParamVector fed_prox_aggregate(const std::vector<ClientUpdate> &updates, Weighting weighting) {
  return fed_avg(updates, weighting);
}

ServerOptState make_server_state(const ParamVector &global, const ServerOptHyper &hyper) {
  ServerOptState state{ParamVector(global.layout()), ParamVector(global.layout()), hyper};
  state.v.fill(hyper.tau * hyper.tau);
  return state;
}

ServerStepResult fed_opt_step(ServerOptState state, const ParamVector &global,
                              const std::vector<ClientUpdate> &updates, ServerOptVariant variant,
                              Weighting weighting) {
  global.check_layout(state.m);
  global.check_layout(state.v);
  ParamVector delta = fed_avg(updates, weighting);
  delta.check_layout(global);
  delta -= global;

  const auto &h = state.hyper;
  ParamVector next = global;
  auto m = state.m.values();
  auto v = state.v.values();
  auto d = delta.values();
  auto g = next.values();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double d2 = d[i] * d[i];
    m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * d[i];
    if (variant == ServerOptVariant::kAdam) {
      v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * d2;
    } else {
      const double diff = v[i] - d2;
      const double sign = (diff > 0.0) - (diff < 0.0);
      v[i] = v[i] - (1.0 - h.beta2) * d2 * sign;
    }
    g[i] += h.server_lr * m[i] / (std::sqrt(v[i]) + h.tau);
  }
  return {std::move(next), std::move(state)};
}

std::string_view strategy_name(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kFedAvg: return "fedavg";
    case StrategyKind::kFedMedian: return "fedmedian";
    case StrategyKind::kFedProx: return "fedprox";
    case StrategyKind::kFedYogi: return "fedyogi";
    case StrategyKind::kFedAdam: return "fedadam";
  }
  return "unknown";
}

std::optional<StrategyKind> parse_strategy(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (auto kind : {StrategyKind::kFedAvg, StrategyKind::kFedMedian, StrategyKind::kFedProx,
                    StrategyKind::kFedYogi, StrategyKind::kFedAdam}) {
    if (strategy_name(kind) == lower) return kind;
  }
  return std::nullopt;
}

ParamVector aggregate(const AggregationStrategy &strategy, const ParamVector &global,
                      const std::vector<ClientUpdate> &updates, ServerOptState &state) {
  switch (strategy.kind) {
    case StrategyKind::kFedAvg: return fed_avg(updates, strategy.weighting);
    case StrategyKind::kFedProx: return fed_prox_aggregate(updates, strategy.weighting);
    case StrategyKind::kFedMedian: return fed_median(updates);
    case StrategyKind::kFedYogi:
    case StrategyKind::kFedAdam: {
      const auto variant = strategy.kind == StrategyKind::kFedAdam ? ServerOptVariant::kAdam
                                                                   : ServerOptVariant::kYogi;
      auto result = fed_opt_step(state, global, updates, variant, strategy.weighting);
      state = std::move(result.state);
      return std::move(result.global);
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown strategy");
}

}  // namespace complyfed
