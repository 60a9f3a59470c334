#include "complyfed/experiment.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "complyfed/compliance.h"
#include "complyfed/error.h"
#include "complyfed/rng.h"
#include "io_util.h"

namespace complyfed {

using nlohmann::json;

namespace {

// Wraps one JSON object, hands out typed fields and remembers which keys
// were read so that leftovers (typos) can be reported.
class ObjectReader {
 public:
  ObjectReader(const json &object, std::string prefix) : object_(object), prefix_(std::move(prefix)) {
    if (!object_.is_object()) throw ConfigError(display(""), "expected a JSON object");
  }

  bool has(const char *key) const { return object_.contains(key); }

  template <typename T>
  void read(const char *key, T &out) {
    if (!object_.contains(key)) return;
    seen_.insert(key);
    try {
      out = object_.at(key).get<T>();
    } catch (const json::exception &) {
      throw ConfigError(path(key), "has the wrong type");
    }
  }

  void read_size(const char *key, std::size_t &out) {
    if (!object_.contains(key)) return;
    seen_.insert(key);
    const json &v = object_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      throw ConfigError(path(key), "expected a non-negative integer");
    }
    out = v.get<std::size_t>();
  }

  void read_double(const char *key, double &out) {
    if (!object_.contains(key)) return;
    seen_.insert(key);
    const json &v = object_.at(key);
    if (!v.is_number()) throw ConfigError(path(key), "expected a number");
    out = v.get<double>();
  }

  const json *child(const char *key) {
    if (!object_.contains(key)) return nullptr;
    seen_.insert(key);
    return &object_.at(key);
  }

  std::string path(std::string_view key) const {
    return prefix_.empty() ? std::string(key) : prefix_ + "." + std::string(key);
  }

  void reject_unknown() const {
    for (const auto &item : object_.items()) {
      if (!seen_.count(item.key())) throw ConfigError(path(item.key()), "unknown key");
    }
  }

 private:
  std::string display(std::string_view key) const {
    return prefix_.empty() ? std::string(key.empty() ? "<root>" : key) : path(key);
  }

  const json &object_;
  std::string prefix_;
  std::set<std::string> seen_;
};

std::string model_kind_name(ModelKind kind) { return kind == ModelKind::kMlp ? "mlp" : "logistic"; }

std::string weighting_name(Weighting w) { return w == Weighting::kUniform ? "uniform" : "examples"; }

std::string averaging_name(Averaging a) { return a == Averaging::kMacro ? "macro" : "weighted"; }

template <typename T>
std::string describe(const T &value) {
  std::ostringstream out;
  out << value;
  return out.str();
}

}  // namespace

void ExperimentConfig::validate() const {
  if (total_clients() == 0) throw ConfigError("compliant_clients", "no clients configured");
  if (total_clients() > partition_clients) {
    throw ConfigError("partition_clients", "fewer shards (" + describe(partition_clients) +
                                               ") than clients (" + describe(total_clients()) + ")");
  }
  const auto [low, high] = noncompliant_score_range;
  if (!(low >= 0.0 && low <= high && high <= 1.0)) {
    throw ConfigError("noncompliant_score_range", "need 0 <= low <= high <= 1");
  }
  if (noncompliant_clients > 0 &&
      (noncompliant_groups == 0 || noncompliant_groups > noncompliant_clients)) {
    throw ConfigError("noncompliant_groups", "must lie in [1, noncompliant_clients]");
  }
  if (!client_scores.empty() && client_scores.size() != total_clients()) {
    throw ConfigError("client_scores", "expected " + describe(total_clients()) + " scores, got " +
                                           describe(client_scores.size()));
  }
  for (double s : client_scores) {
    if (!(s >= 0.0 && s <= 1.0)) throw ConfigError("client_scores", "scores must lie in [0, 1]");
  }
  if (uniform_sigma && !(*uniform_sigma >= 0.0)) {
    throw ConfigError("uniform_sigma", "must be >= 0");
  }
  try {
    degradation.validate();
  } catch (const Error &e) {
    throw ConfigError("degradation", e.what());
  }
  if (strategies.empty()) throw ConfigError("strategies", "at least one strategy required");
  if (strategy_params.prox_mu < 0.0) throw ConfigError("strategy_params.prox_mu", "must be >= 0");
  if (!(strategy_params.server.beta1 >= 0.0 && strategy_params.server.beta1 < 1.0)) {
    throw ConfigError("strategy_params.beta1", "must lie in [0, 1)");
  }
  if (!(strategy_params.server.beta2 >= 0.0 && strategy_params.server.beta2 < 1.0)) {
    throw ConfigError("strategy_params.beta2", "must lie in [0, 1)");
  }
  if (!(strategy_params.server.tau > 0.0)) throw ConfigError("strategy_params.tau", "must be > 0");
  if (local_epochs == 0) throw ConfigError("federation.local_epochs", "must be >= 1");
  if (batch_size == 0) throw ConfigError("federation.batch_size", "must be >= 1");
  if (!(lr >= 0.0)) throw ConfigError("federation.lr", "must be >= 0");
  if (!(clip_norm > 0.0)) throw ConfigError("federation.clip_norm", "must be > 0");
  if (!(noise_policy.min_noise_multiplier > 0.0)) {
    throw ConfigError("federation.min_noise_multiplier", "must be > 0");
  }
  if (!(noise_policy.participation_threshold >= 0.0 &&
        noise_policy.participation_threshold <= 1.0)) {
    throw ConfigError("federation.participation_threshold", "must lie in [0, 1]");
  }
  if (dataset.source != "synthetic" && dataset.source != "csv") {
    throw ConfigError("dataset.source", "expected 'synthetic' or 'csv'");
  }
  if (dataset.source == "csv" && dataset.path.empty()) {
    throw ConfigError("dataset.path", "required for csv datasets");
  }
  if (dataset.source == "synthetic") {
    if (dataset.classes < 2) throw ConfigError("dataset.classes", "must be >= 2");
    if (dataset.d == 0) throw ConfigError("dataset.d", "must be >= 1");
    if (dataset.n < partition_clients + 2) {
      throw ConfigError("dataset.n", "too few samples for the partition");
    }
    if (dataset.image_shape &&
        dataset.image_shape->height * dataset.image_shape->width != dataset.d) {
      throw ConfigError("dataset.image_shape", "height * width must equal d");
    }
  }
  if (degrade_noncompliant && noncompliant_clients > 0 && !dataset.image_shape) {
    throw ConfigError("dataset.image_shape", "degradation needs image-shaped data");
  }
  if (model_kind == ModelKind::kMlp && hidden_dim == 0) {
    throw ConfigError("model.hidden_dim", "mlp requires hidden_dim > 0");
  }
  if (seeds.empty()) throw ConfigError("seeds", "at least one seed required");
}

std::vector<std::string> preset_names() {
  return {"exp1", "exp2", "exp3", "exp4", "exp5", "exp6", "dataquality"};
}

ExperimentConfig preset(std::string_view name) {
  ExperimentConfig cfg;
  cfg.name = std::string(name);
  cfg.preset = std::string(name);
  // Every client listed for a preset takes part, including the 0.1-0.6 ones.
  cfg.noise_policy.participation_threshold = 0.0;
  cfg.strategies = {StrategyKind::kFedAvg, StrategyKind::kFedMedian, StrategyKind::kFedYogi,
                    StrategyKind::kFedProx, StrategyKind::kFedAdam};
  if (name == "exp1") {
    cfg.compliant_clients = 4;
    cfg.noncompliant_clients = 12;
    cfg.noncompliant_groups = 2;
  } else if (name == "exp2") {
    cfg.compliant_clients = 10;
    cfg.noncompliant_clients = 6;
  } else if (name == "exp3") {
    cfg.compliant_clients = 16;
  } else if (name == "exp4") {
    cfg.compliant_clients = 4;
    cfg.compliance_applied = false;
  } else if (name == "exp5") {
    cfg.compliant_clients = 16;
    cfg.compliance_applied = false;
    cfg.dp_mode = DPMode::kNone;
  } else if (name == "exp6") {
    cfg.compliant_clients = 16;
    cfg.dp_mode = DPMode::kUniformPostAggregation;
  } else if (name == "dataquality") {
    cfg.compliant_clients = 4;
    cfg.noncompliant_clients = 12;
    cfg.noncompliant_score_range = {0.3, 0.3};
    cfg.degrade_noncompliant = true;
  } else {
    throw ConfigError("preset", "unknown preset '" + std::string(name) + "'");
  }
  return cfg;
}

namespace {

void check_against_preset(const ExperimentConfig &cfg) {
  if (!cfg.preset) return;
  const ExperimentConfig ref = preset(*cfg.preset);
  const std::string tag = "conflicts with preset " + *cfg.preset;
  if (cfg.compliant_clients != ref.compliant_clients) throw ConfigError("compliant_clients", tag);
  if (cfg.noncompliant_clients != ref.noncompliant_clients) {
    throw ConfigError("noncompliant_clients", tag);
  }
  if (cfg.noncompliant_groups != ref.noncompliant_groups && cfg.noncompliant_clients > 0) {
    throw ConfigError("noncompliant_groups", tag);
  }
  if (cfg.compliance_applied != ref.compliance_applied) {
    throw ConfigError("compliance_applied", tag);
  }
  if (cfg.dp_mode != ref.dp_mode) throw ConfigError("dp_mode", tag);
}

void apply_document(ExperimentConfig &cfg, const json &doc) {
  ObjectReader top(doc, "");
  top.read("name", cfg.name);
  if (const json *p = top.child("preset")) {
    if (p->is_null()) {
      cfg.preset.reset();
    } else if (p->is_string()) {
      cfg.preset = p->get<std::string>();
    } else {
      throw ConfigError("preset", "expected a string");
    }
  }
  top.read_size("compliant_clients", cfg.compliant_clients);
  top.read_size("noncompliant_clients", cfg.noncompliant_clients);
  top.read_size("noncompliant_groups", cfg.noncompliant_groups);
  if (const json *range = top.child("noncompliant_score_range")) {
    if (!range->is_array() || range->size() != 2 || !(*range)[0].is_number() ||
        !(*range)[1].is_number()) {
      throw ConfigError("noncompliant_score_range", "expected [low, high]");
    }
    cfg.noncompliant_score_range = {(*range)[0].get<double>(), (*range)[1].get<double>()};
  }
  top.read("compliance_applied", cfg.compliance_applied);
  if (const json *mode = top.child("dp_mode")) {
    const auto parsed = mode->is_string() ? parse_dp_mode(mode->get<std::string>()) : std::nullopt;
    if (!parsed) {
      throw ConfigError("dp_mode", "expected adaptive_per_client, uniform_post_aggregation or none");
    }
    cfg.dp_mode = *parsed;
  }
  if (const json *sigma = top.child("uniform_sigma")) {
    if (sigma->is_null()) {
      cfg.uniform_sigma.reset();
    } else if (sigma->is_number()) {
      cfg.uniform_sigma = sigma->get<double>();
    } else {
      throw ConfigError("uniform_sigma", "expected a number or null");
    }
  }
  top.read("degrade_noncompliant", cfg.degrade_noncompliant);
  if (const json *deg = top.child("degradation")) {
    ObjectReader r(*deg, "degradation");
    r.read_double("crop_low", cfg.degradation.crop_low);
    r.read_double("crop_high", cfg.degradation.crop_high);
    r.read_double("gaussian_sigma", cfg.degradation.gaussian_sigma);
    r.read_double("contrast_factor", cfg.degradation.contrast_factor);
    r.reject_unknown();
  }
  auto read_path = [&](const char *key, std::optional<std::filesystem::path> &out) {
    if (const json *p = top.child(key)) {
      if (p->is_null()) {
        out.reset();
      } else if (p->is_string()) {
        out = std::filesystem::path(p->get<std::string>());
      } else {
        throw ConfigError(key, "expected a path string");
      }
    }
  };
  read_path("profile_file", cfg.profile_file);
  read_path("catalog_file", cfg.catalog_file);
  top.read("client_scores", cfg.client_scores);

  auto parse_strategies = [](const json &value, const char *key) {
    std::vector<StrategyKind> out;
    const json list = value.is_array() ? value : json::array({value});
    for (const auto &item : list) {
      const auto kind = item.is_string() ? parse_strategy(item.get<std::string>()) : std::nullopt;
      if (!kind) throw ConfigError(key, "unknown strategy " + item.dump());
      out.push_back(*kind);
    }
    return out;
  };
  if (const json *s = top.child("strategies")) cfg.strategies = parse_strategies(*s, "strategies");
  if (const json *s = top.child("strategy")) cfg.strategies = parse_strategies(*s, "strategy");
  if (const json *sp = top.child("strategy_params")) {
    ObjectReader r(*sp, "strategy_params");
    r.read_double("prox_mu", cfg.strategy_params.prox_mu);
    r.read_double("beta1", cfg.strategy_params.server.beta1);
    r.read_double("beta2", cfg.strategy_params.server.beta2);
    r.read_double("tau", cfg.strategy_params.server.tau);
    r.read_double("server_lr", cfg.strategy_params.server.server_lr);
    if (const json *w = r.child("weighting")) {
      const std::string name = w->is_string() ? w->get<std::string>() : "";
      if (name == "examples") {
        cfg.strategy_params.weighting = Weighting::kExamples;
      } else if (name == "uniform") {
        cfg.strategy_params.weighting = Weighting::kUniform;
      } else {
        throw ConfigError("strategy_params.weighting", "expected 'examples' or 'uniform'");
      }
    }
    r.reject_unknown();
  }
  if (const json *fed = top.child("federation")) {
    ObjectReader r(*fed, "federation");
    r.read_size("rounds", cfg.rounds);
    r.read_size("local_epochs", cfg.local_epochs);
    r.read_double("lr", cfg.lr);
    r.read_size("batch_size", cfg.batch_size);
    r.read_double("clip_norm", cfg.clip_norm);
    r.read_double("min_noise_multiplier", cfg.noise_policy.min_noise_multiplier);
    r.read_double("participation_threshold", cfg.noise_policy.participation_threshold);
    if (const json *a = r.child("metric_averaging")) {
      const std::string name = a->is_string() ? a->get<std::string>() : "";
      if (name == "weighted") {
        cfg.metric_averaging = Averaging::kWeighted;
      } else if (name == "macro") {
        cfg.metric_averaging = Averaging::kMacro;
      } else {
        throw ConfigError("federation.metric_averaging", "expected 'weighted' or 'macro'");
      }
    }
    r.reject_unknown();
  }
  if (const json *ds = top.child("dataset")) {
    ObjectReader r(*ds, "dataset");
    r.read("source", cfg.dataset.source);
    r.read_size("n", cfg.dataset.n);
    r.read_size("d", cfg.dataset.d);
    r.read("classes", cfg.dataset.classes);
    r.read_double("class_separation", cfg.dataset.class_separation);
    if (const json *shape = r.child("image_shape")) {
      if (shape->is_null()) {
        cfg.dataset.image_shape.reset();
      } else if (shape->is_array() && shape->size() == 2 && (*shape)[0].is_number_unsigned() &&
                 (*shape)[1].is_number_unsigned()) {
        cfg.dataset.image_shape = ImageShape{(*shape)[0].get<std::size_t>(),
                                             (*shape)[1].get<std::size_t>()};
      } else {
        throw ConfigError("dataset.image_shape", "expected [height, width] or null");
      }
    }
    if (const json *p = r.child("path")) {
      if (!p->is_string()) throw ConfigError("dataset.path", "expected a path string");
      cfg.dataset.path = p->get<std::string>();
    }
    r.reject_unknown();
  }
  top.read_size("partition_clients", cfg.partition_clients);
  if (const json *model = top.child("model")) {
    ObjectReader r(*model, "model");
    if (const json *k = r.child("kind")) {
      const std::string name = k->is_string() ? k->get<std::string>() : "";
      if (name == "mlp") {
        cfg.model_kind = ModelKind::kMlp;
      } else if (name == "logistic") {
        cfg.model_kind = ModelKind::kLogistic;
        cfg.hidden_dim = 0;
      } else {
        throw ConfigError("model.kind", "expected 'mlp' or 'logistic'");
      }
    }
    r.read_size("hidden_dim", cfg.hidden_dim);
    r.reject_unknown();
  }
  if (const json *seeds = top.child("seeds")) {
    if (!seeds->is_array()) throw ConfigError("seeds", "expected an array of integers");
    cfg.seeds.clear();
    for (const auto &s : *seeds) {
      if (!s.is_number_unsigned()) throw ConfigError("seeds", "expected non-negative integers");
      cfg.seeds.push_back(s.get<std::uint64_t>());
    }
  }
  top.reject_unknown();
}

json parse_config_text(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error &e) {
    throw ConfigError("<document>", std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace

ExperimentConfig apply_config_json(ExperimentConfig base, std::string_view json_text) {
  apply_document(base, parse_config_text(json_text));
  check_against_preset(base);
  base.validate();
  return base;
}

ExperimentConfig load_experiment_config(const std::filesystem::path &path,
                                        std::optional<std::string> preset_override) {
  std::string text;
  try {
    text = internal::read_file(path);
  } catch (const Error &e) {
    throw ConfigError("<file>", e.what());
  }
  const json doc = parse_config_text(text);
  std::optional<std::string> preset_name = preset_override;
  if (!preset_name && doc.is_object() && doc.contains("preset") && doc["preset"].is_string()) {
    preset_name = doc["preset"].get<std::string>();
  }
  ExperimentConfig cfg = preset_name ? preset(*preset_name) : ExperimentConfig{};
  apply_document(cfg, doc);
  if (preset_override) cfg.preset = preset_override;

  const auto base_dir = path.parent_path();
  auto resolve = [&](std::filesystem::path &p) {
    if (!p.empty() && p.is_relative()) p = std::filesystem::absolute(base_dir / p);
  };
  if (cfg.profile_file) resolve(*cfg.profile_file);
  if (cfg.catalog_file) resolve(*cfg.catalog_file);
  resolve(cfg.dataset.path);

  check_against_preset(cfg);
  cfg.validate();
  return cfg;
}

std::string config_to_json(const ExperimentConfig &cfg) {
  json doc;
  doc["name"] = cfg.name;
  doc["preset"] = cfg.preset ? json(*cfg.preset) : json(nullptr);
  doc["compliant_clients"] = cfg.compliant_clients;
  doc["noncompliant_clients"] = cfg.noncompliant_clients;
  doc["noncompliant_groups"] = cfg.noncompliant_groups;
  doc["noncompliant_score_range"] = {cfg.noncompliant_score_range.first,
                                     cfg.noncompliant_score_range.second};
  doc["compliance_applied"] = cfg.compliance_applied;
  doc["dp_mode"] = std::string(dp_mode_name(cfg.dp_mode));
  doc["uniform_sigma"] = cfg.uniform_sigma ? json(*cfg.uniform_sigma) : json(nullptr);
  doc["degrade_noncompliant"] = cfg.degrade_noncompliant;
  doc["degradation"] = {{"crop_low", cfg.degradation.crop_low},
                        {"crop_high", cfg.degradation.crop_high},
                        {"gaussian_sigma", cfg.degradation.gaussian_sigma},
                        {"contrast_factor", cfg.degradation.contrast_factor}};
  doc["profile_file"] = cfg.profile_file ? json(cfg.profile_file->string()) : json(nullptr);
  doc["catalog_file"] = cfg.catalog_file ? json(cfg.catalog_file->string()) : json(nullptr);
  doc["client_scores"] = cfg.client_scores;
  json strategies = json::array();
  for (auto s : cfg.strategies) strategies.push_back(std::string(strategy_name(s)));
  doc["strategies"] = strategies;
  doc["strategy_params"] = {{"prox_mu", cfg.strategy_params.prox_mu},
                            {"beta1", cfg.strategy_params.server.beta1},
                            {"beta2", cfg.strategy_params.server.beta2},
                            {"tau", cfg.strategy_params.server.tau},
                            {"server_lr", cfg.strategy_params.server.server_lr},
                            {"weighting", weighting_name(cfg.strategy_params.weighting)}};
  doc["federation"] = {{"rounds", cfg.rounds},
                       {"local_epochs", cfg.local_epochs},
                       {"lr", cfg.lr},
                       {"batch_size", cfg.batch_size},
                       {"clip_norm", cfg.clip_norm},
                       {"min_noise_multiplier", cfg.noise_policy.min_noise_multiplier},
                       {"participation_threshold", cfg.noise_policy.participation_threshold},
                       {"metric_averaging", averaging_name(cfg.metric_averaging)}};
  json dataset = {{"source", cfg.dataset.source},
                  {"n", cfg.dataset.n},
                  {"d", cfg.dataset.d},
                  {"classes", cfg.dataset.classes},
                  {"class_separation", cfg.dataset.class_separation},
                  {"path", cfg.dataset.path.string()}};
  dataset["image_shape"] = cfg.dataset.image_shape
                               ? json::array({cfg.dataset.image_shape->height,
                                              cfg.dataset.image_shape->width})
                               : json(nullptr);
  doc["dataset"] = dataset;
  doc["partition_clients"] = cfg.partition_clients;
  doc["model"] = {{"kind", model_kind_name(cfg.model_kind)}, {"hidden_dim", cfg.hidden_dim}};
  doc["seeds"] = cfg.seeds;
  return doc.dump(2) + "\n";
}

std::vector<ClientPlan> plan_clients(const ExperimentConfig &exp, std::uint64_t seed) {
  std::vector<ClientPlan> plans;
  const std::size_t total = exp.total_clients();
  char id[32];
  for (std::size_t i = 0; i < total; ++i) {
    std::snprintf(id, sizeof(id), "client_%02zu", i);
    plans.push_back({id, i, 1.0, false});
  }
  const std::size_t nc = exp.noncompliant_clients;
  if (nc > 0) {
    const std::size_t groups = exp.noncompliant_groups;
    const auto [low, high] = exp.noncompliant_score_range;
    std::size_t next = exp.compliant_clients;
    for (std::size_t g = 0; g < groups; ++g) {
      const std::size_t size = nc / groups + (g < nc % groups ? 1 : 0);
      Rng rng(derive_seed(seed, "scores", static_cast<std::uint64_t>(g)));
      for (std::size_t k = 0; k < size; ++k, ++next) {
        plans[next].score = rng.uniform(low, high);
        plans[next].degraded = exp.degrade_noncompliant;
      }
    }
  }
  if (exp.profile_file) {
    ProfileSet profiles;
    try {
      const FactorCatalog catalog =
          exp.catalog_file ? load_catalog(*exp.catalog_file) : default_catalog();
      profiles = load_profiles(*exp.profile_file, catalog);
    } catch (const Error &e) {
      throw ConfigError("profile_file", e.what());
    }
    if (profiles.clients.size() != total) {
      throw ConfigError("profile_file", "holds " + describe(profiles.clients.size()) +
                                            " clients but the experiment has " + describe(total));
    }
    for (std::size_t i = 0; i < total; ++i) {
      plans[i].client_id = profiles.clients[i].client_id;
      plans[i].score = profiles.clients[i].score;
    }
  }
  if (!exp.client_scores.empty()) {
    for (std::size_t i = 0; i < total; ++i) plans[i].score = exp.client_scores[i];
  }
  return plans;
}

Dataset build_dataset(const ExperimentConfig &exp, std::uint64_t seed) {
  if (exp.dataset.source == "csv") return load_csv(exp.dataset.path, exp.dataset.image_shape);
  return synth_classification(exp.dataset.n, exp.dataset.d, exp.dataset.classes,
                              exp.dataset.class_separation, derive_seed(seed, "dataset"),
                              exp.dataset.image_shape);
}

FederationConfig federation_config(const ExperimentConfig &exp, StrategyKind strategy,
                                   std::uint64_t seed) {
  FederationConfig cfg;
  cfg.rounds = exp.rounds;
  cfg.local_epochs = exp.local_epochs;
  cfg.lr = exp.lr;
  cfg.batch_size = exp.batch_size;
  cfg.strategy = exp.strategy_params;
  cfg.strategy.kind = strategy;
  cfg.dp_mode = exp.dp_mode;
  cfg.noise_policy = exp.noise_policy;
  cfg.clip_norm = exp.clip_norm;
  cfg.compliance_applied = exp.compliance_applied;
  cfg.uniform_sigma = exp.uniform_sigma;
  cfg.metric_averaging = exp.metric_averaging;
  cfg.master_seed = seed;
  return cfg;
}

FederationResult run_experiment(const FederationConfig &cfg, const ExperimentConfig &exp,
                                const PartitionedData &data, std::uint64_t seed) {
  if (data.client_shards.size() != exp.partition_clients) {
    throw Error(ErrorCode::kConfigMismatch,
                "partition has " + describe(data.client_shards.size()) +
                    " client shards, experiment expects " + describe(exp.partition_clients));
  }
  if (exp.total_clients() > data.client_shards.size()) {
    throw Error(ErrorCode::kConfigMismatch, "more clients than client shards");
  }
  FederationConfig run_cfg = cfg;
  const int classes = std::max({data.eval_shard.num_classes(), data.aggregator_shard.num_classes(),
                                exp.dataset.source == "synthetic" ? exp.dataset.classes : 2});
  run_cfg.model = exp.model_kind == ModelKind::kMlp
                      ? ModelSpec::mlp(data.eval_shard.dim(), exp.hidden_dim, classes)
                      : ModelSpec::logistic(data.eval_shard.dim(), classes);

  std::vector<FederatedClient> clients;
  for (const auto &plan : plan_clients(exp, seed)) {
    FederatedClient client{plan.client_id, data.client_shards[plan.shard], plan.score};
    if (plan.degraded) {
      DegradationConfig deg = exp.degradation;
      deg.seed = derive_seed(seed, "degrade", plan.client_id);
      client.data = degrade(client.data, deg);
    }
    clients.push_back(std::move(client));
  }
  return run_federation(run_cfg, clients, data.aggregator_shard, data.eval_shard);
}

std::vector<RunSummary> run_all(const ExperimentConfig &exp) {
  exp.validate();
  std::vector<RunSummary> runs;
  for (std::uint64_t seed : exp.seeds) {
    const Dataset dataset = build_dataset(exp, seed);
    const PartitionedData data = partition(dataset, exp.partition_clients, seed);
    for (StrategyKind strategy : exp.strategies) {
      const FederationConfig cfg = federation_config(exp, strategy, seed);
      runs.push_back({exp.name, strategy, seed, exp.dp_mode, run_experiment(cfg, exp, data, seed)});
    }
  }
  return runs;
}

std::string rounds_csv(const std::vector<RoundRecord> &records, DPMode mode) {
  const bool scored = mode != DPMode::kNone;
  std::string out = scored ? "round,client_id,S_c,eta,local_loss,accuracy,precision,recall,f1\n"
                           : "round,client_id,local_loss,accuracy,precision,recall,f1\n";
  using internal::format_double;
  for (const auto &record : records) {
    const auto &m = record.global_metrics;
    const std::string metrics = format_double(m.accuracy) + "," + format_double(m.precision) +
                                "," + format_double(m.recall) + "," + format_double(m.f1);
    for (const auto &entry : record.per_client) {
      out += std::to_string(record.round) + "," + entry.client_id + ",";
      if (scored) {
        out += (entry.score ? format_double(*entry.score) : "") + ",";
        out += (entry.eta ? format_double(*entry.eta) : "") + ",";
      }
      out += format_double(entry.local_loss) + "," + metrics + "\n";
    }
  }
  return out;
}

namespace {

json metrics_json(const MetricsReport &m) {
  return {{"accuracy", m.accuracy},
          {"precision", m.precision},
          {"recall", m.recall},
          {"f1", m.f1},
          {"confusion", m.confusion}};
}

std::string run_stem(const RunSummary &run) {
  return std::string(strategy_name(run.strategy)) + "_seed" + std::to_string(run.seed);
}

}  // namespace

std::string summary_json(const RunSummary &run) {
  json doc;
  doc["experiment"] = run.experiment;
  doc["strategy"] = std::string(strategy_name(run.strategy));
  doc["seed"] = run.seed;
  doc["dp_mode"] = std::string(dp_mode_name(run.dp_mode));
  const auto &records = run.result.records;
  doc["rounds"] = records.size();
  if (!records.empty()) {
    doc["final"] = metrics_json(records.back().global_metrics);
    const auto &best = records[*run.result.best_round - 1];
    doc["best"] = {{"round", best.round}, {"accuracy", best.global_metrics.accuracy}};
    json clients = json::array();
    for (const auto &entry : records.back().per_client) {
      json c = {{"client_id", entry.client_id}};
      if (run.dp_mode != DPMode::kNone) {
        c["S_c"] = *entry.score;
        c["eta"] = *entry.eta;
      }
      clients.push_back(c);
    }
    doc["clients"] = clients;
    if (records.back().uniform_sigma) doc["uniform_sigma"] = *records.back().uniform_sigma;
    double wall = 0.0;
    for (const auto &r : records) wall += r.wall_time;
    doc["wall_time_seconds"] = wall;
  } else {
    doc["final"] = nullptr;
  }
  return doc.dump(2) + "\n";
}

void write_run_outputs(const ExperimentConfig &exp, const std::vector<RunSummary> &runs,
                       const std::filesystem::path &output_dir) {
  std::error_code ec;
  std::filesystem::create_directories(output_dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + output_dir.string());
  internal::write_file(output_dir / "manifest.json", config_to_json(exp));
  for (const auto &run : runs) {
    const std::string stem = run_stem(run);
    internal::write_file(output_dir / ("rounds_" + stem + ".csv"),
                         rounds_csv(run.result.records, run.dp_mode));
    internal::write_file(output_dir / ("summary_" + stem + ".json"), summary_json(run));
  }
}

int run_command(const std::filesystem::path &config_path, const std::filesystem::path &output_dir,
                std::optional<std::uint64_t> seed_override,
                std::optional<std::string> preset_override, std::ostream &err) {
  ExperimentConfig cfg;
  try {
    if (config_path.empty()) {
      if (!preset_override) throw ConfigError("<file>", "no config file and no preset given");
      cfg = preset(*preset_override);
    } else {
      cfg = load_experiment_config(config_path, preset_override);
    }
    if (seed_override) cfg.seeds = {*seed_override};
    cfg.validate();
    plan_clients(cfg, cfg.seeds.front());  // resolves profile files up front
  } catch (const ConfigError &e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  }
  try {
    const auto runs = run_all(cfg);
    write_run_outputs(cfg, runs, output_dir);
  } catch (const ConfigError &e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    err << "runtime error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

std::map<std::string, std::map<std::uint64_t, double>> load_run_accuracies(
    const std::filesystem::path &dir) {
  std::map<std::string, std::map<std::uint64_t, double>> out;
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw Error(ErrorCode::kMissingRun, dir.string() + " is not a directory");
  }
  for (const auto &entry : std::filesystem::directory_iterator(dir)) {
    const std::string file = entry.path().filename().string();
    if (file.rfind("summary_", 0) != 0 || entry.path().extension() != ".json") continue;
    json doc;
    try {
      doc = json::parse(internal::read_file(entry.path()));
      if (doc.at("final").is_null()) continue;
      out[doc.at("strategy").get<std::string>()][doc.at("seed").get<std::uint64_t>()] =
          doc.at("final").at("accuracy").get<double>();
    } catch (const json::exception &e) {
      throw Error(ErrorCode::kParseError, entry.path().string() + ": " + e.what());
    }
  }
  if (out.empty()) throw Error(ErrorCode::kMissingRun, dir.string() + " holds no run summaries");
  return out;
}

namespace {

std::pair<double, double> mean_std(const std::vector<double> &xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

std::vector<double> values_of(const std::map<std::uint64_t, double> &m) {
  std::vector<double> out;
  for (const auto &[seed, v] : m) out.push_back(v);
  return out;
}

}  // namespace

std::vector<Comparison> compare_runs(const std::vector<std::filesystem::path> &dirs) {
  if (dirs.size() < 2) throw Error(ErrorCode::kMissingRun, "compare needs at least two runs");
  const auto base = load_run_accuracies(dirs.front());
  std::vector<Comparison> out;
  for (std::size_t k = 1; k < dirs.size(); ++k) {
    const auto other = load_run_accuracies(dirs[k]);
    Comparison cmp{dirs.front(), dirs[k], {}};
    for (const auto &[strategy, seeds_a] : base) {
      auto it = other.find(strategy);
      if (it == other.end()) continue;
      const auto &seeds_b = it->second;
      ComparisonRow row;
      row.strategy = strategy;
      row.runs_a = seeds_a.size();
      row.runs_b = seeds_b.size();
      std::tie(row.mean_a, row.std_a) = mean_std(values_of(seeds_a));
      std::tie(row.mean_b, row.std_b) = mean_std(values_of(seeds_b));
      std::vector<double> paired;
      for (const auto &[seed, acc] : seeds_a) {
        auto jt = seeds_b.find(seed);
        if (jt != seeds_b.end()) paired.push_back(acc - jt->second);
      }
      if (paired.empty()) {
        row.delta_mean = row.mean_a - row.mean_b;
        row.delta_std = 0.0;
      } else {
        std::tie(row.delta_mean, row.delta_std) = mean_std(paired);
      }
      cmp.rows.push_back(row);
    }
    if (cmp.rows.empty()) {
      throw Error(ErrorCode::kMissingRun,
                  dirs[k].string() + " shares no strategy with " + dirs.front().string());
    }
    out.push_back(std::move(cmp));
  }
  return out;
}

std::string comparison_csv(const std::vector<Comparison> &comparisons) {
  using internal::format_double;
  std::string out =
      "run_a,run_b,strategy,runs_a,runs_b,mean_a,std_a,mean_b,std_b,delta_mean,delta_std\n";
  for (const auto &cmp : comparisons) {
    for (const auto &r : cmp.rows) {
      out += cmp.run_a.string() + "," + cmp.run_b.string() + "," + r.strategy + "," +
             std::to_string(r.runs_a) + "," + std::to_string(r.runs_b) + "," +
             format_double(r.mean_a) + "," + format_double(r.std_a) + "," +
             format_double(r.mean_b) + "," + format_double(r.std_b) + "," +
             format_double(r.delta_mean) + "," + format_double(r.delta_std) + "\n";
    }
  }
  return out;
}

std::string comparison_text(const std::vector<Comparison> &comparisons) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  for (const auto &cmp : comparisons) {
    out << "A = " << cmp.run_a.string() << "\nB = " << cmp.run_b.string() << "\n";
    out << std::left << std::setw(11) << "strategy" << std::right << std::setw(18) << "acc A"
        << std::setw(18) << "acc B" << std::setw(20) << "delta (A - B)" << "\n";
    for (const auto &r : cmp.rows) {
      std::ostringstream a, b, d;
      a << std::fixed << std::setprecision(4) << r.mean_a << " +/- " << r.std_a;
      b << std::fixed << std::setprecision(4) << r.mean_b << " +/- " << r.std_b;
      d << std::showpos << std::fixed << std::setprecision(4) << r.delta_mean << std::noshowpos
        << " +/- " << r.delta_std;
      out << std::left << std::setw(11) << r.strategy << std::right << std::setw(18) << a.str()
          << std::setw(18) << b.str() << std::setw(20) << d.str() << "\n";
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace complyfed
