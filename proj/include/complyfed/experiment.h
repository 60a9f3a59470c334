#ifndef COMPLYFED_EXPERIMENT_H_
#define COMPLYFED_EXPERIMENT_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "complyfed/aggregation.h"
#include "complyfed/dataset.h"
#include "complyfed/federation.h"
#include "complyfed/model.h"

namespace complyfed {

// Invalid experiment configuration. key() names the offending config key
// (dotted path for nested keys).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string &message)
      : std::runtime_error("config key '" + key + "': " + message), key_(std::move(key)) {}
  const std::string &key() const noexcept { return key_; }

 private:
  std::string key_;
};

struct DatasetConfig {
  std::string source = "synthetic";  // synthetic | csv
  std::size_t n = 1800;
  std::size_t d = 16;
  int classes = 2;
  double class_separation = 2.0;
  std::optional<ImageShape> image_shape = ImageShape{4, 4};
  std::filesystem::path path;  // csv only
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::optional<std::string> preset;

  // Client population. Compliant clients come first and score 1.0; the
  // non-compliant ones are split into noncompliant_groups groups, each with
  // its own uniform draw over noncompliant_score_range.
  std::size_t compliant_clients = 16;
  std::size_t noncompliant_clients = 0;
  std::size_t noncompliant_groups = 1;
  std::pair<double, double> noncompliant_score_range{0.1, 0.6};
  bool compliance_applied = true;
  DPMode dp_mode = DPMode::kAdaptivePerClient;
  std::optional<double> uniform_sigma;
  bool degrade_noncompliant = false;
  DegradationConfig degradation;

  // Optional score sources. Inline scores win over a profile file; both are
  // matched to clients in order.
  std::optional<std::filesystem::path> profile_file;
  std::optional<std::filesystem::path> catalog_file;
  std::vector<double> client_scores;

  std::vector<StrategyKind> strategies{StrategyKind::kFedAvg};
  AggregationStrategy strategy_params;

  // Federation settings shared by every (strategy, seed) run.
  std::size_t rounds = 50;
  std::size_t local_epochs = 3;
  double lr = 0.001;
  std::size_t batch_size = 32;
  double clip_norm = 1.0;
  NoisePolicy noise_policy;
  Averaging metric_averaging = Averaging::kWeighted;

  DatasetConfig dataset;
  std::size_t partition_clients = 16;
  ModelKind model_kind = ModelKind::kMlp;
  std::size_t hidden_dim = 16;

  std::vector<std::uint64_t> seeds{0};

  std::size_t total_clients() const { return compliant_clients + noncompliant_clients; }
  void validate() const;  // throws ConfigError
};

// Built-in experiment setups: exp1 .. exp6, dataquality.
std::vector<std::string> preset_names();
ExperimentConfig preset(std::string_view name);  // throws ConfigError("preset", ...)

// Overlays the keys present in doc onto base. Unknown keys throw ConfigError.
ExperimentConfig apply_config_json(ExperimentConfig base, std::string_view json_text);

// Reads a config file. A "preset" key selects the base; relative paths are
// resolved against the file's directory.
ExperimentConfig load_experiment_config(const std::filesystem::path &path,
                                        std::optional<std::string> preset_override = std::nullopt);

// Full config document with every key explicit; loading it back yields an
// identical config.
std::string config_to_json(const ExperimentConfig &cfg);

struct ClientPlan {
  std::string client_id;
  std::size_t shard = 0;
  double score = 1.0;
  bool degraded = false;
};

// Client ids, shard indices and compliance scores for one seed.
std::vector<ClientPlan> plan_clients(const ExperimentConfig &exp, std::uint64_t seed);

Dataset build_dataset(const ExperimentConfig &exp, std::uint64_t seed);
FederationConfig federation_config(const ExperimentConfig &exp, StrategyKind strategy,
                                   std::uint64_t seed);

// Builds the federation's clients from the partition (degrading shards as
// configured) and runs every round. Throws kConfigMismatch when the
// partition does not have exp.partition_clients client shards or cannot
// host all clients.
FederationResult run_experiment(const FederationConfig &cfg, const ExperimentConfig &exp,
                                const PartitionedData &data, std::uint64_t seed);

struct RunSummary {
  std::string experiment;
  StrategyKind strategy = StrategyKind::kFedAvg;
  std::uint64_t seed = 0;
  DPMode dp_mode = DPMode::kAdaptivePerClient;
  FederationResult result;
};

// Runs every (strategy, seed) pair of the config in memory.
std::vector<RunSummary> run_all(const ExperimentConfig &exp);

// Per-round CSV: round,client_id,S_c,eta,local_loss,accuracy,precision,recall,f1
// (S_c and eta are dropped when dp_mode is none).
std::string rounds_csv(const std::vector<RoundRecord> &records, DPMode mode);
std::string summary_json(const RunSummary &run);

// Writes manifest.json, one rounds CSV and one summary JSON per
// (strategy, seed) into output_dir. Returns the process exit code:
// 0 success, 2 configuration error, 3 runtime error. Messages go to err.
int run_command(const std::filesystem::path &config_path, const std::filesystem::path &output_dir,
                std::optional<std::uint64_t> seed_override,
                std::optional<std::string> preset_override, std::ostream &err);
void write_run_outputs(const ExperimentConfig &exp, const std::vector<RunSummary> &runs,
                       const std::filesystem::path &output_dir);

struct ComparisonRow {
  std::string strategy;
  std::size_t runs_a = 0;
  std::size_t runs_b = 0;
  double mean_a = 0.0;
  double std_a = 0.0;
  double mean_b = 0.0;
  double std_b = 0.0;
  double delta_mean = 0.0;  // a - b
  double delta_std = 0.0;   // over seeds present in both runs
};

struct Comparison {
  std::filesystem::path run_a;
  std::filesystem::path run_b;
  std::vector<ComparisonRow> rows;
};

// Final-round accuracy per strategy and seed, read from summary files.
std::map<std::string, std::map<std::uint64_t, double>> load_run_accuracies(
    const std::filesystem::path &dir);

// Compares each later run against the first. Throws kMissingRun when a
// directory holds no summaries or shares no strategy with the first run.
std::vector<Comparison> compare_runs(const std::vector<std::filesystem::path> &dirs);
std::string comparison_csv(const std::vector<Comparison> &comparisons);
std::string comparison_text(const std::vector<Comparison> &comparisons);

}  // namespace complyfed

#endif  // COMPLYFED_EXPERIMENT_H_
