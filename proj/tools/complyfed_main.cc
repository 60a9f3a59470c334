// complyfed: run compliance-aware federated experiments, compare runs and
// score compliance profiles.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "complyfed/compliance.h"
#include "complyfed/error.h"
#include "complyfed/experiment.h"

namespace {

int score_command(const std::string &profile_path, const std::string &catalog_path,
                  double min_noise, double threshold) {
  using namespace complyfed;
  try {
    const FactorCatalog catalog =
        catalog_path.empty() ? default_catalog() : load_catalog(catalog_path);
    NoisePolicy policy{min_noise, threshold};
    policy.validate();
    const ProfileSet profiles = load_profiles(profile_path, catalog);
    std::printf("client_id\tS_c\teta\teligible\n");
    for (const auto &client : profiles.clients) {
      std::printf("%s\t%.17g\t%.17g\t%s\n", client.client_id.c_str(), client.score,
                  noise_multiplier(client.score, policy),
                  eligible(client, policy) ? "yes" : "no");
    }
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::kIoError ? 3 : 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Compliance-aware adaptive differential privacy for federated learning"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> preset;
  auto *run = app.add_subcommand("run", "Run an experiment config or preset");
  run->add_option("config", config_path, "Experiment config (JSON)");
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--seed", seed, "Run a single seed instead of the config's list");
  run->add_option("--preset", preset, "Preset: exp1..exp6 or dataquality");

  std::vector<std::string> compare_dirs;
  std::string compare_csv;
  auto *compare = app.add_subcommand("compare", "Per-strategy accuracy deltas between runs");
  compare->add_option("runs", compare_dirs, "Run output directories (first is the baseline A)")
      ->required()
      ->expected(2, -1);
  compare->add_option("--csv", compare_csv, "Also write the table as CSV to this path");

  std::string profile_path;
  std::string catalog_path;
  double min_noise = 1e-10;
  double threshold = 0.5;
  auto *score = app.add_subcommand("score", "Print S_c and eta for every client in a profile file");
  score->add_option("profile", profile_path, "Profile file (JSON)")->required();
  score->add_option("--catalog", catalog_path, "Catalog file; defaults to the built-in catalog");
  score->add_option("--min-noise", min_noise, "Minimum noise multiplier");
  score->add_option("--threshold", threshold, "Participation threshold");

  auto *catalog = app.add_subcommand("catalog", "Print the built-in compliance factor catalog");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (run->parsed()) {
    return complyfed::run_command(config_path, out_dir, seed, preset, std::cerr);
  }
  if (compare->parsed()) {
    try {
      std::vector<std::filesystem::path> dirs(compare_dirs.begin(), compare_dirs.end());
      const auto table = complyfed::compare_runs(dirs);
      std::cout << complyfed::comparison_text(table);
      if (!compare_csv.empty()) {
        std::ofstream csv(compare_csv, std::ios::binary);
        csv << complyfed::comparison_csv(table);
        if (!csv) {
          std::cerr << "error: cannot write " << compare_csv << "\n";
          return 3;
        }
      }
    } catch (const complyfed::Error &e) {
      std::cerr << "error: " << e.what() << "\n";
      return e.code() == complyfed::ErrorCode::kMissingRun ? 2 : 3;
    }
    return 0;
  }
  if (catalog->parsed()) {
    std::cout << complyfed::catalog_to_json(complyfed::default_catalog());
    return 0;
  }
  return score_command(profile_path, catalog_path, min_noise, threshold);
}
