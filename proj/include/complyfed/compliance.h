#ifndef COMPLYFED_COMPLIANCE_H_
#define COMPLYFED_COMPLIANCE_H_

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace complyfed {

struct FactorOption {
  std::string label;
  double score = 0.0;  // in [0, 1]
};

struct ComplianceFactor {
  std::string id;
  std::string name;
  double weight = 1.0;
  std::vector<FactorOption> options;

  // nullptr when no option carries that label.
  const FactorOption *find_option(std::string_view label) const;
};

// Ordered set of weighted factors a client is assessed against.
struct FactorCatalog {
  std::string version;
  std::vector<ComplianceFactor> factors;

  const ComplianceFactor *find(std::string_view id) const;

  // Throws kInvalidCatalog on duplicate ids or labels, negative weights,
  // option scores outside [0, 1] or factors without options, and
  // kZeroWeightSum when the weights add up to zero.
  void validate() const;
};

// The twelve-factor healthcare catalog, every factor weighted 1.0 with
// options scored on the 1.0 / 0.7 / 0.5 scale.
FactorCatalog default_catalog();

// factor id -> selected option label
using Selections = std::map<std::string, std::string>;

// Weighted mean of the selected option scores:
//   S_c = sum(w_i * s_i) / sum(w_i)
// Every catalog factor needs exactly one selection.
double compute_score(const FactorCatalog &catalog, const Selections &selections);

struct NoisePolicy {
  double min_noise_multiplier = 1e-10;
  double participation_threshold = 0.5;

  void validate() const;
};

// eta = (1 - S_c) + min_noise_multiplier. Throws kOutOfRangeScore outside [0, 1].
double noise_multiplier(double score, const NoisePolicy &policy);

struct ComplianceProfile {
  std::string client_id;
  Selections selections;
  double score = 0.0;
};

ComplianceProfile make_profile(const FactorCatalog &catalog, std::string client_id,
                               Selections selections);

// The threshold only gates participation; it never changes eta.
bool eligible(double score, const NoisePolicy &policy);
bool eligible(const ComplianceProfile &profile, const NoisePolicy &policy);

// Profile file document:
//   {"catalog_version": ..., "clients": [{"client_id", "selections", "score"}]}
struct ProfileSet {
  std::string catalog_version;
  std::vector<ComplianceProfile> clients;
};

// Parses and checks a profile document against the catalog. Scores are
// recomputed; a cached score off by more than 1e-12 is rejected with
// kProfileMismatch, as is a catalog_version that differs from the catalog.
ProfileSet parse_profiles(std::string_view json_text, const FactorCatalog &catalog);
ProfileSet load_profiles(const std::filesystem::path &path, const FactorCatalog &catalog);
std::string profiles_to_json(const ProfileSet &profiles);

FactorCatalog parse_catalog(std::string_view json_text);
FactorCatalog load_catalog(const std::filesystem::path &path);
std::string catalog_to_json(const FactorCatalog &catalog);

inline constexpr double kProfileScoreTolerance = 1e-12;

}  // namespace complyfed

#endif  // COMPLYFED_COMPLIANCE_H_
