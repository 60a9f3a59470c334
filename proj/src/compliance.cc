#include "complyfed/compliance.h"

#include <cmath>
#include <set>

#include <json.hpp>

#include "complyfed/error.h"
#include "io_util.h"

namespace complyfed {

using nlohmann::json;

const FactorOption *ComplianceFactor::find_option(std::string_view label) const {
  for (const auto &option : options) {
    if (option.label == label) return &option;
  }
  return nullptr;
}

const ComplianceFactor *FactorCatalog::find(std::string_view id) const {
  for (const auto &factor : factors) {
    if (factor.id == id) return &factor;
  }
  return nullptr;
}

void FactorCatalog::validate() const {
  std::set<std::string> ids;
  double weight_sum = 0.0;
  for (const auto &factor : factors) {
    if (!ids.insert(factor.id).second) {
      throw Error(ErrorCode::kInvalidCatalog, "duplicate factor id '" + factor.id + "'");
    }
    if (!(factor.weight >= 0.0) || !std::isfinite(factor.weight)) {
      throw Error(ErrorCode::kInvalidCatalog, "factor '" + factor.id + "' has invalid weight");
    }
    if (factor.options.empty()) {
      throw Error(ErrorCode::kInvalidCatalog, "factor '" + factor.id + "' has no options");
    }
    std::set<std::string> labels;
    for (const auto &option : factor.options) {
      if (!labels.insert(option.label).second) {
        throw Error(ErrorCode::kInvalidCatalog,
                    "factor '" + factor.id + "' repeats option '" + option.label + "'");
      }
      if (!(option.score >= 0.0 && option.score <= 1.0)) {
        throw Error(ErrorCode::kInvalidCatalog,
                    "option '" + option.label + "' of factor '" + factor.id +
                        "' has score outside [0, 1]");
      }
    }
    weight_sum += factor.weight;
  }
  if (!(weight_sum > 0.0)) {
    throw Error(ErrorCode::kZeroWeightSum, "catalog weights sum to zero");
  }
}

FactorCatalog default_catalog() {
  auto factor = [](std::string id, std::string name, std::string top, std::string mid,
                   std::string low, double mid_score = 0.7) {
    return ComplianceFactor{std::move(id),
                            std::move(name),
                            1.0,
                            {{std::move(top), 1.0}, {std::move(mid), mid_score}, {std::move(low), 0.5}}};
  };
  FactorCatalog catalog;
  catalog.version = "healthcare-12/v1";
  catalog.factors = {
      factor("data_encryption", "Data Encryption Standards", "AES-256 (NIST)",
             "AES-128 (Healthcare Minimum)", "No Encryption"),
      factor("ethical_ai", "Ethical AI Policies", "EU AI Act", "FDA Guidelines",
             "No Formal Policy"),
      factor("privacy_regulations", "Privacy Regulations", "HIPAA and GDPR", "HIPAA or GDPR",
             "No Regulatory Framework"),
      factor("data_quality", "Data Quality", "DICOM Standard", "Partially Validated Data",
             "Unvalidated Data"),
      factor("anonymization", "Anonymization Practices", "ISO/TS 25237:2017 Fully Anonymized",
             "Pseudonymized (Partial Anonymization)", "No Anonymization"),
      factor("interoperability", "Interoperability Standards", "HL7/FHIR Standards",
             "Partial HL7/FHIR Support", "Proprietary Formats"),
      factor("network_security", "Secure Network Infrastructure", "NIST Cybersecurity Framework",
             "Partial NIST Alignment", "No Security Framework"),
      factor("authentication", "Authentication and Authorization", "MFA", "RBAC",
             "Password Only"),
      factor("audit_logs", "Audit Logs", "SOC 2 Type II Certification", "Internal Audit Logs",
             "No Audit Logs"),
      factor("patient_consent", "Patient Consent Management", "HL7 CDA Compliant",
             "Paper-Based Consent", "No Consent Management"),
      // Either enclave technology counts as a full TEE.
      factor("trusted_execution", "Trusted Execution Environments", "Intel SGX", "AMD SEV",
             "No TEE", 1.0),
      factor("local_training_quality", "Local Model Training Quality", "High Accuracy (>95%)",
             "Moderate Accuracy (85-95%)", "Low Accuracy (<85%)"),
  };
  return catalog;
}

double compute_score(const FactorCatalog &catalog, const Selections &selections) {
  for (const auto &[factor_id, label] : selections) {
    if (catalog.find(factor_id) == nullptr) {
      throw Error(ErrorCode::kUnknownFactor, "selection for unknown factor '" + factor_id + "'");
    }
  }
  double weighted = 0.0;
  double weight_sum = 0.0;
  for (const auto &factor : catalog.factors) {
    auto it = selections.find(factor.id);
    if (it == selections.end()) {
      throw Error(ErrorCode::kUnknownFactor, "no selection for factor '" + factor.id + "'");
    }
    const FactorOption *option = factor.find_option(it->second);
    if (option == nullptr) {
      throw Error(ErrorCode::kUnknownOption,
                  "factor '" + factor.id + "' has no option '" + it->second + "'");
    }
    weighted += factor.weight * option->score;
    weight_sum += factor.weight;
  }
  if (!(weight_sum > 0.0)) {
    throw Error(ErrorCode::kZeroWeightSum, "factor weights sum to zero");
  }
  // Rounding can push a mean of ones a hair past 1.
  return std::min(1.0, std::max(0.0, weighted / weight_sum));
}

void NoisePolicy::validate() const {
  if (!(min_noise_multiplier > 0.0) || !std::isfinite(min_noise_multiplier)) {
    throw Error(ErrorCode::kInvalidArgument, "min_noise_multiplier must be > 0");
  }
  if (!(participation_threshold >= 0.0 && participation_threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "participation_threshold must lie in [0, 1]");
  }
}

double noise_multiplier(double score, const NoisePolicy &policy) {
  if (!(score >= 0.0 && score <= 1.0)) {
    throw Error(ErrorCode::kOutOfRangeScore,
                "compliance score " + internal::format_double(score) + " outside [0, 1]");
  }
  return (1.0 - score) + policy.min_noise_multiplier;
}

ComplianceProfile make_profile(const FactorCatalog &catalog, std::string client_id,
                               Selections selections) {
  const double score = compute_score(catalog, selections);
  return ComplianceProfile{std::move(client_id), std::move(selections), score};
}

bool eligible(double score, const NoisePolicy &policy) {
  return score >= policy.participation_threshold;
}

bool eligible(const ComplianceProfile &profile, const NoisePolicy &policy) {
  return eligible(profile.score, policy);
}

namespace {

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error &e) {
    throw Error(ErrorCode::kParseError, std::string(what) + ": " + e.what());
  }
}

template <typename T>
T field(const json &object, const char *key, std::string_view where) {
  if (!object.is_object() || !object.contains(key)) {
    throw Error(ErrorCode::kParseError,
                std::string(where) + ": missing field '" + key + "'");
  }
  try {
    return object.at(key).get<T>();
  } catch (const json::exception &) {
    throw Error(ErrorCode::kParseError,
                std::string(where) + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace

ProfileSet parse_profiles(std::string_view json_text, const FactorCatalog &catalog) {
  const json doc = parse_json(json_text, "profile file");
  ProfileSet set;
  set.catalog_version = field<std::string>(doc, "catalog_version", "profile file");
  if (set.catalog_version != catalog.version) {
    throw Error(ErrorCode::kProfileMismatch, "profile file targets catalog '" +
                                                 set.catalog_version + "' but catalog is '" +
                                                 catalog.version + "'");
  }
  const json clients = field<json>(doc, "clients", "profile file");
  if (!clients.is_array()) {
    throw Error(ErrorCode::kParseError, "profile file: 'clients' must be an array");
  }
  std::set<std::string> seen;
  for (const auto &entry : clients) {
    ComplianceProfile profile;
    profile.client_id = field<std::string>(entry, "client_id", "client entry");
    const std::string where = "client '" + profile.client_id + "'";
    if (!seen.insert(profile.client_id).second) {
      throw Error(ErrorCode::kParseError, "duplicate " + where);
    }
    profile.selections = field<Selections>(entry, "selections", where);
    const double cached = field<double>(entry, "score", where);
    profile.score = compute_score(catalog, profile.selections);
    if (!(std::abs(cached - profile.score) <= kProfileScoreTolerance)) {
      throw Error(ErrorCode::kProfileMismatch,
                  where + ": stored score " + internal::format_double(cached) +
                      " does not match recomputed " + internal::format_double(profile.score));
    }
    set.clients.push_back(std::move(profile));
  }
  return set;
}

ProfileSet load_profiles(const std::filesystem::path &path, const FactorCatalog &catalog) {
  return parse_profiles(internal::read_file(path), catalog);
}

std::string profiles_to_json(const ProfileSet &profiles) {
  json doc;
  doc["catalog_version"] = profiles.catalog_version;
  doc["clients"] = json::array();
  for (const auto &client : profiles.clients) {
    doc["clients"].push_back(
        {{"client_id", client.client_id}, {"selections", client.selections}, {"score", client.score}});
  }
  return doc.dump(2) + "\n";
}

FactorCatalog parse_catalog(std::string_view json_text) {
  const json doc = parse_json(json_text, "catalog file");
  FactorCatalog catalog;
  catalog.version = field<std::string>(doc, "version", "catalog file");
  const json factors = field<json>(doc, "factors", "catalog file");
  if (!factors.is_array()) {
    throw Error(ErrorCode::kParseError, "catalog file: 'factors' must be an array");
  }
  for (const auto &entry : factors) {
    ComplianceFactor factor;
    factor.id = field<std::string>(entry, "id", "factor entry");
    const std::string where = "factor '" + factor.id + "'";
    factor.name = entry.value("name", factor.id);
    factor.weight = field<double>(entry, "weight", where);
    for (const auto &option : field<json>(entry, "options", where)) {
      factor.options.push_back({field<std::string>(option, "label", where),
                                field<double>(option, "score", where)});
    }
    catalog.factors.push_back(std::move(factor));
  }
  catalog.validate();
  return catalog;
}

FactorCatalog load_catalog(const std::filesystem::path &path) {
  return parse_catalog(internal::read_file(path));
}

std::string catalog_to_json(const FactorCatalog &catalog) {
  json doc;
  doc["version"] = catalog.version;
  doc["factors"] = json::array();
  for (const auto &factor : catalog.factors) {
    json options = json::array();
    for (const auto &option : factor.options) {
      options.push_back({{"label", option.label}, {"score", option.score}});
    }
    doc["factors"].push_back({{"id", factor.id},
                              {"name", factor.name},
                              {"weight", factor.weight},
                              {"options", options}});
  }
  return doc.dump(2) + "\n";
}

}  // namespace complyfed
