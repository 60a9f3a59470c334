#include "complyfed/compliance.h"

#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include <gtest/gtest.h>
#include <json.hpp>

#include "complyfed/error.h"
#include "complyfed/rng.h"

namespace complyfed {
namespace {

FactorCatalog anonymization_only() {
  return FactorCatalog{"anon",
                       {{"anonymization",
                         "Anonymization Practices",
                         1.0,
                         {{"ISO/TS 25237:2017 Fully Anonymized", 1.0},
                          {"Pseudonymized (Partial Anonymization)", 0.7},
                          {"No Anonymization", 0.5}}}}};
}

FactorCatalog two_factor() {
  return FactorCatalog{"two",
                       {{"a", "A", 2.0, {{"hi", 1.0}, {"lo", 0.5}}},
                        {"b", "B", 1.0, {{"hi", 1.0}, {"lo", 0.5}}}}};
}

template <typename Fn>
void expect_error(ErrorCode code, Fn &&fn) {
  try {
    fn();
    FAIL() << "expected " << error_code_name(code);
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

// Random catalog plus one random selection per factor.
struct RandomCase {
  FactorCatalog catalog;
  Selections selections;
  std::vector<double> weights;
  std::vector<double> scores;
};

RandomCase random_case(Rng &rng) {
  RandomCase c;
  c.catalog.version = "random";
  const std::size_t n = 1 + rng.index(15);
  for (std::size_t i = 0; i < n; ++i) {
    ComplianceFactor f;
    f.id = "f" + std::to_string(i);
    f.name = f.id;
    // Some zero weights, but never all of them.
    f.weight = (i > 0 && rng.uniform() < 0.15) ? 0.0 : rng.uniform(0.0, 5.0) + 1e-3;
    const std::size_t options = 1 + rng.index(4);
    for (std::size_t k = 0; k < options; ++k) {
      f.options.push_back({"opt" + std::to_string(k), rng.uniform()});
    }
    const std::size_t pick = rng.index(options);
    c.selections[f.id] = f.options[pick].label;
    c.weights.push_back(f.weight);
    c.scores.push_back(f.options[pick].score);
    c.catalog.factors.push_back(std::move(f));
  }
  return c;
}

// Independent oracle: plain weighted mean, summed in reverse order in
// extended precision.
double brute_force_score(const std::vector<double> &w, const std::vector<double> &s) {
  long double num = 0.0L, den = 0.0L;
  for (std::size_t i = w.size(); i-- > 0;) {
    num += static_cast<long double>(w[i]) * static_cast<long double>(s[i]);
    den += static_cast<long double>(w[i]);
  }
  return static_cast<double>(num / den);
}

TEST(ComputeScoreTest, NoAnonymizationScoresHalf) {
  EXPECT_DOUBLE_EQ(compute_score(anonymization_only(), {{"anonymization", "No Anonymization"}}),
                   0.5);
}

TEST(ComputeScoreTest, WeightedTwoFactorExample) {
  EXPECT_NEAR(compute_score(two_factor(), {{"a", "hi"}, {"b", "lo"}}), 2.5 / 3.0, 1e-15);
}

TEST(ComputeScoreTest, AllTopOptionsGiveOne) {
  const FactorCatalog catalog = default_catalog();
  Selections top;
  for (const auto &f : catalog.factors) top[f.id] = f.options.front().label;
  EXPECT_EQ(compute_score(catalog, top), 1.0);
}

TEST(ComputeScoreTest, Errors) {
  const FactorCatalog catalog = two_factor();
  expect_error(ErrorCode::kUnknownFactor,
               [&] { compute_score(catalog, {{"a", "hi"}, {"b", "hi"}, {"zz", "hi"}}); });
  expect_error(ErrorCode::kUnknownFactor, [&] { compute_score(catalog, {{"a", "hi"}}); });
  expect_error(ErrorCode::kUnknownOption,
               [&] { compute_score(catalog, {{"a", "hi"}, {"b", "medium"}}); });
  FactorCatalog zero = catalog;
  for (auto &f : zero.factors) f.weight = 0.0;
  expect_error(ErrorCode::kZeroWeightSum, [&] { compute_score(zero, {{"a", "hi"}, {"b", "hi"}}); });
}

TEST(ComputeScoreTest, MatchesBruteForceOracle) {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const RandomCase c = random_case(rng);
    const double score = compute_score(c.catalog, c.selections);
    EXPECT_NEAR(score, brute_force_score(c.weights, c.scores), 1e-12);
    EXPECT_GE(score, 0.0);
    EXPECT_LE(score, 1.0);
  }
}

TEST(ComputeScoreTest, ScaleInvariance) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    RandomCase c = random_case(rng);
    const double before = compute_score(c.catalog, c.selections);
    const double k = std::exp(rng.uniform(-5.0, 5.0));
    for (auto &f : c.catalog.factors) f.weight *= k;
    EXPECT_NEAR(compute_score(c.catalog, c.selections), before, 1e-12);
  }
}

TEST(ComputeScoreTest, RaisingAnOptionNeverLowersTheScore) {
  Rng rng(12);
  const NoisePolicy policy;
  for (int trial = 0; trial < 200; ++trial) {
    RandomCase c = random_case(rng);
    const double before = compute_score(c.catalog, c.selections);
    auto &factor = c.catalog.factors[rng.index(c.catalog.factors.size())];
    for (auto &option : factor.options) {
      if (option.label == c.selections[factor.id]) option.score = rng.uniform(option.score, 1.0);
    }
    const double after = compute_score(c.catalog, c.selections);
    EXPECT_GE(after, before - 1e-15);
    EXPECT_LE(noise_multiplier(after, policy), noise_multiplier(before, policy) + 1e-15);
  }
}

TEST(NoiseMultiplierTest, FormulaValues) {
  const NoisePolicy policy;
  EXPECT_EQ(noise_multiplier(1.0, policy), 1e-10);
  EXPECT_EQ(noise_multiplier(0.0, policy), 1.0 + 1e-10);
  EXPECT_EQ(noise_multiplier(0.3, policy), (1.0 - 0.3) + 1e-10);
  EXPECT_NEAR(noise_multiplier(0.3, policy), 0.7 + 1e-10, 1e-15);
}

TEST(NoiseMultiplierTest, RejectsOutOfRangeScores) {
  const NoisePolicy policy;
  expect_error(ErrorCode::kOutOfRangeScore, [&] { noise_multiplier(1.01, policy); });
  expect_error(ErrorCode::kOutOfRangeScore, [&] { noise_multiplier(-0.1, policy); });
  expect_error(ErrorCode::kOutOfRangeScore, [&] { noise_multiplier(std::nan(""), policy); });
}

TEST(NoiseMultiplierTest, RangeAndMonotonicity) {
  const NoisePolicy policy;
  double previous = noise_multiplier(0.0, policy);
  for (int i = 1; i <= 1000; ++i) {
    const double eta = noise_multiplier(i / 1000.0, policy);
    EXPECT_GT(eta, 0.0);
    EXPECT_LE(eta, 1.0 + policy.min_noise_multiplier);
    EXPECT_LE(eta, previous);
    previous = eta;
  }
}

TEST(EligibilityTest, ThresholdGatesParticipation) {
  NoisePolicy policy;
  EXPECT_TRUE(eligible(0.6, policy));
  EXPECT_FALSE(eligible(0.3, policy));
  EXPECT_TRUE(eligible(0.5, policy));
  policy.participation_threshold = 0.0;
  EXPECT_TRUE(eligible(0.3, policy));
  // The threshold never changes eta.
  EXPECT_EQ(noise_multiplier(0.3, policy), noise_multiplier(0.3, NoisePolicy{}));
}

TEST(NoisePolicyTest, Validation) {
  expect_error(ErrorCode::kInvalidArgument, [] { NoisePolicy{0.0, 0.5}.validate(); });
  expect_error(ErrorCode::kInvalidArgument, [] { NoisePolicy{1e-10, 1.5}.validate(); });
  NoisePolicy{}.validate();
}

TEST(CatalogTest, DefaultCatalogHasTwelveFactors) {
  const FactorCatalog catalog = default_catalog();
  catalog.validate();
  ASSERT_EQ(catalog.factors.size(), 12u);
  const auto *anon = catalog.find("anonymization");
  ASSERT_NE(anon, nullptr);
  EXPECT_EQ(anon->find_option("ISO/TS 25237:2017 Fully Anonymized")->score, 1.0);
  EXPECT_EQ(anon->find_option("Pseudonymized (Partial Anonymization)")->score, 0.7);
  EXPECT_EQ(anon->find_option("No Anonymization")->score, 0.5);
  for (const auto &f : catalog.factors) {
    EXPECT_EQ(f.weight, 1.0);
    EXPECT_GE(f.options.size(), 2u);
    EXPECT_LE(f.options.size(), 3u);
  }
}

TEST(CatalogTest, ValidationCatchesBadCatalogs) {
  FactorCatalog dup = two_factor();
  dup.factors[1].id = "a";
  expect_error(ErrorCode::kInvalidCatalog, [&] { dup.validate(); });
  FactorCatalog negative = two_factor();
  negative.factors[0].weight = -1.0;
  expect_error(ErrorCode::kInvalidCatalog, [&] { negative.validate(); });
  FactorCatalog repeated = two_factor();
  repeated.factors[0].options[1].label = "hi";
  expect_error(ErrorCode::kInvalidCatalog, [&] { repeated.validate(); });
  FactorCatalog empty_options = two_factor();
  empty_options.factors[0].options.clear();
  expect_error(ErrorCode::kInvalidCatalog, [&] { empty_options.validate(); });
  FactorCatalog zero = two_factor();
  for (auto &f : zero.factors) f.weight = 0.0;
  expect_error(ErrorCode::kZeroWeightSum, [&] { zero.validate(); });
}

TEST(CatalogTest, JsonRoundTrip) {
  const FactorCatalog catalog = default_catalog();
  const FactorCatalog back = parse_catalog(catalog_to_json(catalog));
  EXPECT_EQ(catalog_to_json(back), catalog_to_json(catalog));
}

TEST(ProfileFileTest, RoundTripKeepsScores) {
  const FactorCatalog catalog = two_factor();
  ProfileSet set{catalog.version,
                 {make_profile(catalog, "clinic_a", {{"a", "hi"}, {"b", "lo"}}),
                  make_profile(catalog, "clinic_b", {{"a", "lo"}, {"b", "lo"}})}};
  const ProfileSet back = parse_profiles(profiles_to_json(set), catalog);
  ASSERT_EQ(back.clients.size(), 2u);
  EXPECT_EQ(back.clients[0].client_id, "clinic_a");
  EXPECT_EQ(back.clients[0].score, set.clients[0].score);
  EXPECT_EQ(back.clients[1].score, 0.5);
  EXPECT_EQ(profiles_to_json(back), profiles_to_json(set));
}

TEST(ProfileFileTest, RejectsTamperedScore) {
  const FactorCatalog catalog = two_factor();
  const std::string doc = R"({"catalog_version": "two", "clients": [
      {"client_id": "x", "selections": {"a": "hi", "b": "lo"}, "score": 0.9}]})";
  expect_error(ErrorCode::kProfileMismatch, [&] { parse_profiles(doc, catalog); });
}

TEST(ProfileFileTest, RejectsUnknownFactorAndVersion) {
  const FactorCatalog catalog = two_factor();
  expect_error(ErrorCode::kUnknownFactor, [&] {
    parse_profiles(R"({"catalog_version": "two", "clients": [
        {"client_id": "x", "selections": {"a": "hi", "b": "lo", "c": "hi"}, "score": 0.5}]})",
                   catalog);
  });
  expect_error(ErrorCode::kProfileMismatch, [&] {
    parse_profiles(R"({"catalog_version": "other", "clients": []})", catalog);
  });
  expect_error(ErrorCode::kParseError,
               [&] { parse_profiles(R"({"catalog_version": "two"})", catalog); });
  expect_error(ErrorCode::kParseError, [&] { parse_profiles("{not json", catalog); });
}

// Fixture produced by tests/fixtures/gen_score_parity.py, which scores 50
// random profiles against the default catalog in Python.
TEST(ProfileFileTest, ParityFixtureMatchesEngine) {
  const std::string dir = COMPLYFED_FIXTURE_DIR;
  const FactorCatalog catalog = load_catalog(dir + "/default_catalog.json");
  EXPECT_EQ(catalog_to_json(catalog), catalog_to_json(default_catalog()));
  const ProfileSet set = load_profiles(dir + "/score_parity_profiles.json", catalog);
  ASSERT_EQ(set.clients.size(), 50u);

  std::ifstream in(dir + "/score_parity_expected.json");
  const auto expected = nlohmann::json::parse(in);
  const NoisePolicy policy;
  for (std::size_t i = 0; i < set.clients.size(); ++i) {
    const auto &row = expected.at(i);
    EXPECT_EQ(row.at("client_id").get<std::string>(), set.clients[i].client_id);
    EXPECT_NEAR(set.clients[i].score, row.at("score").get<double>(), 1e-12);
    EXPECT_NEAR(noise_multiplier(set.clients[i].score, policy), row.at("eta").get<double>(), 1e-12);
  }
}

}  // namespace
}  // namespace complyfed
