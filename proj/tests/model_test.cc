#include "complyfed/model.h"

#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "complyfed/error.h"
#include "complyfed/rng.h"
#include "test_data.h"

namespace complyfed {
namespace {

using testing::four_points;
using testing::random_dataset;

TEST(ModelSpecTest, LogisticLayout) {
  const ModelSpec spec = ModelSpec::logistic(2, 2);
  const ParamVector p = init_params(spec, 1);
  ASSERT_EQ(p.layout().size(), 2u);
  EXPECT_EQ(p.layout()[0], (TensorShape{"W", {2, 2}}));
  EXPECT_EQ(p.layout()[1], (TensorShape{"b", {2}}));
  EXPECT_EQ(p.size(), 6u);
  EXPECT_EQ(p.tensor("b")[0], 0.0);
  EXPECT_EQ(p.tensor("b")[1], 0.0);
}

TEST(ModelSpecTest, MlpLayoutOrder) {
  const Layout layout = ModelSpec::mlp(16, 8, 3).layout();
  ASSERT_EQ(layout.size(), 4u);
  EXPECT_EQ(layout[0], (TensorShape{"W1", {8, 16}}));
  EXPECT_EQ(layout[1], (TensorShape{"b1", {8}}));
  EXPECT_EQ(layout[2], (TensorShape{"W2", {3, 8}}));
  EXPECT_EQ(layout[3], (TensorShape{"b2", {3}}));
  EXPECT_EQ(layout_size(layout), 16u * 8 + 8 + 8 * 3 + 3);
}

TEST(ModelSpecTest, InvalidSpecs) {
  ModelSpec bad = ModelSpec::mlp(4, 0, 2);
  try {
    init_params(bad, 0);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidSpec);
  }
  EXPECT_THROW(ModelSpec::logistic(0, 2).validate(), Error);
  EXPECT_THROW(ModelSpec::logistic(3, 1).validate(), Error);
}

TEST(InitParamsTest, DeterministicAndGlorotBounded) {
  const ModelSpec spec = ModelSpec::mlp(16, 16, 2);
  const ParamVector a = init_params(spec, 99);
  EXPECT_EQ(a, init_params(spec, 99));
  EXPECT_NE(a, init_params(spec, 100));
  const double bound1 = std::sqrt(6.0 / 32.0);
  for (double w : a.tensor("W1")) EXPECT_LE(std::abs(w), bound1);
  const double bound2 = std::sqrt(6.0 / 18.0);
  for (double w : a.tensor("W2")) EXPECT_LE(std::abs(w), bound2);
  for (double b : a.tensor("b1")) EXPECT_EQ(b, 0.0);
}

TEST(ForwardLossTest, ZeroParamsGiveUniformSoftmax) {
  const ModelSpec spec = ModelSpec::logistic(2, 2);
  const ParamVector zero(spec.layout());
  const ForwardResult r = forward_loss(spec, zero, four_points());
  EXPECT_NEAR(r.loss, std::log(2.0), 1e-15);
  for (double p : r.probs) EXPECT_EQ(p, 0.5);
}

TEST(ForwardLossTest, ProbabilityRowsSumToOne) {
  for (const ModelSpec &spec : {ModelSpec::logistic(5, 4), ModelSpec::mlp(5, 7, 4)}) {
    ParamVector p = init_params(spec, 5);
    Rng rng(6);
    for (double &v : p.values()) v += rng.normal(0.0, 3.0);
    const Dataset data = random_dataset(20, 5, 7, 4);
    const ForwardResult r = forward_loss(spec, p, data);
    for (std::size_t i = 0; i < data.size(); ++i) {
      double sum = 0.0;
      for (int c = 0; c < 4; ++c) sum += r.probs[i * 4 + c];
      EXPECT_NEAR(sum, 1.0, 1e-9);
    }
  }
}

TEST(ForwardLossTest, LayoutMismatch) {
  const ModelSpec spec = ModelSpec::logistic(2, 2);
  const ParamVector wrong = init_params(ModelSpec::logistic(3, 2), 0);
  try {
    forward_loss(spec, wrong, four_points());
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kLayoutMismatch);
  }
  EXPECT_THROW(grad(spec, wrong, four_points()), Error);
  EXPECT_THROW(forward_loss(ModelSpec::logistic(3, 2), wrong, four_points()), Error);
}

// Central differences on the mean batch loss, h = 1e-5.
double finite_difference(const ModelSpec &spec, ParamVector p, const Dataset &data,
                         std::size_t coord) {
  const double h = 1e-5;
  const double original = p[coord];
  p[coord] = original + h;
  const double up = forward_loss(spec, p, data).loss;
  p[coord] = original - h;
  const double down = forward_loss(spec, p, data).loss;
  return (up - down) / (2.0 * h);
}

TEST(GradTest, MatchesFiniteDifferences) {
  for (const ModelSpec &spec : {ModelSpec::logistic(6, 3), ModelSpec::mlp(6, 5, 3)}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      ParamVector p = init_params(spec, seed);
      Rng rng(seed + 100);
      for (double &v : p.values()) v += rng.normal(0.0, 0.5);
      const Dataset data = random_dataset(12, 6, seed + 200, 3);
      const ParamVector g = grad(spec, p, data);
      for (int k = 0; k < 20; ++k) {
        const std::size_t coord = rng.index(p.size());
        const double numeric = finite_difference(spec, p, data, coord);
        const double scale = std::max({std::abs(g[coord]), std::abs(numeric), 1e-6});
        EXPECT_LT(std::abs(g[coord] - numeric) / scale, 1e-4)
            << "coord " << coord << " analytic " << g[coord] << " numeric " << numeric;
      }
    }
  }
}

TEST(GradTest, MeanOfPerSampleGrads) {
  const ModelSpec spec = ModelSpec::mlp(4, 6, 2);
  const ParamVector p = init_params(spec, 3);
  const Dataset data = random_dataset(9, 4, 4);
  const auto per_sample = per_sample_grads(spec, p, data);
  ASSERT_EQ(per_sample.size(), data.size());
  ParamVector mean(p.layout());
  for (const auto &g : per_sample) mean += g;
  mean *= 1.0 / static_cast<double>(per_sample.size());
  const ParamVector batch = grad(spec, p, data);
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(batch[i], mean[i], 1e-10);
}

TEST(GradTest, DuplicatingTheBatchKeepsTheMean) {
  const ModelSpec spec = ModelSpec::logistic(4, 2);
  const ParamVector p = init_params(spec, 8);
  const Dataset data = random_dataset(7, 4, 9);
  std::vector<std::size_t> twice;
  for (std::size_t i = 0; i < data.size(); ++i) {
    twice.push_back(i);
    twice.push_back(i);
  }
  const ParamVector once = grad(spec, p, data);
  const ParamVector doubled = grad(spec, p, data.subset(twice));
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(once[i], doubled[i], 1e-12);
}

TEST(SgdEpochTest, ZeroLearningRateIsIdentity) {
  const ModelSpec spec = ModelSpec::mlp(2, 3, 2);
  const ParamVector p = init_params(spec, 1);
  EXPECT_EQ(sgd_epoch(spec, p, four_points(), 0.0, 2, 5), p);
}

TEST(SgdEpochTest, SingleBatchIsOneGradientStep) {
  const ModelSpec spec = ModelSpec::mlp(2, 3, 2);
  const ParamVector p = init_params(spec, 1);
  const Dataset data = four_points();
  const ParamVector after = sgd_epoch(spec, p, data, 0.1, 32, 5);
  const ParamVector expected = p - 0.1 * grad(spec, p, data);
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(after[i], expected[i], 1e-12);
}

TEST(SgdEpochTest, LossDecreasesOnSeparableSet) {
  const ModelSpec spec = ModelSpec::logistic(2, 2);
  const Dataset data = four_points();
  ParamVector p = init_params(spec, 2);
  std::vector<double> losses{forward_loss(spec, p, data).loss};
  for (int step = 1; step <= 100; ++step) {
    p = sgd_epoch(spec, std::move(p), data, 0.5, 4, static_cast<std::uint64_t>(step));
    if (step % 20 == 0) losses.push_back(forward_loss(spec, p, data).loss);
  }
  for (std::size_t i = 1; i < losses.size(); ++i) EXPECT_LT(losses[i], losses[i - 1]);
}

TEST(SgdEpochTest, ShuffleSeedChangesPathButBothLearn) {
  const ModelSpec spec = ModelSpec::logistic(3, 2);
  const Dataset data = random_dataset(40, 3, 10);
  const ParamVector start = init_params(spec, 3);
  ParamVector a = start, b = start;
  for (int e = 0; e < 2; ++e) {
    a = sgd_epoch(spec, std::move(a), data, 0.5, 8, 1000 + e);
    b = sgd_epoch(spec, std::move(b), data, 0.5, 8, 2000 + e);
  }
  EXPECT_NE(a, b);
  const double initial = forward_loss(spec, start, data).loss;
  EXPECT_LT(forward_loss(spec, a, data).loss, initial);
  EXPECT_LT(forward_loss(spec, b, data).loss, initial);
  EXPECT_EQ(a, [&] {
    ParamVector again = start;
    for (int e = 0; e < 2; ++e) again = sgd_epoch(spec, std::move(again), data, 0.5, 8, 1000 + e);
    return again;
  }());
}

TEST(SgdEpochTest, ShortFinalBatchIsKept) {
  const auto batches = epoch_batches(10, 4, 1);
  ASSERT_EQ(batches.size(), 3u);
  EXPECT_EQ(batches[2].size(), 2u);
  std::vector<std::size_t> all;
  for (const auto &b : batches) all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(all[i], i);
}

TEST(SgdEpochTest, EmptyDataset) {
  const ModelSpec spec = ModelSpec::logistic(2, 2);
  try {
    sgd_epoch(spec, init_params(spec, 0), Dataset(2, {}, {}), 0.1, 4, 0);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyDataset);
  }
}

TEST(ProximalSgdTest, ZeroMuMatchesSgdBitwise) {
  const ModelSpec spec = ModelSpec::mlp(3, 4, 2);
  const Dataset data = random_dataset(30, 3, 11);
  const ParamVector p = init_params(spec, 4);
  const ParamVector anchor = init_params(spec, 5);
  EXPECT_EQ(proximal_sgd_epoch(spec, p, anchor, 0.0, data, 0.05, 8, 7),
            sgd_epoch(spec, p, data, 0.05, 8, 7));
}

TEST(ProximalSgdTest, ProximalTermPullsTowardAnchor) {
  const ModelSpec spec = ModelSpec::logistic(2, 2);
  const Dataset data = four_points();
  const ParamVector anchor = init_params(spec, 1);
  ParamVector p = anchor;
  for (double &v : p.values()) v += 1.0;
  const double lr = 0.1, mu = 0.5;
  // One full batch: the proximal update differs from plain SGD by exactly
  // -lr * mu * (p - anchor).
  const ParamVector prox = proximal_sgd_epoch(spec, p, anchor, mu, data, lr, 32, 3);
  const ParamVector plain = sgd_epoch(spec, p, data, lr, 32, 3);
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_NEAR(prox[i] - plain[i], -lr * mu * (p[i] - anchor[i]), 1e-12);
  }
  EXPECT_LT(l2_distance(prox, anchor), l2_distance(plain, anchor));
}

TEST(ProximalSgdTest, ToyTaskEndsCloserToAnchor) {
  const ModelSpec spec = ModelSpec::mlp(4, 6, 2);
  const Dataset data = random_dataset(64, 4, 12);
  const ParamVector anchor = init_params(spec, 6);
  ParamVector with_mu = anchor, without_mu = anchor;
  for (int e = 0; e < 10; ++e) {
    with_mu = proximal_sgd_epoch(spec, std::move(with_mu), anchor, 0.01, data, 0.5, 8, e);
    without_mu = proximal_sgd_epoch(spec, std::move(without_mu), anchor, 0.0, data, 0.5, 8, e);
  }
  EXPECT_LT(l2_distance(with_mu, anchor), l2_distance(without_mu, anchor));
}

TEST(ProximalSgdTest, NegativeMuRejected) {
  const ModelSpec spec = ModelSpec::logistic(2, 2);
  const ParamVector p = init_params(spec, 0);
  try {
    proximal_sgd_epoch(spec, p, p, -0.1, four_points(), 0.1, 2, 0);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kNegativeMu);
  }
}

TEST(PredictTest, TiesGoToLowestClass) {
  const ModelSpec spec = ModelSpec::logistic(2, 3);
  const ParamVector zero(spec.layout());
  for (int y : predict(spec, zero, four_points())) EXPECT_EQ(y, 0);
}

}  // namespace
}  // namespace complyfed
