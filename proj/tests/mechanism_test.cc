//
// Copyright 2026 The Fast-MWEM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "fastmwem/mechanism.h"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "gtest/gtest.h"
#include "stat_util.h"

namespace fastmwem {
namespace {

using ::fastmwem::testing::ChiSquarePValue;
using ::fastmwem::testing::Softmax;
using ::fastmwem::testing::TotalVariation;
using ::fastmwem::testing::kZ99;
using ::fastmwem::testing::WilsonInterval;

std::pair<double, double> CountInterval(uint64_t count, size_t draws) {
  const double n = static_cast<double>(draws);
  return WilsonInterval(static_cast<double>(count) / n, n, kZ99);
}

Matrix RandomMatrix(size_t rows, size_t cols, uint64_t seed, double lo = -1.0,
                    double hi = 1.0) {
  Rng rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix out(rows, cols);
  for (size_t i = 0; i < rows; ++i) {
    for (size_t j = 0; j < cols; ++j) out(i, j) = dist(rng);
  }
  return out;
}

std::vector<double> RandomDistribution(size_t n, Rng& rng) {
  std::vector<double> p(n);
  for (double& v : p) v = UniformOpen(rng);
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& v : p) v /= total;
  return p;
}

std::vector<uint64_t> TallyExact(std::span<const double> scores,
                                 const EmConfig& cfg, size_t draws,
                                 uint64_t seed) {
  Rng rng(seed);
  std::vector<uint64_t> counts(scores.size(), 0);
  for (size_t t = 0; t < draws; ++t) ++counts[EmExact(scores, cfg, rng)];
  return counts;
}

TEST(EmConfigTest, ScaleAndValidation) {
  EmConfig cfg{0.5, 0.25};
  EXPECT_DOUBLE_EQ(cfg.Scale(), 1.0);
  EXPECT_THROW((EmConfig{0.0, 1.0}.Validate()), std::invalid_argument);
  EXPECT_THROW((EmConfig{1.0, -1.0}.Validate()), std::invalid_argument);
  EXPECT_THROW((EmConfig{NAN, 1.0}.Validate()), std::invalid_argument);
}

TEST(EmExactTest, SingleCandidate) {
  Rng rng(1);
  const std::vector<double> x = {3.5};
  for (int t = 0; t < 10; ++t) EXPECT_EQ(EmExact(x, {1.0, 1.0}, rng), 0u);
}

TEST(EmExactTest, TwoPointClosedForm) {
  const double eps0 = 0.7;
  const double delta = 0.3;
  const std::vector<double> x = {0.0, 2.0 * delta * std::log(3.0) / eps0};
  const size_t draws = 200000;
  const auto counts = TallyExact(x, {eps0, delta}, draws, 7);
  const auto [lo, hi] = CountInterval(counts[1], draws);
  EXPECT_LE(lo, 0.75);
  EXPECT_GE(hi, 0.75);
}

TEST(EmExactTest, HugeSensitivityIsUniform) {
  const std::vector<double> x = {0.0, 1.0, 5.0, -3.0, 2.0};
  const auto counts = TallyExact(x, {1.0, 1e12}, 100000, 3);
  const std::vector<double> uniform(x.size(), 1.0 / x.size());
  EXPECT_GT(ChiSquarePValue(counts, uniform), 0.001);
}

TEST(EmExactTest, MatchesSoftmax) {
  const EmConfig cfg{1.3, 0.4};
  Rng gen(11);
  std::vector<double> x(20);
  for (double& v : x) v = 2.0 * UniformUnit(gen) - 1.0;
  std::vector<double> scaled = x;
  for (double& v : scaled) v *= cfg.Scale();
  const auto counts = TallyExact(x, cfg, 200000, 5);
  const auto probs = Softmax(scaled);
  EXPECT_GT(ChiSquarePValue(counts, probs), 0.001);
  EXPECT_LT(TotalVariation(counts, probs), 0.01);
}

TEST(EmExactTest, ShiftInvariance) {
  const EmConfig cfg{1.0, 0.5};
  const std::vector<double> x = {0.1, 0.4, -0.2, 0.9};
  std::vector<double> shifted = x;
  for (double& v : shifted) v += 1000.0;
  std::vector<double> scaled = x;
  for (double& v : scaled) v *= cfg.Scale();
  const auto probs = Softmax(scaled);
  EXPECT_GT(ChiSquarePValue(TallyExact(shifted, cfg, 100000, 9), probs),
            0.001);
}

TEST(EmExactTest, RaisingAScoreRaisesItsFrequency) {
  const EmConfig cfg{1.0, 0.5};
  std::vector<double> x = {0.2, 0.5, 0.1, 0.3};
  const size_t draws = 200000;
  const auto before = TallyExact(x, cfg, draws, 21);
  x[2] += 0.2;
  const auto after = TallyExact(x, cfg, draws, 22);
  EXPECT_LT(CountInterval(before[2], draws).second,
            CountInterval(after[2], draws).first);
}

TEST(AugmentTest, Examples) {
  const Matrix q(1, 2, std::vector<double>{1.0, 0.0});
  const AugmentedQuerySet aug = AugmentComplements(q);
  ASSERT_EQ(aug.augmented.rows(), 2u);
  EXPECT_EQ(aug.augmented(0, 0), 1.0);
  EXPECT_EQ(aug.augmented(0, 1), 0.0);
  EXPECT_EQ(aug.augmented(1, 0), 0.0);
  EXPECT_EQ(aug.augmented(1, 1), 1.0);
  EXPECT_EQ(aug.BackMap(0).id, 0u);
  EXPECT_EQ(aug.BackMap(0).sign, 1);
  EXPECT_EQ(aug.BackMap(1).id, 0u);
  EXPECT_EQ(aug.BackMap(1).sign, -1);
  EXPECT_THROW(aug.BackMap(2), std::out_of_range);
}

TEST(AugmentTest, BackMapOfComplements) {
  const Matrix q = RandomMatrix(5, 3, 2, 0.0, 1.0);
  const AugmentedQuerySet aug = AugmentComplements(q);
  for (size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(aug.BackMap(5 + i).id, i);
    EXPECT_EQ(aug.BackMap(5 + i).sign, -1);
    EXPECT_EQ(aug.BackMap(i).sign, 1);
  }
}

TEST(AugmentTest, RejectsOutOfRangeEntries) {
  EXPECT_THROW(AugmentComplements(Matrix(1, 2, std::vector<double>{1.5, 0.0})),
               std::invalid_argument);
  EXPECT_THROW(AugmentComplements(Matrix(1, 2, std::vector<double>{-0.1, 0})),
               std::invalid_argument);
  EXPECT_THROW(AugmentComplements(Matrix(1, 1, std::vector<double>{NAN})),
               std::invalid_argument);
}

TEST(AugmentTest, ComplementScoresAreNegated) {
  Rng rng(4);
  const size_t m = 30;
  const size_t u = 16;
  const Matrix q = RandomMatrix(m, u, 8, 0.0, 1.0);
  const AugmentedQuerySet aug = AugmentComplements(q);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = RandomDistribution(u, rng);
    const auto h = RandomDistribution(u, rng);
    std::vector<double> diff(u);
    for (size_t x = 0; x < u; ++x) diff[x] = h[x] - p[x];
    for (size_t i = 0; i < m; ++i) {
      double direct = 0.0;
      double complement = 0.0;
      for (size_t x = 0; x < u; ++x) {
        direct += aug.augmented(i, x) * diff[x];
        complement += aug.augmented(m + i, x) * diff[x];
      }
      EXPECT_NEAR(complement, -direct, 1e-12);
    }
  }
}

TEST(LazyEmTest, FlatExactSetMatchesExactMechanism) {
  const size_t n = 64;
  const Matrix vectors = RandomMatrix(n, 8, 31);
  const auto index = BuildIndex(vectors, {});
  Rng gen(32);
  std::vector<double> query(8);
  for (double& v : query) v = 4.0 * UniformUnit(gen) - 2.0;
  const EmConfig cfg{1.0, 0.5};

  std::vector<double> scaled(n);
  for (size_t i = 0; i < n; ++i) {
    scaled[i] = cfg.Scale() * Dot(vectors.row(i), query);
  }
  const auto probs = Softmax(scaled);

  const size_t draws = 200000;
  Rng rng(33);
  std::vector<uint64_t> counts(n, 0);
  for (size_t t = 0; t < draws; ++t) {
    ++counts[LazyEm(*index, query, 8, cfg, {}, rng).candidate];
  }
  EXPECT_LT(TotalVariation(counts, probs), 0.01);
  EXPECT_GT(ChiSquarePValue(counts, probs), 0.001);
}

TEST(LazyEmTest, ZeroErrorIsUniformOverAugmentedSet) {
  const size_t m = 6;
  const size_t u = 10;
  const AugmentedQuerySet aug =
      AugmentComplements(RandomMatrix(m, u, 12, 0.0, 1.0));
  const auto index = BuildIndex(aug.augmented, {});
  const std::vector<double> zero(u, 0.0);
  Rng rng(13);
  LazyEmOptions options;
  options.augmentation = &aug;
  std::vector<uint64_t> counts(2 * m, 0);
  const size_t draws = 60000;
  for (size_t t = 0; t < draws; ++t) {
    const LazyEmResult r = LazyEm(*index, zero, 4, {1.0, 0.01}, options, rng);
    EXPECT_EQ(r.origin.id, aug.BackMap(r.candidate).id);
    ++counts[r.candidate];
  }
  const std::vector<double> uniform(2 * m, 1.0 / (2 * m));
  EXPECT_GT(ChiSquarePValue(counts, uniform), 0.001);
}

TEST(LazyEmTest, StandardBasisClosedForm) {
  const size_t n = 50;
  Matrix basis(n, n);
  for (size_t i = 0; i < n; ++i) basis(i, i) = 1.0;
  const auto index = BuildIndex(basis, {});
  const EmConfig cfg{0.8, 0.2};
  const double t = 1.5;
  std::vector<double> query(n, 0.0);
  query[0] = t;
  const double w = std::exp(cfg.epsilon0 * t / (2.0 * cfg.sensitivity));
  const double expected = w / (w + static_cast<double>(n) - 1.0);

  Rng rng(14);
  const size_t draws = 100000;
  uint64_t hits = 0;
  for (size_t d = 0; d < draws; ++d) {
    hits += LazyEm(*index, query, 8, cfg, {}, rng).candidate == 0;
  }
  const auto [lo, hi] = CountInterval(hits, draws);
  EXPECT_LE(lo, expected);
  EXPECT_GE(hi, expected);
}

TEST(LazyEmTest, CountsOnlyExaminedScores) {
  const size_t n = 2000;
  const Matrix vectors = RandomMatrix(n, 6, 41);
  const auto index = BuildIndex(vectors, {});
  Rng rng(42);
  const std::vector<double> query = {1, -1, 0.5, 0, 2, -0.3};
  for (int t = 0; t < 100; ++t) {
    const LazyEmResult r = LazyEm(*index, query, 45, {1.0, 1.0}, {}, rng);
    EXPECT_EQ(r.score_evaluations, r.samples_drawn);
    EXPECT_EQ(r.samples_drawn, 45 + r.selection.extra_samples);
    EXPECT_EQ(r.index_evaluations, n);
    EXPECT_LT(r.score_evaluations, n);
  }
}

TEST(LazyEmTest, Rejections) {
  const Matrix vectors = RandomMatrix(10, 3, 5);
  const auto index = BuildIndex(vectors, {});
  const std::vector<double> query = {1, 0, 0};
  Rng rng(6);
  EXPECT_THROW(LazyEm(*index, query, 11, {1, 1}, {}, rng),
               std::invalid_argument);
  EXPECT_THROW(LazyEm(*index, query, 0, {1, 1}, {}, rng),
               std::invalid_argument);
  LazyEmOptions bad_slack;
  bad_slack.mode = EmMode::kPrivate;
  bad_slack.slack = -0.1;
  EXPECT_THROW(LazyEm(*index, query, 3, {1, 1}, bad_slack, rng),
               std::invalid_argument);
  const AugmentedQuerySet aug =
      AugmentComplements(RandomMatrix(3, 3, 7, 0.0, 1.0));
  LazyEmOptions mismatched;
  mismatched.augmentation = &aug;
  EXPECT_THROW(LazyEm(*index, query, 3, {1, 1}, mismatched, rng),
               std::invalid_argument);
}

// An IVF index probing a single cell returns an approximate set. With the
// measured slack as the trusted bound the output law is the exact softmax.
TEST(LazyEmTest, PrivateModeOverApproximateIndexMatchesSoftmax) {
  const size_t n = 60;
  const Matrix vectors = RandomMatrix(n, 4, 51);
  IndexConfig config;
  config.flavor = IndexFlavor::kIvf;
  config.nlist = 6;
  config.nprobe = 1;
  const auto index = BuildIndex(vectors, config);
  const std::vector<double> query = {1.0, 0.5, -0.5, 0.2};
  const Matrix query_matrix(1, 4, query);
  const size_t k = 8;
  const double slack = MeasureSlack(*index, query_matrix, k);
  ASSERT_GT(slack, 0.0);

  const EmConfig cfg{2.0, 0.5};
  std::vector<double> scaled(n);
  for (size_t i = 0; i < n; ++i) {
    scaled[i] = cfg.Scale() * Dot(vectors.row(i), query);
  }
  const auto probs = Softmax(scaled);

  LazyEmOptions options;
  options.mode = EmMode::kPrivate;
  options.slack = slack;
  Rng rng(52);
  std::vector<uint64_t> counts(n, 0);
  const size_t draws = 200000;
  for (size_t t = 0; t < draws; ++t) {
    ++counts[LazyEm(*index, query, k, cfg, options, rng).candidate];
  }
  EXPECT_LT(TotalVariation(counts, probs), 0.01);
  EXPECT_GT(ChiSquarePValue(counts, probs), 0.001);
}

TEST(BudgetTest, MwemExample) {
  const PrivacyBudget b = ComposeBudget(1.0, 1e-3, 100);
  EXPECT_NEAR(b.epsilon0, 0.038048, 1e-6);
  const double independent = 1.0 / std::sqrt(100.0 * std::log(1000.0));
  EXPECT_NEAR(b.epsilon0 / independent, 1.0, 1e-12);
  EXPECT_EQ(b.iterations, 100u);
  EXPECT_EQ(b.ReportedDelta(), 1e-3);
}

TEST(BudgetTest, SingleIterationAtDeltaOneOverE) {
  const PrivacyBudget b = ComposeBudget(0.7, std::exp(-1.0), 1);
  EXPECT_NEAR(b.epsilon0, 0.7, 1e-12);
}

TEST(BudgetTest, LpVariants) {
  const double scalar =
      ComposeBudget(1.0, 1e-3, 100, 0.0, CompositionRule::kScalarLp).epsilon0;
  EXPECT_NEAR(scalar / (1.0 / std::sqrt(800.0 * std::log(1000.0))), 1.0,
              1e-12);
  EXPECT_NEAR(scalar, 0.013452, 1e-6);
  const double dense =
      ComposeBudget(2.0, 1e-4, 50, 0.0, CompositionRule::kDenseLp).epsilon0;
  EXPECT_NEAR(dense / (2.0 / std::sqrt(100.0 * std::log(1e4))), 1.0, 1e-12);
}

TEST(BudgetTest, ExtraDeltaIsReported) {
  const PrivacyBudget b = ComposeBudget(1.0, 1e-3, 10, 1.0 / 200);
  EXPECT_NEAR(b.ReportedDelta(), 1e-3 + 0.005, 1e-15);
}

TEST(BudgetTest, Rejections) {
  EXPECT_THROW(ComposeBudget(1.0, 1.0, 10), std::invalid_argument);
  EXPECT_THROW(ComposeBudget(1.0, 2.0, 10), std::invalid_argument);
  EXPECT_THROW(ComposeBudget(1.0, 0.0, 10), std::invalid_argument);
  EXPECT_THROW(ComposeBudget(0.0, 0.1, 10), std::invalid_argument);
  EXPECT_THROW(ComposeBudget(1.0, 0.1, 0), std::invalid_argument);
  EXPECT_THROW(ComposeBudget(1.0, 0.1, 5, -1.0), std::invalid_argument);
}

TEST(BudgetTest, AdvancedComposition) {
  const double e0 = 0.01;
  const double expected =
      e0 * std::sqrt(2.0 * 300 * std::log(1.0 / 1e-5)) + 2.0 * 300 * e0 * e0;
  EXPECT_NEAR(AdvancedCompositionEpsilon(e0, 300, 1e-5) / expected, 1.0,
              1e-12);
  // With the simplified per-call budget the full composition evaluates to
  // sqrt(2) * eps + 2 * eps^2 / ln(1/delta).
  const PrivacyBudget b = ComposeBudget(1.0, 1e-3, 2000);
  EXPECT_NEAR(AdvancedCompositionEpsilon(b.epsilon0, 2000, 1e-3),
              std::sqrt(2.0) + 2.0 / std::log(1000.0), 1e-12);
}

TEST(BudgetTest, RuntimeModeCallEpsilon) {
  const EmConfig cfg{0.1, 0.01};
  EXPECT_NEAR(RuntimeModeCallEpsilon(cfg, 0.02), 0.1 + 2.0 * 0.02 * 5.0,
              1e-12);
  EXPECT_NEAR(RuntimeModeCallEpsilon(cfg, 0.0), 0.1, 1e-15);
}

}  // namespace
}  // namespace fastmwem
