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
#include <stdexcept>

namespace fastmwem {

void EmConfig::Validate() const {
  if (!(std::isfinite(epsilon0) && epsilon0 > 0.0)) {
    throw std::invalid_argument("EmConfig: epsilon0 must be positive");
  }
  if (!(std::isfinite(sensitivity) && sensitivity > 0.0)) {
    throw std::invalid_argument("EmConfig: sensitivity must be positive");
  }
}

size_t EmExact(std::span<const double> scores, const EmConfig& config,
               Rng& rng) {
  config.Validate();
  const double scale = config.Scale();
  std::vector<double> scaled(scores.begin(), scores.end());
  for (double& x : scaled) x *= scale;
  return GumbelMaxExact(ScoreList(std::move(scaled)), rng).winner;
}

AugmentedQuerySet::Origin AugmentedQuerySet::BackMap(
    size_t augmented_id) const {
  const size_t m = base_count();
  if (augmented_id >= 2 * m) {
    throw std::out_of_range("AugmentedQuerySet::BackMap: id out of range");
  }
  if (augmented_id < m) return {augmented_id, 1};
  return {augmented_id - m, -1};
}

AugmentedQuerySet AugmentComplements(const Matrix& queries) {
  for (double v : queries.data()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument(
          "AugmentComplements: query entries must lie in [0, 1]");
    }
  }
  const size_t m = queries.rows();
  const size_t u = queries.cols();
  AugmentedQuerySet out;
  out.base = queries;
  out.augmented = Matrix(2 * m, u);
  for (size_t i = 0; i < m; ++i) {
    for (size_t x = 0; x < u; ++x) {
      out.augmented(i, x) = queries(i, x);
      out.augmented(m + i, x) = 1.0 - queries(i, x);
    }
  }
  return out;
}

LazyEmResult LazyEm(const MipsIndex& index, std::span<const double> query,
                    size_t k, const EmConfig& config,
                    const LazyEmOptions& options, Rng& rng) {
  config.Validate();
  if (k == 0 || k > index.size()) {
    throw std::invalid_argument("LazyEm: k must lie in [1, candidate count]");
  }
  if (options.augmentation != nullptr &&
      options.augmentation->augmented.rows() != index.size()) {
    throw std::invalid_argument("LazyEm: augmentation does not match index");
  }
  if (options.mode == EmMode::kPrivate && !(options.slack >= 0.0)) {
    throw std::invalid_argument("LazyEm: slack must be nonnegative");
  }

  const TopKResult answer = index.Query(query, k);
  const double scale = config.Scale();
  InnerProductScores scores(index.vectors(), query, scale);

  TopKSet top{answer.indices, std::nullopt};
  LazyMode mode = LazyMode::kExact;
  switch (options.mode) {
    case EmMode::kExactSet:
      break;
    case EmMode::kRuntime:
      mode = LazyMode::kRuntimePreserving;
      break;
    case EmMode::kPrivate:
      mode = LazyMode::kPrivacyPreserving;
      top.slack = options.slack * scale;
      break;
  }

  LazyEmResult result;
  result.selection = LazyGumbelSample(scores, top, mode, rng);
  result.candidate = result.selection.winner;
  result.origin = options.augmentation != nullptr
                      ? options.augmentation->BackMap(result.candidate)
                      : AugmentedQuerySet::Origin{result.candidate, 1};
  result.score_evaluations = scores.evaluations();
  result.index_evaluations = answer.evaluations;
  result.samples_drawn = k + result.selection.extra_samples;
  return result;
}

PrivacyBudget ComposeBudget(double epsilon, double delta, size_t iterations,
                            double extra_delta, CompositionRule rule) {
  if (!(std::isfinite(epsilon) && epsilon > 0.0)) {
    throw std::invalid_argument("ComposeBudget: epsilon must be positive");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("ComposeBudget: delta must lie in (0, 1)");
  }
  if (iterations == 0) {
    throw std::invalid_argument("ComposeBudget: need at least one iteration");
  }
  if (!(extra_delta >= 0.0)) {
    throw std::invalid_argument("ComposeBudget: extra_delta must be >= 0");
  }
  double factor = 1.0;
  if (rule == CompositionRule::kScalarLp) factor = 8.0;
  if (rule == CompositionRule::kDenseLp) factor = 2.0;

  PrivacyBudget budget;
  budget.epsilon_total = epsilon;
  budget.delta_total = delta;
  budget.iterations = iterations;
  budget.extra_delta = extra_delta;
  budget.rule = rule;
  budget.epsilon0 =
      epsilon / std::sqrt(factor * static_cast<double>(iterations) *
                          std::log(1.0 / delta));
  return budget;
}

double AdvancedCompositionEpsilon(double epsilon0, size_t k,
                                  double delta_prime) {
  if (!(delta_prime > 0.0 && delta_prime < 1.0)) {
    throw std::invalid_argument(
        "AdvancedCompositionEpsilon: delta_prime must lie in (0, 1)");
  }
  const double kd = static_cast<double>(k);
  return epsilon0 * std::sqrt(2.0 * kd * std::log(1.0 / delta_prime)) +
         2.0 * kd * epsilon0 * epsilon0;
}

double RuntimeModeCallEpsilon(const EmConfig& config, double slack) {
  return config.epsilon0 + 2.0 * slack * config.Scale();
}

}  // namespace fastmwem
