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

#ifndef FASTMWEM_MECHANISM_H_
#define FASTMWEM_MECHANISM_H_

#include <cstddef>
#include <span>
#include <vector>

#include "fastmwem/gumbel.h"
#include "fastmwem/matrix.h"
#include "fastmwem/mips.h"
#include "fastmwem/rng.h"

namespace fastmwem {

// Exponential mechanism parameters: candidate i is selected with probability
// proportional to exp(epsilon0 * score_i / (2 * sensitivity)).
struct EmConfig {
  double epsilon0 = 1.0;
  double sensitivity = 1.0;

  // epsilon0 / (2 * sensitivity).
  double Scale() const { return epsilon0 / (2.0 * sensitivity); }
  // Throws std::invalid_argument unless both fields are finite and positive.
  void Validate() const;
};

// Exact exponential mechanism over materialized scores. O(n).
// Throws std::invalid_argument for empty or non-finite scores.
size_t EmExact(std::span<const double> scores, const EmConfig& config,
               Rng& rng);

// A query set closed under complements. Row i < m of `augmented` is q_i and
// row m + i is 1 - q_i.
struct AugmentedQuerySet {
  Matrix base;
  Matrix augmented;

  struct Origin {
    size_t id = 0;
    int sign = 1;
  };

  size_t base_count() const { return base.rows(); }
  // Original query id and direction for an augmented id.
  Origin BackMap(size_t augmented_id) const;
};

// Throws std::invalid_argument if an entry lies outside [0, 1].
AugmentedQuerySet AugmentComplements(const Matrix& queries);

// Candidate-set treatment for LazyEm.
enum class EmMode {
  // Trust the index answer as the exact top-k.
  kExactSet,
  // Approximate index, unchanged margin. Privacy degrades to epsilon0 + 2c'
  // per call, where c' is the slack in log-weight units.
  kRuntime,
  // Approximate index with a trusted slack bound; margin lowered by c'.
  kPrivate,
};

// Inner-product scores scale * <v_i, query> over the rows of an index,
// computed on demand. Counts Score() calls.
class InnerProductScores final : public ScoreSource {
 public:
  InnerProductScores(const Matrix& vectors, std::span<const double> query,
                     double scale)
      : vectors_(vectors), query_(query), scale_(scale) {}

  size_t size() const override { return vectors_.rows(); }
  double Score(size_t i) const override {
    ++evaluations_;
    return scale_ * Dot(vectors_.row(i), query_);
  }
  size_t evaluations() const { return evaluations_; }

 private:
  const Matrix& vectors_;
  std::span<const double> query_;
  double scale_;
  mutable size_t evaluations_ = 0;
};

struct LazyEmResult {
  // Winner as an index row id.
  size_t candidate = 0;
  // Winner mapped through the augmentation, or {candidate, +1} without one.
  AugmentedQuerySet::Origin origin;
  SelectionResult selection;
  // Score computations by the sampler (set plus off-set draws).
  size_t score_evaluations = 0;
  // Vector evaluations reported by the index query.
  size_t index_evaluations = 0;
  // k + C.
  size_t samples_drawn = 0;
};

struct LazyEmOptions {
  EmMode mode = EmMode::kExactSet;
  // Slack bound in raw inner-product units; used by kPrivate only.
  double slack = 0.0;
  // When set, the index rows are `augmentation->augmented` and the winner is
  // mapped back to an original id and sign.
  const AugmentedQuerySet* augmentation = nullptr;
};

// Index-accelerated exponential mechanism over scores <N_i, query>, N_i the
// index rows. Only the returned top-k and the sampled stragglers are scored.
// Throws std::invalid_argument if k is 0 or exceeds the candidate count, if
// the augmentation does not match the index, or for kPrivate with a negative
// slack.
LazyEmResult LazyEm(const MipsIndex& index, std::span<const double> query,
                    size_t k, const EmConfig& config,
                    const LazyEmOptions& options, Rng& rng);

// Which iteration-count multiplier the per-call budget uses.
enum class CompositionRule {
  // epsilon / sqrt(T ln(1/delta)).
  kMwem,
  // epsilon / sqrt(8 T ln(1/delta)), the scalar-private LP solver.
  kScalarLp,
  // epsilon / sqrt(2 T ln(1/delta)), the dense MWU dual oracle.
  kDenseLp,
};

struct PrivacyBudget {
  double epsilon_total = 0.0;
  double delta_total = 0.0;
  double epsilon0 = 0.0;
  size_t iterations = 0;
  // Failure mass of the index, added to the reported delta.
  double extra_delta = 0.0;
  CompositionRule rule = CompositionRule::kMwem;

  double ReportedDelta() const { return delta_total + extra_delta; }
};

// Throws std::invalid_argument unless epsilon > 0, 0 < delta < 1,
// iterations >= 1 and extra_delta >= 0.
PrivacyBudget ComposeBudget(double epsilon, double delta, size_t iterations,
                            double extra_delta = 0.0,
                            CompositionRule rule = CompositionRule::kMwem);

// Epsilon of k-fold adaptive composition of epsilon0-DP mechanisms:
// epsilon0 * sqrt(2 k ln(1/delta_prime)) + 2 k epsilon0^2.
double AdvancedCompositionEpsilon(double epsilon0, size_t k,
                                  double delta_prime);

// Per-call privacy of LazyEm in kRuntime mode with slack `slack` (raw score
// units): epsilon0 + 2 * slack * Scale().
double RuntimeModeCallEpsilon(const EmConfig& config, double slack);

}  // namespace fastmwem

#endif  // FASTMWEM_MECHANISM_H_
