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

#ifndef FASTMWEM_MWEM_H_
#define FASTMWEM_MWEM_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fastmwem/matrix.h"
#include "fastmwem/mechanism.h"
#include "fastmwem/mips.h"
#include "fastmwem/rng.h"

namespace fastmwem {

// Empirical distribution of n records over a finite domain.
struct Histogram {
  std::vector<double> mass;
  size_t n_source = 0;

  size_t domain_size() const { return mass.size(); }
};

// Throws std::invalid_argument for an empty record list, a zero domain or a
// record outside [0, domain_size).
Histogram BuildHistogram(std::span<const size_t> records, size_t domain_size);

// max_i |<q_i, p_hat - h>|. Throws std::invalid_argument on a dimension
// mismatch.
double MaxError(const Matrix& queries, std::span<const double> p_hat,
                std::span<const double> h);

struct MwemParams {
  double alpha = 0.1;
  double epsilon = 1.0;
  double delta = 1e-3;
  // 0 derives ceil(4 ln m / alpha^2).
  size_t iterations = 0;
  // 0 derives ceil(sqrt(2m)), the lazy set size over the augmented queries.
  size_t k = 0;
  // Apply w <- w * exp(-eta * q) as printed instead of the error-reducing
  // w <- w * exp(+eta * q).
  bool literal_update_sign = false;
  // Evaluate the max error after every iteration. Costs O(m |X|) per
  // iteration outside the timed region.
  bool track_error = true;
};

// Parameters after derivation for a concrete instance.
struct ResolvedMwem {
  size_t iterations = 0;
  double eta = 0.0;
  size_t k = 0;
  // 1 / n.
  double sensitivity = 0.0;
  PrivacyBudget budget;
};

// Throws std::invalid_argument for alpha <= 0, m = 0, a domain smaller than
// 2, n = 0 or an invalid privacy budget.
ResolvedMwem ResolveMwem(const MwemParams& params, size_t m, size_t domain,
                         size_t n);

struct IterationRecord {
  size_t iteration = 0;
  // Max error of the running average of iterates (the output if the run
  // stopped here). NaN when error tracking is off.
  double error = 0.0;
  // Max error of the current iterate p_hat.
  double iterate_error = 0.0;
  size_t selected = 0;
  int sign = 1;
  // Scored candidates: k + C for the lazy mechanism, 2m for the exact one.
  size_t samples_drawn = 0;
  size_t extra_samples = 0;
  double margin = 0.0;
  // Whole iteration (query vector, selection, weight update).
  int64_t wall_nanos = 0;
  // Selection step only.
  int64_t selection_nanos = 0;
};

struct MwemResult {
  // Average of the T iterates.
  std::vector<double> synthetic;
  std::vector<IterationRecord> trace;
  double initial_error = 0.0;
  double final_error = 0.0;
  int64_t build_nanos = 0;
  ResolvedMwem params;
  // Largest slack of the index answer seen over the run, when measured.
  double observed_slack = 0.0;
};

// MWEM with the exact exponential mechanism over the complement-augmented
// query set. Throws std::invalid_argument for query entries outside [0, 1],
// dimension mismatches or invalid parameters.
MwemResult MwemClassic(const Matrix& queries, const Histogram& h,
                       const MwemParams& params, Rng& rng);

struct FastMwemOptions {
  IndexConfig index;
  EmMode mode = EmMode::kExactSet;
  // Trusted slack bound (raw score units) for EmMode::kPrivate.
  double slack = 0.0;
  // Recompute the true slack of each index answer (O(m |X|), untimed).
  bool measure_slack = false;
};

// MWEM with LazyEm over a k-MIPS index on the augmented queries, queried
// with h - p_hat each iteration. Same errors as MwemClassic.
MwemResult FastMwem(const Matrix& queries, const Histogram& h,
                    const MwemParams& params, const FastMwemOptions& options,
                    Rng& rng);

}  // namespace fastmwem

#endif  // FASTMWEM_MWEM_H_
