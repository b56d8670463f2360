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

#ifndef FASTMWEM_LPSOLVE_H_
#define FASTMWEM_LPSOLVE_H_

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fastmwem/matrix.h"
#include "fastmwem/mechanism.h"
#include "fastmwem/mips.h"
#include "fastmwem/rng.h"

namespace fastmwem {

// Feasibility LP: find x with A x <= b (plus the solver's own domain
// constraint). `rho` is the width bound the solver scales losses by.
struct LpInstance {
  Matrix a;
  std::vector<double> b;
  std::vector<double> c;
  double delta_inf = 0.0;
  double rho = 0.0;
  double opt = 0.0;

  size_t constraints() const { return a.rows(); }
  size_t variables() const { return a.cols(); }

  // Throws std::invalid_argument on inconsistent sizes or non-finite values.
  void Validate() const;
};

// Text format: "m d", then A row-major, b, c, and "delta_inf rho opt",
// whitespace separated with 17 significant digits.
void WriteLp(const LpInstance& lp, std::ostream& out);
// Throws std::runtime_error on malformed input.
LpInstance ReadLp(std::istream& in);

struct FeasibilityReport {
  std::vector<double> x;
  // Every constraint with A_i x - b_i > 0, as (id, slack), by id.
  std::vector<std::pair<size_t, double>> violations;
  size_t iterations = 0;
  // Mean candidates scored per selection (k + C, or all candidates).
  double mean_samples = 0.0;
  int64_t build_nanos = 0;
  int64_t solve_nanos = 0;
  PrivacyBudget budget;

  // Constraints with slack above alpha.
  size_t ViolatedCountAt(double alpha) const;
};

// Recomputes violations of `x` against the instance.
std::vector<std::pair<size_t, double>> ComputeViolations(
    const LpInstance& lp, std::span<const double> x);

struct LpSolveOptions {
  // Score every candidate with the exact mechanism instead of LazyEm.
  bool exhaustive = false;
  IndexConfig index;
  EmMode mode = EmMode::kExactSet;
  // Trusted slack bound (raw score units) for EmMode::kPrivate.
  double slack = 0.0;
  // 0 derives the iteration count from alpha.
  size_t iterations = 0;
};

// Private multiplicative weights over the simplex, selecting the most
// violated constraint with sensitivity delta_inf. T = ceil(9 rho^2 ln d /
// alpha^2), eta = sqrt(ln d / T), epsilon0 = epsilon / sqrt(8 T ln(1/delta)).
// Throws std::invalid_argument for alpha <= 0, rho <= 0, rho below
// max |A_ij|, delta_inf <= 0 or d < 2.
FeasibilityReport ScalarPrivateSolve(const LpInstance& lp, double alpha,
                                     double epsilon, double delta,
                                     const LpSolveOptions& options, Rng& rng);

struct DenseDistribution {
  std::vector<double> mass;
  // 1 / s.
  double density_bound = 0.0;
  // Scaling c with sum_a min(1, c y_a) = s.
  double scale = 0.0;
};

// KL projection onto 1/s-dense distributions: (1/s) min(1, c y_a). Exact
// sort-based solve for c. Throws std::invalid_argument for negative or
// non-finite entries, s outside [1, size], or fewer than s positive entries.
DenseDistribution BregmanProject(std::span<const double> y, double s);

struct ProjectionDistance {
  // ||P - P'||_1 over all coordinates (P padded with 0 at the new one).
  double l1 = 0.0;
  // L1 over the shared coordinates only.
  double shared_l1 = 0.0;
  // P' mass on the added coordinate.
  double new_mass = 0.0;
};

// Distance between the projections of y and of y with one coordinate
// appended. Throws std::invalid_argument unless y_prime extends y by exactly
// one entry with the shared entries equal.
ProjectionDistance BregmanSensitivityCheck(std::span<const double> y,
                                           std::span<const double> y_prime,
                                           double s);

// Index rows N_j = -(OPT / c_j) A_{:,j}, one per variable.
Matrix DualOracleVectors(const LpInstance& lp);

// One private dual-oracle call: picks j with score <y, N_j> and sensitivity
// 3 OPT / (c_min s). Returns j; the vertex is (OPT / c_j) e_j. With a null
// index the exact mechanism scores all d candidates. Throws
// std::invalid_argument for non-positive c or a dimension mismatch.
size_t DualOracleEm(std::span<const double> y, double s, const LpInstance& lp,
                    double epsilon_prime, const MipsIndex* index, size_t k,
                    const LpSolveOptions& options, Rng& rng);

// OPT / c_min - b_max.
double DualOracleWidth(const LpInstance& lp);

struct DenseMwuReport {
  FeasibilityReport report;
  double s = 0.0;
  double eta = 0.0;
  double sensitivity = 0.0;
  double oracle_width = 0.0;
};

// Constraint-private dense MWU over packing instances (A in [0, 1], c > 0).
// Loss (A_i x - b_i + rho) / (2 rho), weights y <- y exp(eta loss), then
// projection to 1/s-dense. T = ceil(16 rho^2 ln m / alpha^2),
// eta = min(1/2, sqrt(ln m / T)), epsilon' = epsilon / sqrt(2 T ln(1/delta)).
// Throws std::invalid_argument for non-packing input, s outside [1, m], or
// std::domain_error when a loss leaves [0, 1] (the width bound is wrong).
DenseMwuReport DenseMwuSolve(const LpInstance& lp, double alpha,
                             double epsilon, double delta, double s,
                             const LpSolveOptions& options, Rng& rng);

struct ProbeOutcome {
  bool feasible = false;
  FeasibilityReport report;
};

struct BinarySearchResult {
  // Largest probed value judged feasible (the bracket low end if none was).
  double opt_estimate = 0.0;
  std::optional<FeasibilityReport> report;
  size_t probes = 0;
  double total_epsilon = 0.0;
};

// Bisection on OPT over [lo, hi] until the bracket is at most `tolerance`
// wide: ceil(log2((hi - lo) / tolerance)) probes. Each probe is an
// independent private solve costing `probe_epsilon`. Throws
// std::invalid_argument for lo >= hi, tolerance <= 0 or probe_epsilon <= 0.
BinarySearchResult FeasibilityBinarySearch(
    double lo, double hi, double tolerance, double probe_epsilon,
    const std::function<ProbeOutcome(double opt, Rng&)>& probe, Rng& rng);

}  // namespace fastmwem

#endif  // FASTMWEM_LPSOLVE_H_
