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

#include "fastmwem/lpsolve.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace fastmwem {
namespace {

using Clock = std::chrono::steady_clock;

int64_t NanosSince(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() -
                                                              start)
      .count();
}

size_t CeilSqrt(size_t n) {
  return static_cast<size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
}

double ReadNumber(std::istream& in, const char* what) {
  std::string token;
  if (!(in >> token)) {
    throw std::runtime_error(std::string("ReadLp: missing ") + what);
  }
  size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(token, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != token.size() || !std::isfinite(value)) {
    throw std::runtime_error("ReadLp: bad number '" + token + "' in " + what);
  }
  return value;
}

// Selection shared by both solvers: exhaustive exact mechanism or LazyEm.
size_t Select(const Matrix& vectors, const MipsIndex* index,
              std::span<const double> query, size_t k, const EmConfig& em,
              const LpSolveOptions& options, Rng& rng, double& samples) {
  if (options.exhaustive || index == nullptr) {
    std::vector<double> scores(vectors.rows());
    for (size_t i = 0; i < scores.size(); ++i) {
      scores[i] = Dot(vectors.row(i), query);
    }
    samples += static_cast<double>(scores.size());
    return EmExact(scores, em, rng);
  }
  LazyEmOptions lazy;
  lazy.mode = options.mode;
  lazy.slack = options.slack;
  const LazyEmResult pick = LazyEm(*index, query, k, em, lazy, rng);
  samples += static_cast<double>(pick.samples_drawn);
  return pick.candidate;
}

}  // namespace

void LpInstance::Validate() const {
  if (a.rows() == 0 || a.cols() == 0) {
    throw std::invalid_argument("LpInstance: empty constraint matrix");
  }
  if (b.size() != a.rows()) {
    throw std::invalid_argument("LpInstance: b length differs from m");
  }
  if (c.size() != a.cols()) {
    throw std::invalid_argument("LpInstance: c length differs from d");
  }
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(a.data().begin(), a.data().end(), finite) ||
      !std::all_of(b.begin(), b.end(), finite) ||
      !std::all_of(c.begin(), c.end(), finite) || !std::isfinite(delta_inf) ||
      !std::isfinite(rho) || !std::isfinite(opt)) {
    throw std::invalid_argument("LpInstance: non-finite value");
  }
}

void WriteLp(const LpInstance& lp, std::ostream& out) {
  lp.Validate();
  const auto old_precision = out.precision(17);
  const size_t m = lp.constraints();
  const size_t d = lp.variables();
  out << m << ' ' << d << '\n';
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = 0; j < d; ++j) out << (j ? " " : "") << lp.a(i, j);
    out << '\n';
  }
  for (size_t i = 0; i < m; ++i) out << (i ? " " : "") << lp.b[i];
  out << '\n';
  for (size_t j = 0; j < d; ++j) out << (j ? " " : "") << lp.c[j];
  out << '\n' << lp.delta_inf << ' ' << lp.rho << ' ' << lp.opt << '\n';
  out.precision(old_precision);
  if (!out) throw std::runtime_error("WriteLp: write failed");
}

LpInstance ReadLp(std::istream& in) {
  long long m = 0;
  long long d = 0;
  if (!(in >> m >> d) || m <= 0 || d <= 0 || m > (1LL << 32) / d) {
    throw std::runtime_error("ReadLp: bad header");
  }
  LpInstance lp;
  lp.a = Matrix(static_cast<size_t>(m), static_cast<size_t>(d));
  for (long long i = 0; i < m; ++i) {
    for (long long j = 0; j < d; ++j) lp.a(i, j) = ReadNumber(in, "A");
  }
  lp.b.resize(m);
  for (double& v : lp.b) v = ReadNumber(in, "b");
  lp.c.resize(d);
  for (double& v : lp.c) v = ReadNumber(in, "c");
  lp.delta_inf = ReadNumber(in, "delta_inf");
  lp.rho = ReadNumber(in, "rho");
  lp.opt = ReadNumber(in, "opt");
  std::string extra;
  if (in >> extra) throw std::runtime_error("ReadLp: trailing data");
  return lp;
}

size_t FeasibilityReport::ViolatedCountAt(double alpha) const {
  return static_cast<size_t>(
      std::count_if(violations.begin(), violations.end(),
                    [alpha](const auto& v) { return v.second > alpha; }));
}

std::vector<std::pair<size_t, double>> ComputeViolations(
    const LpInstance& lp, std::span<const double> x) {
  if (x.size() != lp.variables()) {
    throw std::invalid_argument("ComputeViolations: dimension mismatch");
  }
  std::vector<std::pair<size_t, double>> out;
  for (size_t i = 0; i < lp.constraints(); ++i) {
    const double slack = Dot(lp.a.row(i), x) - lp.b[i];
    if (slack > 0.0) out.emplace_back(i, slack);
  }
  return out;
}

FeasibilityReport ScalarPrivateSolve(const LpInstance& lp, double alpha,
                                     double epsilon, double delta,
                                     const LpSolveOptions& options, Rng& rng) {
  lp.Validate();
  const size_t m = lp.constraints();
  const size_t d = lp.variables();
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (!(lp.rho > 0.0)) throw std::invalid_argument("rho must be positive");
  if (!(lp.delta_inf > 0.0)) {
    throw std::invalid_argument("delta_inf must be positive");
  }
  if (d < 2) throw std::invalid_argument("need at least two variables");
  double max_abs = 0.0;
  for (double v : lp.a.data()) max_abs = std::max(max_abs, std::abs(v));
  if (lp.rho < max_abs) {
    throw std::invalid_argument("rho is below max |A_ij|");
  }

  size_t iterations = options.iterations;
  if (iterations == 0) {
    iterations = static_cast<size_t>(std::ceil(
        9.0 * lp.rho * lp.rho * std::log(static_cast<double>(d)) /
        (alpha * alpha)));
    iterations = std::max<size_t>(iterations, 1);
  }
  const double eta = std::sqrt(std::log(static_cast<double>(d)) /
                               static_cast<double>(iterations));

  FeasibilityReport report;
  report.iterations = iterations;
  report.budget = ComposeBudget(epsilon, delta, iterations, 0.0,
                                CompositionRule::kScalarLp);
  const EmConfig em{report.budget.epsilon0, lp.delta_inf};

  // Rows A_i o b_i, queried with x o (-1).
  Matrix vectors(m, d + 1);
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = 0; j < d; ++j) vectors(i, j) = lp.a(i, j);
    vectors(i, d) = lp.b[i];
  }
  std::unique_ptr<MipsIndex> index;
  if (!options.exhaustive) {
    const auto build_start = Clock::now();
    index = BuildIndex(vectors, options.index);
    report.build_nanos = NanosSince(build_start);
  }
  const size_t k = std::min(CeilSqrt(m), m);

  const auto solve_start = Clock::now();
  std::vector<double> log_weights(d, 0.0);
  std::vector<double> x(d, 1.0 / static_cast<double>(d));
  std::vector<double> sum(d, 0.0);
  std::vector<double> query(d + 1, -1.0);
  double samples = 0.0;
  for (size_t t = 0; t < iterations; ++t) {
    for (size_t j = 0; j < d; ++j) {
      sum[j] += x[j];
      query[j] = x[j];
    }
    const size_t p =
        Select(vectors, index.get(), query, k, em, options, rng, samples);
    for (size_t j = 0; j < d; ++j) log_weights[j] -= eta * lp.a(p, j) / lp.rho;
    const double top =
        *std::max_element(log_weights.begin(), log_weights.end());
    double total = 0.0;
    for (size_t j = 0; j < d; ++j) {
      x[j] = std::exp(log_weights[j] - top);
      total += x[j];
    }
    for (double& v : x) v /= total;
  }
  report.solve_nanos = NanosSince(solve_start);

  report.x.resize(d);
  for (size_t j = 0; j < d; ++j) {
    report.x[j] = sum[j] / static_cast<double>(iterations);
  }
  report.violations = ComputeViolations(lp, report.x);
  report.mean_samples = samples / static_cast<double>(iterations);
  return report;
}

DenseDistribution BregmanProject(std::span<const double> y, double s) {
  const size_t n = y.size();
  if (!(s >= 1.0 && s <= static_cast<double>(n))) {
    throw std::invalid_argument("BregmanProject: s must lie in [1, m]");
  }
  std::vector<double> sorted;
  sorted.reserve(n);
  for (double v : y) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("BregmanProject: entries must be finite, >= 0");
    }
    if (v > 0.0) sorted.push_back(v);
  }
  const double positives = static_cast<double>(sorted.size());
  if (positives < s) {
    throw std::invalid_argument(
        "BregmanProject: fewer than s positive entries");
  }
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  // tail[r] = sum of sorted[r..].
  std::vector<double> tail(sorted.size() + 1, 0.0);
  for (size_t r = sorted.size(); r-- > 0;) tail[r] = tail[r + 1] + sorted[r];

  DenseDistribution out;
  out.density_bound = 1.0 / s;
  out.mass.assign(n, 0.0);
  // With r entries capped at 1 the rest satisfy c * tail[r] = s - r; the
  // answer is the first r whose largest uncapped entry stays below the cap.
  double scale = std::numeric_limits<double>::infinity();
  for (size_t r = 0; r < sorted.size() && static_cast<double>(r) < s; ++r) {
    const double candidate = (s - static_cast<double>(r)) / tail[r];
    if (candidate * sorted[r] <= 1.0) {
      scale = candidate;
      break;
    }
  }
  out.scale = scale;
  for (size_t a = 0; a < n; ++a) {
    // An infinite scale means s equals the support size: uniform on it.
    const double capped = y[a] > 0.0 ? std::min(1.0, scale * y[a]) : 0.0;
    out.mass[a] = capped / s;
  }
  return out;
}

ProjectionDistance BregmanSensitivityCheck(std::span<const double> y,
                                           std::span<const double> y_prime,
                                           double s) {
  if (y_prime.size() != y.size() + 1 ||
      !std::equal(y.begin(), y.end(), y_prime.begin())) {
    throw std::invalid_argument(
        "BregmanSensitivityCheck: y_prime must extend y by one coordinate");
  }
  const DenseDistribution p = BregmanProject(y, s);
  const DenseDistribution q = BregmanProject(y_prime, s);
  ProjectionDistance out;
  for (size_t a = 0; a < y.size(); ++a) {
    out.shared_l1 += std::abs(p.mass[a] - q.mass[a]);
  }
  out.new_mass = q.mass.back();
  out.l1 = out.shared_l1 + out.new_mass;
  return out;
}

Matrix DualOracleVectors(const LpInstance& lp) {
  const size_t m = lp.constraints();
  const size_t d = lp.variables();
  Matrix out(d, m);
  for (size_t j = 0; j < d; ++j) {
    if (!(lp.c[j] > 0.0)) {
      throw std::invalid_argument("dual oracle: c must be positive");
    }
    const double factor = -lp.opt / lp.c[j];
    for (size_t i = 0; i < m; ++i) out(j, i) = factor * lp.a(i, j);
  }
  return out;
}

double DualOracleWidth(const LpInstance& lp) {
  const double c_min = *std::min_element(lp.c.begin(), lp.c.end());
  const double b_max = *std::max_element(lp.b.begin(), lp.b.end());
  return lp.opt / c_min - b_max;
}

namespace {

double DualSensitivity(const LpInstance& lp, double s) {
  const double c_min = *std::min_element(lp.c.begin(), lp.c.end());
  return 3.0 * lp.opt / (c_min * s);
}

}  // namespace

size_t DualOracleEm(std::span<const double> y, double s, const LpInstance& lp,
                    double epsilon_prime, const MipsIndex* index, size_t k,
                    const LpSolveOptions& options, Rng& rng) {
  if (y.size() != lp.constraints()) {
    throw std::invalid_argument("DualOracleEm: y length differs from m");
  }
  Matrix owned;
  if (index == nullptr) owned = DualOracleVectors(lp);
  const Matrix& vectors = index != nullptr ? index->vectors() : owned;
  const EmConfig em{epsilon_prime, DualSensitivity(lp, s)};
  double samples = 0.0;
  return Select(vectors, index, y, k, em, options, rng, samples);
}

DenseMwuReport DenseMwuSolve(const LpInstance& lp, double alpha,
                             double epsilon, double delta, double s,
                             const LpSolveOptions& options, Rng& rng) {
  lp.Validate();
  const size_t m = lp.constraints();
  const size_t d = lp.variables();
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (!(lp.rho > 0.0)) throw std::invalid_argument("rho must be positive");
  if (!(lp.opt > 0.0)) throw std::invalid_argument("OPT must be positive");
  if (!(s >= 1.0 && s <= static_cast<double>(m))) {
    throw std::invalid_argument("s must lie in [1, m]");
  }
  for (double v : lp.a.data()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("dense MWU needs A entries in [0, 1]");
    }
  }
  const Matrix vectors = DualOracleVectors(lp);

  size_t iterations = options.iterations;
  if (iterations == 0) {
    iterations = static_cast<size_t>(std::ceil(
        16.0 * lp.rho * lp.rho * std::log(static_cast<double>(m)) /
        (alpha * alpha)));
    iterations = std::max<size_t>(iterations, 1);
  }
  DenseMwuReport out;
  out.s = s;
  out.eta = std::min(0.5, std::sqrt(std::log(static_cast<double>(m)) /
                                    static_cast<double>(iterations)));
  out.sensitivity = DualSensitivity(lp, s);
  out.oracle_width = DualOracleWidth(lp);
  FeasibilityReport& report = out.report;
  report.iterations = iterations;
  report.budget = ComposeBudget(epsilon, delta, iterations, 0.0,
                                CompositionRule::kDenseLp);
  const EmConfig em{report.budget.epsilon0, out.sensitivity};

  std::unique_ptr<MipsIndex> index;
  if (!options.exhaustive) {
    const auto build_start = Clock::now();
    index = BuildIndex(vectors, options.index);
    report.build_nanos = NanosSince(build_start);
  }
  const size_t k = std::min(CeilSqrt(d), d);

  const auto solve_start = Clock::now();
  std::vector<double> y =
      BregmanProject(std::vector<double>(m, 1.0), s).mass;
  std::vector<double> sum(d, 0.0);
  double samples = 0.0;
  for (size_t t = 0; t < iterations; ++t) {
    const size_t j =
        Select(vectors, index.get(), y, k, em, options, rng, samples);
    const double value = lp.opt / lp.c[j];
    sum[j] += value;
    for (size_t i = 0; i < m; ++i) {
      const double loss = (value * lp.a(i, j) - lp.b[i] + lp.rho) /
                          (2.0 * lp.rho);
      if (!(loss >= -1e-12 && loss <= 1.0 + 1e-12)) {
        throw std::domain_error(
            "DenseMwuSolve: loss outside [0, 1]; rho is below the width");
      }
      y[i] *= std::exp(out.eta * loss);
    }
    y = BregmanProject(y, s).mass;
  }
  report.solve_nanos = NanosSince(solve_start);

  report.x.resize(d);
  for (size_t j = 0; j < d; ++j) {
    report.x[j] = sum[j] / static_cast<double>(iterations);
  }
  report.violations = ComputeViolations(lp, report.x);
  report.mean_samples = samples / static_cast<double>(iterations);
  return out;
}

BinarySearchResult FeasibilityBinarySearch(
    double lo, double hi, double tolerance, double probe_epsilon,
    const std::function<ProbeOutcome(double opt, Rng&)>& probe, Rng& rng) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw std::invalid_argument("FeasibilityBinarySearch: bad bracket");
  }
  if (!(tolerance > 0.0)) {
    throw std::invalid_argument("FeasibilityBinarySearch: tolerance <= 0");
  }
  if (!(probe_epsilon > 0.0)) {
    throw std::invalid_argument("FeasibilityBinarySearch: probe epsilon <= 0");
  }
  const auto probes = static_cast<size_t>(
      std::max(0.0, std::ceil(std::log2((hi - lo) / tolerance) - 1e-12)));
  BinarySearchResult result;
  for (size_t i = 0; i < probes; ++i) {
    const double mid = 0.5 * (lo + hi);
    ProbeOutcome outcome = probe(mid, rng);
    if (outcome.feasible) {
      lo = mid;
      result.report = std::move(outcome.report);
    } else {
      hi = mid;
    }
  }
  result.opt_estimate = lo;
  result.probes = probes;
  result.total_epsilon = static_cast<double>(probes) * probe_epsilon;
  return result;
}

}  // namespace fastmwem
