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

#include "fastmwem/mwem.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace fastmwem {
namespace {

using Clock = std::chrono::steady_clock;

int64_t NanosSince(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() -
                                                              start)
      .count();
}

struct Selection {
  size_t augmented_id = 0;
  size_t samples_drawn = 0;
  size_t extra_samples = 0;
  double margin = 0.0;
};

// Chooses an augmented query id given the query vector h - p_hat.
using Selector = std::function<Selection(std::span<const double>, Rng&)>;
// Untimed per-iteration diagnostic over the same query vector.
using Observer = std::function<void(std::span<const double>)>;

void CheckInputs(const Matrix& queries, const Histogram& h) {
  if (queries.rows() == 0) {
    throw std::invalid_argument("MWEM: empty query set");
  }
  if (queries.cols() != h.domain_size()) {
    throw std::invalid_argument("MWEM: query width differs from domain size");
  }
  double total = 0.0;
  for (double v : h.mass) {
    if (!(v >= 0.0)) throw std::invalid_argument("MWEM: negative mass");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("MWEM: histogram does not sum to 1");
  }
}

void Normalize(std::span<const double> log_weights, std::vector<double>& p) {
  const double top = *std::max_element(log_weights.begin(), log_weights.end());
  double total = 0.0;
  for (size_t x = 0; x < p.size(); ++x) {
    p[x] = std::exp(log_weights[x] - top);
    total += p[x];
  }
  for (double& v : p) v /= total;
}

MwemResult RunLoop(const Matrix& queries, const AugmentedQuerySet& aug,
                   const Histogram& h, const MwemParams& params,
                   const ResolvedMwem& resolved, const Selector& select,
                   const Observer& observe, Rng& rng) {
  const size_t u = h.domain_size();
  const double step = params.literal_update_sign ? -resolved.eta : resolved.eta;

  std::vector<double> log_weights(u, 0.0);
  std::vector<double> p(u, 1.0 / static_cast<double>(u));
  std::vector<double> sum(u, 0.0);
  std::vector<double> average(u);
  std::vector<double> direction(u);

  MwemResult result;
  result.params = resolved;
  result.initial_error = MaxError(queries, p, h.mass);
  result.trace.reserve(resolved.iterations);

  for (size_t t = 0; t < resolved.iterations; ++t) {
    const auto start = Clock::now();
    for (size_t x = 0; x < u; ++x) {
      sum[x] += p[x];
      direction[x] = h.mass[x] - p[x];
    }
    const auto select_start = Clock::now();
    const Selection chosen = select(direction, rng);
    const int64_t selection_nanos = NanosSince(select_start);
    const auto row = aug.augmented.row(chosen.augmented_id);
    for (size_t x = 0; x < u; ++x) log_weights[x] += step * row[x];
    Normalize(log_weights, p);
    const int64_t wall_nanos = NanosSince(start);
    if (observe) observe(direction);

    IterationRecord record;
    record.iteration = t + 1;
    const auto origin = aug.BackMap(chosen.augmented_id);
    record.selected = origin.id;
    record.sign = origin.sign;
    record.samples_drawn = chosen.samples_drawn;
    record.extra_samples = chosen.extra_samples;
    record.margin = chosen.margin;
    record.wall_nanos = wall_nanos;
    record.selection_nanos = selection_nanos;
    if (params.track_error) {
      for (size_t x = 0; x < u; ++x) {
        average[x] = sum[x] / static_cast<double>(t + 1);
      }
      record.error = MaxError(queries, average, h.mass);
      record.iterate_error = MaxError(queries, p, h.mass);
    } else {
      record.error = std::numeric_limits<double>::quiet_NaN();
      record.iterate_error = std::numeric_limits<double>::quiet_NaN();
    }
    result.trace.push_back(record);
  }

  result.synthetic.resize(u);
  for (size_t x = 0; x < u; ++x) {
    result.synthetic[x] = sum[x] / static_cast<double>(resolved.iterations);
  }
  result.final_error = MaxError(queries, result.synthetic, h.mass);
  return result;
}

}  // namespace

Histogram BuildHistogram(std::span<const size_t> records, size_t domain_size) {
  if (records.empty()) {
    throw std::invalid_argument("BuildHistogram: no records");
  }
  if (domain_size == 0) {
    throw std::invalid_argument("BuildHistogram: empty domain");
  }
  std::vector<size_t> counts(domain_size, 0);
  for (size_t r : records) {
    if (r >= domain_size) {
      throw std::invalid_argument("BuildHistogram: record outside domain");
    }
    ++counts[r];
  }
  Histogram out;
  out.n_source = records.size();
  out.mass.resize(domain_size);
  const double n = static_cast<double>(records.size());
  for (size_t x = 0; x < domain_size; ++x) {
    out.mass[x] = static_cast<double>(counts[x]) / n;
  }
  return out;
}

double MaxError(const Matrix& queries, std::span<const double> p_hat,
                std::span<const double> h) {
  if (p_hat.size() != queries.cols() || h.size() != queries.cols()) {
    throw std::invalid_argument("MaxError: dimension mismatch");
  }
  std::vector<double> diff(h.size());
  for (size_t x = 0; x < h.size(); ++x) diff[x] = p_hat[x] - h[x];
  double worst = 0.0;
  for (size_t i = 0; i < queries.rows(); ++i) {
    worst = std::max(worst, std::abs(Dot(queries.row(i), diff)));
  }
  return worst;
}

ResolvedMwem ResolveMwem(const MwemParams& params, size_t m, size_t domain,
                         size_t n) {
  if (!(params.alpha > 0.0)) {
    throw std::invalid_argument("MWEM: alpha must be positive");
  }
  if (m == 0) throw std::invalid_argument("MWEM: no queries");
  if (domain < 2) throw std::invalid_argument("MWEM: domain needs >= 2 bins");
  if (n == 0) throw std::invalid_argument("MWEM: no records");

  ResolvedMwem out;
  out.iterations = params.iterations;
  if (out.iterations == 0) {
    out.iterations = static_cast<size_t>(std::ceil(
        4.0 * std::log(static_cast<double>(m)) / (params.alpha * params.alpha)));
    out.iterations = std::max<size_t>(out.iterations, 1);
  }
  out.eta = std::sqrt(std::log(static_cast<double>(domain)) /
                      static_cast<double>(out.iterations));
  out.k = params.k;
  if (out.k == 0) {
    out.k = static_cast<size_t>(std::ceil(std::sqrt(2.0 * m)));
  }
  out.k = std::min(out.k, 2 * m);
  out.sensitivity = 1.0 / static_cast<double>(n);
  out.budget = ComposeBudget(params.epsilon, params.delta, out.iterations);
  return out;
}

MwemResult MwemClassic(const Matrix& queries, const Histogram& h,
                       const MwemParams& params, Rng& rng) {
  CheckInputs(queries, h);
  const AugmentedQuerySet aug = AugmentComplements(queries);
  const ResolvedMwem resolved =
      ResolveMwem(params, queries.rows(), h.domain_size(), h.n_source);
  const EmConfig em{resolved.budget.epsilon0, resolved.sensitivity};
  std::vector<double> scores(aug.augmented.rows());

  Selector select = [&](std::span<const double> direction, Rng& r) {
    for (size_t i = 0; i < scores.size(); ++i) {
      scores[i] = Dot(aug.augmented.row(i), direction);
    }
    Selection s;
    s.augmented_id = EmExact(scores, em, r);
    s.samples_drawn = scores.size();
    return s;
  };
  return RunLoop(queries, aug, h, params, resolved, select, nullptr, rng);
}

MwemResult FastMwem(const Matrix& queries, const Histogram& h,
                    const MwemParams& params, const FastMwemOptions& options,
                    Rng& rng) {
  CheckInputs(queries, h);
  const AugmentedQuerySet aug = AugmentComplements(queries);
  ResolvedMwem resolved =
      ResolveMwem(params, queries.rows(), h.domain_size(), h.n_source);
  resolved.budget.extra_delta = 1.0 / static_cast<double>(queries.rows());
  const EmConfig em{resolved.budget.epsilon0, resolved.sensitivity};

  const auto build_start = Clock::now();
  const std::unique_ptr<MipsIndex> index =
      BuildIndex(aug.augmented, options.index);
  const int64_t build_nanos = NanosSince(build_start);

  LazyEmOptions lazy;
  lazy.mode = options.mode;
  lazy.slack = options.slack;
  lazy.augmentation = &aug;
  double observed_slack = 0.0;

  Selector select = [&](std::span<const double> direction, Rng& r) {
    const LazyEmResult pick =
        LazyEm(*index, direction, resolved.k, em, lazy, r);
    Selection s;
    s.augmented_id = pick.candidate;
    s.samples_drawn = pick.samples_drawn;
    s.extra_samples = pick.selection.extra_samples;
    s.margin = pick.selection.margin;
    return s;
  };
  Observer measure = [&](std::span<const double> direction) {
    const Matrix one(1, direction.size(),
                     std::vector<double>(direction.begin(), direction.end()));
    observed_slack =
        std::max(observed_slack, MeasureSlack(*index, one, resolved.k));
  };

  MwemResult result =
      RunLoop(queries, aug, h, params, resolved, select,
              options.measure_slack ? measure : Observer(), rng);
  result.build_nanos = build_nanos;
  result.observed_slack = observed_slack;
  return result;
}

}  // namespace fastmwem
