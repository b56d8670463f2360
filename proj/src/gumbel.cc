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

#include "fastmwem/gumbel.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace fastmwem {
namespace {

// Lowest index wins exact ties.
bool Beats(double value, size_t index, double best_value, size_t best_index) {
  return value > best_value || (value == best_value && index < best_index);
}

}  // namespace

ScoreList::ScoreList(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) {
    throw std::invalid_argument("ScoreList: at least one score is required");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("ScoreList: scores must be finite");
    }
  }
}

double GumbelFromUniform(double u) { return -std::log(-std::log(u)); }

double SampleGumbel(Rng& rng) { return GumbelFromUniform(UniformOpen(rng)); }

double GumbelTailProbability(double threshold) {
  return -std::expm1(-std::exp(-threshold));
}

double SampleTruncatedGumbel(double threshold, Rng& rng) {
  const double tail = GumbelTailProbability(threshold);
  if (tail == 0.0) {
    // Far in the right tail the excess over the threshold is Exp(1).
    return threshold - std::log(UniformOpen(rng));
  }
  // U ~ Uniform(exp(-exp(-B)), 1) is drawn as 1 - t with t ~ Uniform(0, tail)
  // so that -ln(U) = -log1p(-t) keeps full precision when tail is tiny.
  for (int attempt = 0; attempt < 64; ++attempt) {
    const double t = tail * UniformOpen(rng);
    const double g = -std::log(-std::log1p(-t));
    if (g > threshold && std::isfinite(g)) return g;
  }
  return std::nextafter(threshold, std::numeric_limits<double>::infinity());
}

uint64_t SampleBinomial(uint64_t trials, double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("SampleBinomial: p must lie in [0, 1]");
  }
  if (trials == 0 || p == 0.0) return 0;
  if (p == 1.0) return trials;
  if (p > 0.5) return trials - SampleBinomial(trials, 1.0 - p, rng);

  // Failures between successes are Geometric(p); count how many successes
  // fit into `trials` positions.
  const double log_fail = std::log1p(-p);
  const double limit = static_cast<double>(trials);
  double position = 0.0;
  uint64_t successes = 0;
  while (true) {
    const double gap = std::floor(std::log(UniformOpen(rng)) / log_fail);
    position += gap + 1.0;
    if (position > limit) break;
    ++successes;
  }
  return successes;
}

std::vector<size_t> SampleDistinctComplement(size_t n,
                                             std::span<const size_t> excluded,
                                             size_t count, Rng& rng) {
  std::vector<size_t> sorted(excluded.begin(), excluded.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("SampleDistinctComplement: repeated index");
  }
  if (!sorted.empty() && sorted.back() >= n) {
    throw std::invalid_argument("SampleDistinctComplement: index out of range");
  }
  const size_t pool = n - sorted.size();
  if (count > pool) {
    throw std::invalid_argument(
        "SampleDistinctComplement: count exceeds complement size");
  }
  std::vector<size_t> out;
  if (count == 0) return out;
  out.reserve(count);

  // Rank r in the complement maps to r + #{j : sorted[j] - j <= r}.
  std::vector<size_t> shifted(sorted.size());
  for (size_t j = 0; j < sorted.size(); ++j) shifted[j] = sorted[j] - j;
  auto to_index = [&](size_t rank) {
    const auto skip = std::upper_bound(shifted.begin(), shifted.end(), rank) -
                      shifted.begin();
    return rank + static_cast<size_t>(skip);
  };

  // Floyd's subset sampling over complement ranks.
  std::unordered_set<size_t> chosen;
  chosen.reserve(count * 2);
  for (size_t j = pool - count; j < pool; ++j) {
    size_t t = UniformIndex(rng, j + 1);
    if (!chosen.insert(t).second) {
      chosen.insert(j);
      t = j;
    }
    out.push_back(to_index(t));
  }
  return out;
}

SelectionResult GumbelMaxExact(const ScoreSource& scores, Rng& rng) {
  const size_t n = scores.size();
  if (n == 0) throw std::invalid_argument("GumbelMaxExact: no candidates");
  SelectionResult result;
  result.noisy_score = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < n; ++i) {
    const double noisy = scores.Score(i) + SampleGumbel(rng);
    if (Beats(noisy, i, result.noisy_score, result.winner)) {
      result.noisy_score = noisy;
      result.winner = i;
    }
  }
  result.extra_samples = n;
  return result;
}

SelectionResult LazyGumbelSample(const ScoreSource& scores, const TopKSet& top,
                                 LazyMode mode, Rng& rng) {
  const size_t n = scores.size();
  const size_t k = top.indices.size();
  if (k == 0) throw std::invalid_argument("LazyGumbel: empty top-k set");
  if (k > n) throw std::invalid_argument("LazyGumbel: k exceeds candidates");
  double lowered = 0.0;
  if (mode == LazyMode::kPrivacyPreserving) {
    if (!top.slack.has_value() || !(*top.slack >= 0.0)) {
      throw std::invalid_argument(
          "LazyGumbel: privacy-preserving mode needs a nonnegative slack");
    }
    lowered = *top.slack;
  }

  SelectionResult result;
  result.noisy_score = -std::numeric_limits<double>::infinity();
  double min_top = std::numeric_limits<double>::infinity();
  for (size_t idx : top.indices) {
    if (idx >= n) throw std::invalid_argument("LazyGumbel: index out of range");
    const double x = scores.Score(idx);
    min_top = std::min(min_top, x);
    const double noisy = x + SampleGumbel(rng);
    if (Beats(noisy, idx, result.noisy_score, result.winner)) {
      result.noisy_score = noisy;
      result.winner = idx;
    }
  }

  const double margin = result.noisy_score - min_top - lowered;
  result.margin = margin;
  const uint64_t extra =
      SampleBinomial(n - k, GumbelTailProbability(margin), rng);
  // Also rejects repeated or out-of-range set members.
  const std::vector<size_t> stragglers =
      SampleDistinctComplement(n, top.indices, extra, rng);
  for (size_t idx : stragglers) {
    const double noisy = scores.Score(idx) + SampleTruncatedGumbel(margin, rng);
    if (Beats(noisy, idx, result.noisy_score, result.winner)) {
      result.noisy_score = noisy;
      result.winner = idx;
    }
  }
  result.extra_samples = stragglers.size();
  return result;
}

TopKSet ExactTopK(std::span<const double> scores, size_t k) {
  if (k == 0 || k > scores.size()) {
    throw std::invalid_argument("ExactTopK: k must lie in [1, n]");
  }
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), size_t{0});
  auto better = [&](size_t a, size_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  };
  std::nth_element(order.begin(), order.begin() + (k - 1), order.end(),
                   better);
  order.resize(k);
  std::sort(order.begin(), order.end(), better);
  return TopKSet{std::move(order), 0.0};
}

size_t DefaultTopK(size_t n) {
  auto k = static_cast<size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  while (k * k < n) ++k;
  while (k > 1 && (k - 1) * (k - 1) >= n) --k;
  return std::max<size_t>(k, 1);
}

}  // namespace fastmwem
