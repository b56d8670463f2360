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

#ifndef FASTMWEM_GUMBEL_H_
#define FASTMWEM_GUMBEL_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fastmwem/rng.h"

namespace fastmwem {

// Provider of candidate scores. Implementations may compute scores lazily
// (e.g. as inner products against stored vectors); the lazy samplers only
// call Score() for candidates they actually examine.
class ScoreSource {
 public:
  virtual ~ScoreSource() = default;
  virtual size_t size() const = 0;
  virtual double Score(size_t i) const = 0;
};

// Materialized list of finite scores.
class ScoreList final : public ScoreSource {
 public:
  // Throws std::invalid_argument if `values` is empty or holds a non-finite
  // entry.
  explicit ScoreList(std::vector<double> values);

  size_t size() const override { return values_.size(); }
  double Score(size_t i) const override { return values_[i]; }
  std::span<const double> values() const { return values_; }

 private:
  std::vector<double> values_;
};

// A size-k candidate set believed to hold the largest scores. When `slack`
// is set to c, no excluded score exceeds the smallest included score by more
// than c.
struct TopKSet {
  std::vector<size_t> indices;
  std::optional<double> slack;
};

struct SelectionResult {
  size_t winner = 0;
  // Score of the winner plus its Gumbel noise.
  double noisy_score = 0.0;
  // Number C of off-set candidates that received truncated noise.
  size_t extra_samples = 0;
  // Truncation threshold B for off-set noise (0 when no off-set exists).
  double margin = 0.0;
};

// Gumbel(0,1) quantile transform -ln(-ln u) for u in (0,1).
double GumbelFromUniform(double u);

// Gumbel(0,1) variate. Uniform endpoints are redrawn, so the result is
// always finite.
double SampleGumbel(Rng& rng);

// Gumbel(0,1) variate conditioned on exceeding `threshold`. The result is
// strictly greater than `threshold`.
double SampleTruncatedGumbel(double threshold, Rng& rng);

// Pr[G > threshold] for G ~ Gumbel(0,1), evaluated as -expm1(-exp(-B)) so it
// keeps relative precision when the threshold is large.
double GumbelTailProbability(double threshold);

// Exact Binomial(trials, p) draw by geometric skipping. Expected work is
// O(1 + trials * min(p, 1 - p)). Throws std::invalid_argument unless
// 0 <= p <= 1.
uint64_t SampleBinomial(uint64_t trials, double p, Rng& rng);

// Uniformly random `count`-subset of [0, n) \ excluded, returned in draw
// order. Work is O(count + |excluded|) up to logarithmic factors. Throws
// std::invalid_argument when count exceeds the complement size or an
// excluded index is out of range or repeated.
std::vector<size_t> SampleDistinctComplement(size_t n,
                                             std::span<const size_t> excluded,
                                             size_t count, Rng& rng);

// Gumbel-max over every candidate: winner = argmax_i (x_i + G_i), lowest
// index on ties. Pr[winner = i] is proportional to exp(x_i).
SelectionResult GumbelMaxExact(const ScoreSource& scores, Rng& rng);

// How the lazy sampler treats its candidate set.
enum class LazyMode {
  // The set is the exact top-k; margin B = M - m.
  kExact,
  // Approximate set, margin unchanged. Output law is within e^{+-c} of the
  // softmax law; sample count is unchanged.
  kRuntimePreserving,
  // Approximate set with margin lowered to B = M - m - c. Output law equals
  // the softmax law; expected extra samples grow by at most e^c.
  kPrivacyPreserving,
};

// Lazy Gumbel sampling: noise only the candidates in `top`, then a
// binomially sized uniform sample of the rest with noise truncated above the
// margin. Throws std::invalid_argument if `top` is empty, larger than the
// candidate count, or holds invalid indices, and for kPrivacyPreserving when
// `top.slack` is unset or negative.
SelectionResult LazyGumbelSample(const ScoreSource& scores, const TopKSet& top,
                                 LazyMode mode, Rng& rng);

inline SelectionResult LazyGumbel(const ScoreSource& scores,
                                  const TopKSet& top, Rng& rng) {
  return LazyGumbelSample(scores, top, LazyMode::kExact, rng);
}
inline SelectionResult LazyGumbelRuntime(const ScoreSource& scores,
                                         const TopKSet& top, Rng& rng) {
  return LazyGumbelSample(scores, top, LazyMode::kRuntimePreserving, rng);
}
inline SelectionResult LazyGumbelPrivate(const ScoreSource& scores,
                                         const TopKSet& top, Rng& rng) {
  return LazyGumbelSample(scores, top, LazyMode::kPrivacyPreserving, rng);
}

// Indices of the k largest scores, ties broken toward the lower index.
TopKSet ExactTopK(std::span<const double> scores, size_t k);

// ceil(sqrt(n)), the default lazy set size.
size_t DefaultTopK(size_t n);

}  // namespace fastmwem

#endif  // FASTMWEM_GUMBEL_H_
