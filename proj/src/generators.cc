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

#include "fastmwem/generators.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "fastmwem/rng.h"

namespace fastmwem {
namespace {

size_t DrawPosition(std::normal_distribution<double>& dist, Rng& rng,
                    size_t domain) {
  // nearbyint rounds half to even in the default rounding mode.
  const double v = std::nearbyint(dist(rng));
  const double clamped = std::clamp(v, 0.0, static_cast<double>(domain - 1));
  return static_cast<size_t>(clamped);
}

}  // namespace

QueryInstance GenQueryInstance(size_t domain, size_t n, size_t m,
                               uint64_t seed) {
  if (domain < 2) throw std::invalid_argument("GenQueryInstance: U < 2");
  if (n == 0 || m == 0) {
    throw std::invalid_argument("GenQueryInstance: n and m must be positive");
  }
  const double u = static_cast<double>(domain);

  Rng data_rng(DeriveSeed(seed, 0));
  std::normal_distribution<double> data_dist(u / 3.0, u / 15.0);
  std::vector<size_t> records(n);
  for (size_t& r : records) r = DrawPosition(data_dist, data_rng, domain);

  Rng query_rng(DeriveSeed(seed, 1));
  std::normal_distribution<double> query_dist(u / 2.0, u / 5.0);
  const size_t support = domain / 4;
  QueryInstance out{BuildHistogram(records, domain), Matrix(m, domain)};
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = 0; j < support; ++j) {
      out.queries(i, DrawPosition(query_dist, query_rng, domain)) = 1.0;
    }
  }
  return out;
}

PlantedLp GenLpInstance(size_t m, size_t d, uint64_t seed) {
  if (m == 0 || d == 0) {
    throw std::invalid_argument("GenLpInstance: m and d must be positive");
  }
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::normal_distribution<double> perturbation(0.0, 0.1);
  std::exponential_distribution<double> exponential(1.0);

  PlantedLp out;
  LpInstance& lp = out.lp;
  lp.a = Matrix(m, d);
  double rho = 0.0;
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = 0; j < d; ++j) {
      lp.a(i, j) = normal(rng);
      rho = std::max(rho, std::abs(lp.a(i, j)));
    }
  }
  // Normalized exponentials are uniform on the simplex.
  out.planted.resize(d);
  double total = 0.0;
  for (double& v : out.planted) total += v = exponential(rng);
  for (double& v : out.planted) v /= total;
  lp.b.resize(m);
  for (size_t i = 0; i < m; ++i) {
    lp.b[i] = Dot(lp.a.row(i), out.planted) + std::abs(perturbation(rng));
  }
  lp.c.assign(d, 1.0);
  lp.delta_inf = 0.1;
  lp.rho = rho;
  lp.opt = 1.0;
  return out;
}

}  // namespace fastmwem
