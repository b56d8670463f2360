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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "fastmwem/gumbel.h"
#include "fastmwem/mips.h"
#include "fastmwem/rng.h"
#include "mips_internal.h"

namespace fastmwem {
namespace {

// Inverted-file index: k-means cells over the raw vectors; queries rank
// centroids by inner product and scan the best `nprobe` cells.
class IvfIndex final : public MipsIndex {
 public:
  IvfIndex(Matrix vectors, const IndexConfig& config, Matrix centroids,
           std::vector<std::vector<size_t>> lists)
      : MipsIndex(std::move(vectors), config),
        centroids_(std::move(centroids)),
        lists_(std::move(lists)) {}

  IndexFlavor flavor() const override { return IndexFlavor::kIvf; }
  const std::vector<std::vector<size_t>>& lists() const { return lists_; }

 protected:
  TopKResult DoQuery(std::span<const double> query, size_t k) const override;
  void SavePayload(std::ostream& out) const override;

 private:
  Matrix centroids_;
  std::vector<std::vector<size_t>> lists_;
};

double SquaredDistance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}

// Index of the nearest centroid by Euclidean distance, lowest id on ties.
size_t NearestCentroid(const Matrix& centroids,
                       std::span<const double> centroid_norms,
                       std::span<const double> point) {
  size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (size_t c = 0; c < centroids.rows(); ++c) {
    const double dist = centroid_norms[c] - 2.0 * Dot(centroids.row(c), point);
    if (dist < best_dist) {
      best_dist = dist;
      best = c;
    }
  }
  return best;
}

Matrix SeedPlusPlus(const Matrix& points, size_t count, Rng& rng) {
  const size_t n = points.rows();
  Matrix centroids(count, points.cols());
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  size_t pick = UniformIndex(rng, n);
  for (size_t c = 0; c < count; ++c) {
    auto src = points.row(pick);
    std::copy(src.begin(), src.end(), centroids.row(c).begin());
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
      min_dist[i] = std::min(min_dist[i], SquaredDistance(points.row(i), src));
      total += min_dist[i];
    }
    if (c + 1 == count) break;
    if (total <= 0.0) {
      pick = UniformIndex(rng, n);
      continue;
    }
    double target = UniformUnit(rng) * total;
    pick = n - 1;
    for (size_t i = 0; i < n; ++i) {
      target -= min_dist[i];
      if (target < 0.0) {
        pick = i;
        break;
      }
    }
  }
  return centroids;
}

std::vector<double> RowNorms(const Matrix& m) {
  std::vector<double> norms(m.rows());
  for (size_t i = 0; i < m.rows(); ++i) norms[i] = SquaredNorm(m.row(i));
  return norms;
}

Matrix TrainCentroids(const Matrix& vectors, const IndexConfig& config) {
  const size_t n = vectors.rows();
  const size_t d = vectors.cols();
  const size_t nlist = config.nlist;
  Rng rng(DeriveSeed(config.seed, 0x1f));

  // Training subsample of at most points_per_list * nlist vectors.
  const size_t budget = std::min(n, config.kmeans_points_per_list * nlist);
  Matrix train;
  if (budget == n) {
    train = vectors;
  } else {
    std::vector<size_t> picked = SampleDistinctComplement(n, {}, budget, rng);
    std::sort(picked.begin(), picked.end());
    train = Matrix(budget, d);
    for (size_t i = 0; i < budget; ++i) {
      auto src = vectors.row(picked[i]);
      std::copy(src.begin(), src.end(), train.row(i).begin());
    }
  }

  Matrix centroids = SeedPlusPlus(train, nlist, rng);
  std::vector<size_t> assign(train.rows());
  for (size_t iter = 0; iter < config.kmeans_iterations; ++iter) {
    const std::vector<double> norms = RowNorms(centroids);
    for (size_t i = 0; i < train.rows(); ++i) {
      assign[i] = NearestCentroid(centroids, norms, train.row(i));
    }
    Matrix sums(nlist, d);
    std::vector<size_t> counts(nlist, 0);
    for (size_t i = 0; i < train.rows(); ++i) {
      auto dst = sums.row(assign[i]);
      auto src = train.row(i);
      for (size_t j = 0; j < d; ++j) dst[j] += src[j];
      ++counts[assign[i]];
    }
    for (size_t c = 0; c < nlist; ++c) {
      if (counts[c] == 0) continue;
      auto dst = centroids.row(c);
      auto src = sums.row(c);
      for (size_t j = 0; j < d; ++j) dst[j] = src[j] / counts[c];
    }
    // Empty cells take the farthest member of the currently largest cell.
    for (size_t c = 0; c < nlist; ++c) {
      if (counts[c] != 0) continue;
      const size_t largest = static_cast<size_t>(
          std::max_element(counts.begin(), counts.end()) - counts.begin());
      if (counts[largest] < 2) break;
      size_t far = 0;
      double far_dist = -1.0;
      for (size_t i = 0; i < train.rows(); ++i) {
        if (assign[i] != largest) continue;
        const double dist = SquaredDistance(train.row(i), centroids.row(largest));
        if (dist > far_dist) {
          far_dist = dist;
          far = i;
        }
      }
      auto src = train.row(far);
      std::copy(src.begin(), src.end(), centroids.row(c).begin());
      assign[far] = c;
      --counts[largest];
      counts[c] = 1;
    }
  }
  return centroids;
}

TopKResult IvfIndex::DoQuery(std::span<const double> query, size_t k) const {
  const size_t nlist = centroids_.rows();
  std::vector<std::pair<double, size_t>> cells(nlist);
  for (size_t c = 0; c < nlist; ++c) {
    cells[c] = {Dot(centroids_.row(c), query), c};
  }
  std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  });

  std::vector<std::pair<double, size_t>> scored;
  size_t probed = 0;
  // Probe at least nprobe cells and keep going until k candidates exist.
  while (probed < nlist && (probed < config().nprobe || scored.size() < k)) {
    for (size_t id : lists_[cells[probed].second]) {
      scored.emplace_back(Dot(vectors().row(id), query), id);
    }
    ++probed;
  }
  TopKResult result;
  result.evaluations = scored.size() + nlist;
  result.exact = probed == nlist;
  internal::KeepBest(scored, k);
  for (const auto& [score, id] : scored) {
    result.indices.push_back(id);
    result.scores.push_back(score);
  }
  return result;
}

void IvfIndex::SavePayload(std::ostream& out) const {
  internal::PutU64(out, centroids_.rows());
  for (double v : centroids_.data()) internal::PutF64(out, v);
  for (const auto& list : lists_) {
    internal::PutU64(out, list.size());
    for (size_t id : list) internal::PutU64(out, id);
  }
}

}  // namespace

namespace internal {

std::unique_ptr<MipsIndex> MakeIvfIndex(Matrix vectors,
                                        const IndexConfig& config) {
  Matrix centroids = TrainCentroids(vectors, config);
  const std::vector<double> norms = RowNorms(centroids);
  std::vector<std::vector<size_t>> lists(centroids.rows());
  for (size_t i = 0; i < vectors.rows(); ++i) {
    lists[NearestCentroid(centroids, norms, vectors.row(i))].push_back(i);
  }
  return std::make_unique<IvfIndex>(std::move(vectors), config,
                                    std::move(centroids), std::move(lists));
}

std::unique_ptr<MipsIndex> LoadIvfPayload(Matrix vectors,
                                          const IndexConfig& config,
                                          std::istream& in) {
  const uint64_t nlist = GetU64(in);
  if (nlist == 0 || nlist > vectors.rows()) {
    throw std::runtime_error("IVF payload: bad cell count");
  }
  std::vector<double> data(nlist * vectors.cols());
  for (double& v : data) v = GetF64(in);
  Matrix centroids(nlist, vectors.cols(), std::move(data));
  std::vector<std::vector<size_t>> lists(nlist);
  size_t total = 0;
  for (auto& list : lists) {
    const uint64_t len = GetU64(in);
    if (len > vectors.rows()) throw std::runtime_error("IVF payload: bad list");
    list.resize(len);
    for (size_t& id : list) {
      id = GetU64(in);
      if (id >= vectors.rows()) throw std::runtime_error("IVF payload: bad id");
    }
    total += len;
  }
  if (total != vectors.rows()) {
    throw std::runtime_error("IVF payload: lists do not cover all vectors");
  }
  return std::make_unique<IvfIndex>(std::move(vectors), config,
                                    std::move(centroids), std::move(lists));
}

}  // namespace internal

std::vector<std::vector<size_t>> IvfInvertedLists(const MipsIndex& index) {
  const auto* ivf = dynamic_cast<const IvfIndex*>(&index);
  if (ivf == nullptr) {
    throw std::invalid_argument("IvfInvertedLists: not an IVF index");
  }
  return ivf->lists();
}

}  // namespace fastmwem
