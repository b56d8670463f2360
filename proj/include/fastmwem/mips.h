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

#ifndef FASTMWEM_MIPS_H_
#define FASTMWEM_MIPS_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fastmwem/matrix.h"

namespace fastmwem {

enum class IndexFlavor : uint8_t { kFlat = 0, kIvf = 1, kHnsw = 2 };

std::string FlavorName(IndexFlavor flavor);
// Accepts "flat", "ivf" and "hnsw". Throws std::invalid_argument otherwise.
IndexFlavor ParseFlavor(const std::string& name);

// Index parameters. Zero for nlist / nprobe means "derive from n":
// nlist = max(2 * ceil(sqrt(n)), 20) clamped to n, and
// nprobe = max(1, min(floor(nlist / 4), 10)).
struct IndexConfig {
  IndexFlavor flavor = IndexFlavor::kFlat;
  size_t nlist = 0;
  size_t nprobe = 0;
  // Lloyd iterations and training points per cell for IVF k-means.
  size_t kmeans_iterations = 20;
  size_t kmeans_points_per_list = 40;
  size_t m_neighbors = 32;
  size_t ef_construction = 100;
  size_t ef_search = 64;
  uint64_t seed = 0;
};

// Fills in the derived defaults for an index over `n` vectors and validates
// the result. Throws std::invalid_argument on inconsistent settings.
IndexConfig ResolveConfig(const IndexConfig& config, size_t n);

struct TopKResult {
  // Candidate ids by descending inner product (ties: lower id first).
  std::vector<size_t> indices;
  std::vector<double> scores;
  // True when the answer is guaranteed to be the exact top-k.
  bool exact = false;
  // Number of full-dimension vector evaluations the query performed.
  size_t evaluations = 0;
};

// A k-maximum-inner-product index built once over fixed vectors. Immutable
// after construction; concurrent queries are safe.
class MipsIndex {
 public:
  virtual ~MipsIndex() = default;

  virtual IndexFlavor flavor() const = 0;

  // Top-k by inner product with `query`. Throws std::invalid_argument if the
  // query dimension differs from the index or k is outside [1, size()].
  TopKResult Query(std::span<const double> query, size_t k) const;

  size_t size() const { return vectors_.rows(); }
  size_t dim() const { return vectors_.cols(); }
  const Matrix& vectors() const { return vectors_; }
  const IndexConfig& config() const { return config_; }

  // Versioned little-endian binary format: "FMWM", u16 version, u8 flavor,
  // then the flavor payload.
  void Save(std::ostream& out) const;
  // Throws std::runtime_error on bad magic, unknown version or flavor, or a
  // truncated payload.
  static std::unique_ptr<MipsIndex> Load(std::istream& in);

  static constexpr uint16_t kFormatVersion = 1;

 protected:
  MipsIndex(Matrix vectors, IndexConfig config)
      : vectors_(std::move(vectors)), config_(config) {}

  virtual TopKResult DoQuery(std::span<const double> query, size_t k) const = 0;
  virtual void SavePayload(std::ostream& out) const = 0;

 private:
  Matrix vectors_;
  IndexConfig config_;
};

// Builds an index of the configured flavor. Throws std::invalid_argument for
// an empty vector set, zero dimension or non-finite entries.
std::unique_ptr<MipsIndex> BuildIndex(Matrix vectors, const IndexConfig& config);

// Norm-padding reduction from inner-product search to Euclidean search.
// Every transformed row has squared norm `max_squared_norm`.
struct KnnTransform {
  Matrix vectors;
  double max_squared_norm = 0.0;

  // [q, 0]
  std::vector<double> TransformQuery(std::span<const double> query) const;
};

KnnTransform MipsToKnn(const Matrix& vectors);

// Largest observed approximate-top-k slack over `queries`:
// max over queries of (max_{i not in S} <q, v_i> - min_{i in S} <q, v_i>)+,
// with S the index answer and scores from a full scan.
double MeasureSlack(const MipsIndex& index, const Matrix& queries, size_t k);

// Structure introspection for tests and diagnostics. Each throws
// std::invalid_argument when `index` is of another flavor.
std::vector<std::vector<size_t>> IvfInvertedLists(const MipsIndex& index);
// Vectors not reachable from the entry point over base-layer edges.
size_t HnswUnreachableCount(const MipsIndex& index);

// Exact top-k by brute force; shared by the flat index and the slack check.
TopKResult ScanTopK(const Matrix& vectors, std::span<const double> query,
                    size_t k);

}  // namespace fastmwem

#endif  // FASTMWEM_MIPS_H_
