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

#include "fastmwem/mips.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "mips_internal.h"

namespace fastmwem {
namespace {

constexpr char kMagic[4] = {'F', 'M', 'W', 'M'};

class FlatIndex final : public MipsIndex {
 public:
  FlatIndex(Matrix vectors, const IndexConfig& config)
      : MipsIndex(std::move(vectors), config) {}

  IndexFlavor flavor() const override { return IndexFlavor::kFlat; }

 protected:
  TopKResult DoQuery(std::span<const double> query, size_t k) const override {
    return ScanTopK(vectors(), query, k);
  }
  void SavePayload(std::ostream&) const override {}
};

}  // namespace

namespace internal {

void KeepBest(std::vector<std::pair<double, size_t>>& scored, size_t k) {
  auto better = [](const std::pair<double, size_t>& a,
                   const std::pair<double, size_t>& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  };
  if (k < scored.size()) {
    std::nth_element(scored.begin(), scored.begin() + (k - 1), scored.end(),
                     better);
    scored.resize(k);
  }
  std::sort(scored.begin(), scored.end(), better);
}

std::unique_ptr<MipsIndex> MakeFlatIndex(Matrix vectors,
                                         const IndexConfig& config) {
  return std::make_unique<FlatIndex>(std::move(vectors), config);
}

}  // namespace internal

std::string FlavorName(IndexFlavor flavor) {
  switch (flavor) {
    case IndexFlavor::kFlat:
      return "flat";
    case IndexFlavor::kIvf:
      return "ivf";
    case IndexFlavor::kHnsw:
      return "hnsw";
  }
  return "unknown";
}

IndexFlavor ParseFlavor(const std::string& name) {
  if (name == "flat") return IndexFlavor::kFlat;
  if (name == "ivf") return IndexFlavor::kIvf;
  if (name == "hnsw") return IndexFlavor::kHnsw;
  throw std::invalid_argument("unknown index flavor '" + name + "'");
}

IndexConfig ResolveConfig(const IndexConfig& config, size_t n) {
  IndexConfig out = config;
  if (out.nlist == 0) {
    const auto root = static_cast<size_t>(std::ceil(std::sqrt(double(n))));
    out.nlist = std::max<size_t>(2 * root, 20);
  }
  out.nlist = std::max<size_t>(1, std::min(out.nlist, n));
  if (out.nprobe == 0) {
    out.nprobe = std::max<size_t>(1, std::min<size_t>(out.nlist / 4, 10));
  }
  if (out.nprobe > out.nlist) {
    throw std::invalid_argument("IndexConfig: nprobe exceeds nlist");
  }
  if (out.m_neighbors < 2) {
    throw std::invalid_argument("IndexConfig: m_neighbors must be >= 2");
  }
  if (out.ef_construction == 0 || out.ef_search == 0) {
    throw std::invalid_argument("IndexConfig: ef values must be positive");
  }
  if (out.kmeans_points_per_list == 0) {
    throw std::invalid_argument("IndexConfig: kmeans_points_per_list is 0");
  }
  return out;
}

TopKResult MipsIndex::Query(std::span<const double> query, size_t k) const {
  if (query.size() != dim()) {
    throw std::invalid_argument("MipsIndex::Query: dimension mismatch");
  }
  if (k == 0 || k > size()) {
    throw std::invalid_argument("MipsIndex::Query: k must lie in [1, n]");
  }
  return DoQuery(query, k);
}

TopKResult ScanTopK(const Matrix& vectors, std::span<const double> query,
                    size_t k) {
  std::vector<std::pair<double, size_t>> scored(vectors.rows());
  for (size_t i = 0; i < vectors.rows(); ++i) {
    scored[i] = {Dot(vectors.row(i), query), i};
  }
  internal::KeepBest(scored, k);
  TopKResult result;
  result.exact = true;
  result.evaluations = vectors.rows();
  for (const auto& [score, id] : scored) {
    result.indices.push_back(id);
    result.scores.push_back(score);
  }
  return result;
}

std::unique_ptr<MipsIndex> BuildIndex(Matrix vectors,
                                      const IndexConfig& config) {
  if (vectors.rows() == 0) {
    throw std::invalid_argument("BuildIndex: empty vector set");
  }
  if (vectors.cols() == 0) {
    throw std::invalid_argument("BuildIndex: zero-dimensional vectors");
  }
  for (double v : vectors.data()) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("BuildIndex: non-finite vector entry");
    }
  }
  const IndexConfig resolved = ResolveConfig(config, vectors.rows());
  switch (resolved.flavor) {
    case IndexFlavor::kFlat:
      return internal::MakeFlatIndex(std::move(vectors), resolved);
    case IndexFlavor::kIvf:
      return internal::MakeIvfIndex(std::move(vectors), resolved);
    case IndexFlavor::kHnsw:
      return internal::MakeHnswIndex(std::move(vectors), resolved);
  }
  throw std::invalid_argument("BuildIndex: unknown flavor");
}

void MipsIndex::Save(std::ostream& out) const {
  out.write(kMagic, 4);
  out.put(static_cast<char>(kFormatVersion & 0xff));
  out.put(static_cast<char>(kFormatVersion >> 8));
  out.put(static_cast<char>(flavor()));
  internal::PutU64(out, size());
  internal::PutU64(out, dim());
  for (double v : vectors_.data()) internal::PutF64(out, v);
  internal::PutU64(out, config_.nlist);
  internal::PutU64(out, config_.nprobe);
  internal::PutU64(out, config_.kmeans_iterations);
  internal::PutU64(out, config_.kmeans_points_per_list);
  internal::PutU64(out, config_.m_neighbors);
  internal::PutU64(out, config_.ef_construction);
  internal::PutU64(out, config_.ef_search);
  internal::PutU64(out, config_.seed);
  SavePayload(out);
  if (!out) throw std::runtime_error("MipsIndex::Save: write failed");
}

std::unique_ptr<MipsIndex> MipsIndex::Load(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kMagic)) {
    throw std::runtime_error("MipsIndex::Load: bad magic bytes");
  }
  unsigned char header[3];
  if (!in.read(reinterpret_cast<char*>(header), 3)) {
    throw std::runtime_error("index file truncated");
  }
  const uint16_t version = static_cast<uint16_t>(header[0] | (header[1] << 8));
  if (version != kFormatVersion) {
    throw std::runtime_error("MipsIndex::Load: unsupported format version " +
                             std::to_string(version));
  }
  if (header[2] > static_cast<uint8_t>(IndexFlavor::kHnsw)) {
    throw std::runtime_error("MipsIndex::Load: unknown flavor tag");
  }
  const auto flavor = static_cast<IndexFlavor>(header[2]);
  const uint64_t n = internal::GetU64(in);
  const uint64_t d = internal::GetU64(in);
  if (n == 0 || d == 0 || n > (uint64_t{1} << 40) / d) {
    throw std::runtime_error("MipsIndex::Load: implausible shape");
  }
  std::vector<double> data(n * d);
  for (double& v : data) v = internal::GetF64(in);
  Matrix vectors(n, d, std::move(data));
  IndexConfig config;
  config.flavor = flavor;
  config.nlist = internal::GetU64(in);
  config.nprobe = internal::GetU64(in);
  config.kmeans_iterations = internal::GetU64(in);
  config.kmeans_points_per_list = internal::GetU64(in);
  config.m_neighbors = internal::GetU64(in);
  config.ef_construction = internal::GetU64(in);
  config.ef_search = internal::GetU64(in);
  config.seed = internal::GetU64(in);
  switch (flavor) {
    case IndexFlavor::kFlat:
      return internal::MakeFlatIndex(std::move(vectors), config);
    case IndexFlavor::kIvf:
      return internal::LoadIvfPayload(std::move(vectors), config, in);
    case IndexFlavor::kHnsw:
      return internal::LoadHnswPayload(std::move(vectors), config, in);
  }
  throw std::runtime_error("MipsIndex::Load: unknown flavor tag");
}

std::vector<double> KnnTransform::TransformQuery(
    std::span<const double> query) const {
  std::vector<double> out(query.begin(), query.end());
  out.push_back(0.0);
  return out;
}

KnnTransform MipsToKnn(const Matrix& vectors) {
  const size_t n = vectors.rows();
  const size_t d = vectors.cols();
  std::vector<double> norms(n);
  double max_norm = 0.0;
  for (size_t i = 0; i < n; ++i) {
    norms[i] = SquaredNorm(vectors.row(i));
    max_norm = std::max(max_norm, norms[i]);
  }
  KnnTransform out;
  out.max_squared_norm = max_norm;
  out.vectors = Matrix(n, d + 1);
  for (size_t i = 0; i < n; ++i) {
    auto src = vectors.row(i);
    auto dst = out.vectors.row(i);
    std::copy(src.begin(), src.end(), dst.begin());
    dst[d] = std::sqrt(std::max(0.0, max_norm - norms[i]));
  }
  return out;
}

double MeasureSlack(const MipsIndex& index, const Matrix& queries, size_t k) {
  double slack = 0.0;
  std::vector<char> in_set(index.size());
  for (size_t q = 0; q < queries.rows(); ++q) {
    const TopKResult answer = index.Query(queries.row(q), k);
    std::fill(in_set.begin(), in_set.end(), 0);
    double min_in = std::numeric_limits<double>::infinity();
    for (size_t id : answer.indices) {
      in_set[id] = 1;
      min_in = std::min(min_in, Dot(index.vectors().row(id), queries.row(q)));
    }
    double max_out = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < index.size(); ++i) {
      if (!in_set[i]) {
        max_out = std::max(max_out, Dot(index.vectors().row(i), queries.row(q)));
      }
    }
    slack = std::max(slack, max_out - min_in);
  }
  return slack;
}

}  // namespace fastmwem
