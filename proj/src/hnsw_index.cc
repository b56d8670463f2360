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
#include <cstdint>
#include <limits>
#include <queue>
#include <stdexcept>
#include <vector>

#include "fastmwem/mips.h"
#include "fastmwem/rng.h"
#include "mips_internal.h"

namespace fastmwem {
namespace {

using Candidate = std::pair<double, uint32_t>;  // (squared distance, id)

// Per-thread visited marks. Tags are compared against a running epoch so a
// search never has to clear O(n) state.
struct VisitedScratch {
  std::vector<uint32_t> tags;
  uint32_t epoch = 0;

  void Begin(size_t n) {
    if (tags.size() < n) tags.resize(n, 0);
    if (++epoch == 0) {
      std::fill(tags.begin(), tags.end(), 0);
      epoch = 1;
    }
  }
  // Returns true the first time `id` is seen in the current search.
  bool Visit(uint32_t id) {
    if (tags[id] == epoch) return false;
    tags[id] = epoch;
    return true;
  }
};

thread_local VisitedScratch visited_scratch;

// Hierarchical navigable small-world graph over the norm-padded vectors, so
// Euclidean nearest neighbors are maximum-inner-product neighbors.
class HnswIndex final : public MipsIndex {
 public:
  HnswIndex(Matrix vectors, const IndexConfig& config)
      : MipsIndex(std::move(vectors), config),
        padded_(MipsToKnn(this->vectors())) {}

  IndexFlavor flavor() const override { return IndexFlavor::kHnsw; }

  void Build();
  void Restore(std::istream& in);
  size_t Unreachable() const;

 protected:
  TopKResult DoQuery(std::span<const double> query, size_t k) const override;
  void SavePayload(std::ostream& out) const override;

 private:
  size_t MaxLinks(int layer) const {
    return layer == 0 ? 2 * config().m_neighbors : config().m_neighbors;
  }
  double Distance(std::span<const double> a, uint32_t b) const {
    auto row = padded_.vectors.row(b);
    double s = 0.0;
    for (size_t i = 0; i < row.size(); ++i) {
      const double t = a[i] - row[i];
      s += t * t;
    }
    return s;
  }
  std::span<const double> Padded(uint32_t id) const {
    return padded_.vectors.row(id);
  }

  uint32_t GreedyDescend(std::span<const double> target, uint32_t entry,
                         int from_layer, int to_layer, size_t* evals) const;
  std::vector<Candidate> SearchLayer(std::span<const double> target,
                                     uint32_t entry, size_t ef, int layer,
                                     size_t* evals) const;
  std::vector<uint32_t> SelectNeighbors(const std::vector<Candidate>& sorted,
                                        size_t limit) const;
  void Insert(uint32_t id, int level);
  void RepairConnectivity();
  std::vector<char> ReachedFromEntry() const;

  KnnTransform padded_;
  std::vector<int> levels_;
  // links_[id][layer] lists neighbor ids on that layer.
  std::vector<std::vector<std::vector<uint32_t>>> links_;
  uint32_t entry_ = 0;
  int max_level_ = -1;
};

uint32_t HnswIndex::GreedyDescend(std::span<const double> target,
                                  uint32_t entry, int from_layer, int to_layer,
                                  size_t* evals) const {
  uint32_t current = entry;
  double current_dist = Distance(target, current);
  ++*evals;
  for (int layer = from_layer; layer > to_layer; --layer) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (uint32_t next : links_[current][layer]) {
        const double dist = Distance(target, next);
        ++*evals;
        if (dist < current_dist || (dist == current_dist && next < current)) {
          current_dist = dist;
          current = next;
          improved = true;
        }
      }
    }
  }
  return current;
}

std::vector<Candidate> HnswIndex::SearchLayer(std::span<const double> target,
                                              uint32_t entry, size_t ef,
                                              int layer, size_t* evals) const {
  VisitedScratch& visited = visited_scratch;
  visited.Begin(size());
  std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>>
      frontier;
  std::priority_queue<Candidate> best;
  const double entry_dist = Distance(target, entry);
  ++*evals;
  visited.Visit(entry);
  frontier.emplace(entry_dist, entry);
  best.emplace(entry_dist, entry);
  while (!frontier.empty()) {
    const Candidate current = frontier.top();
    if (current > best.top() && best.size() >= ef) break;
    frontier.pop();
    for (uint32_t next : links_[current.second][layer]) {
      if (!visited.Visit(next)) continue;
      const Candidate cand{Distance(target, next), next};
      ++*evals;
      if (best.size() < ef || cand < best.top()) {
        frontier.push(cand);
        best.push(cand);
        if (best.size() > ef) best.pop();
      }
    }
  }
  std::vector<Candidate> out(best.size());
  for (size_t i = out.size(); i-- > 0;) {
    out[i] = best.top();
    best.pop();
  }
  return out;
}

// Keeps a candidate only if it is closer to the base point than to every
// neighbor already kept; candidates arrive sorted by distance.
std::vector<uint32_t> HnswIndex::SelectNeighbors(
    const std::vector<Candidate>& sorted, size_t limit) const {
  std::vector<uint32_t> kept;
  for (const auto& [dist, id] : sorted) {
    if (kept.size() >= limit) break;
    bool diverse = true;
    for (uint32_t other : kept) {
      if (Distance(Padded(id), other) < dist) {
        diverse = false;
        break;
      }
    }
    if (diverse) kept.push_back(id);
  }
  return kept;
}

void HnswIndex::Insert(uint32_t id, int level) {
  links_[id].assign(level + 1, {});
  if (max_level_ < 0) {
    entry_ = id;
    max_level_ = level;
    return;
  }
  const auto point = Padded(id);
  size_t evals = 0;
  uint32_t entry = GreedyDescend(point, entry_, max_level_, level, &evals);
  for (int layer = std::min(level, max_level_); layer >= 0; --layer) {
    const std::vector<Candidate> found =
        SearchLayer(point, entry, config().ef_construction, layer, &evals);
    entry = found.front().second;
    links_[id][layer] = SelectNeighbors(found, config().m_neighbors);
    const size_t cap = MaxLinks(layer);
    for (uint32_t other : links_[id][layer]) {
      auto& back = links_[other][layer];
      back.push_back(id);
      if (back.size() <= cap) continue;
      std::vector<Candidate> pool;
      pool.reserve(back.size());
      for (uint32_t b : back) pool.emplace_back(Distance(Padded(other), b), b);
      std::sort(pool.begin(), pool.end());
      back = SelectNeighbors(pool, cap);
    }
  }
  if (level > max_level_) {
    max_level_ = level;
    entry_ = id;
  }
}

std::vector<char> HnswIndex::ReachedFromEntry() const {
  std::vector<char> reached(size(), 0);
  std::vector<uint32_t> stack = {entry_};
  reached[entry_] = 1;
  while (!stack.empty()) {
    const uint32_t cur = stack.back();
    stack.pop_back();
    for (uint32_t next : links_[cur][0]) {
      if (!reached[next]) {
        reached[next] = 1;
        stack.push_back(next);
      }
    }
  }
  return reached;
}

size_t HnswIndex::Unreachable() const {
  const std::vector<char> reached = ReachedFromEntry();
  return static_cast<size_t>(std::count(reached.begin(), reached.end(), 0));
}

// Pruning can strand a vector; link each stranded one to its nearest
// reachable vector so every id stays findable.
void HnswIndex::RepairConnectivity() {
  std::vector<char> reached = ReachedFromEntry();
  for (uint32_t id = 0; id < size(); ++id) {
    if (reached[id]) continue;
    uint32_t nearest = entry_;
    double nearest_dist = std::numeric_limits<double>::infinity();
    for (uint32_t other = 0; other < size(); ++other) {
      if (!reached[other]) continue;
      const double dist = Distance(Padded(id), other);
      if (dist < nearest_dist) {
        nearest_dist = dist;
        nearest = other;
      }
    }
    links_[id][0].push_back(nearest);
    links_[nearest][0].push_back(id);
    std::vector<uint32_t> stack = {id};
    reached[id] = 1;
    while (!stack.empty()) {
      const uint32_t cur = stack.back();
      stack.pop_back();
      for (uint32_t next : links_[cur][0]) {
        if (!reached[next]) {
          reached[next] = 1;
          stack.push_back(next);
        }
      }
    }
  }
}

void HnswIndex::Build() {
  if (size() > std::numeric_limits<uint32_t>::max()) {
    throw std::invalid_argument("HNSW: too many vectors");
  }
  Rng rng(DeriveSeed(config().seed, 0x2a));
  const double level_scale = 1.0 / std::log(double(config().m_neighbors));
  levels_.resize(size());
  links_.resize(size());
  for (uint32_t id = 0; id < size(); ++id) {
    const double draw = -std::log(UniformOpen(rng)) * level_scale;
    levels_[id] = static_cast<int>(std::min(draw, 30.0));
    Insert(id, levels_[id]);
  }
  RepairConnectivity();
}

TopKResult HnswIndex::DoQuery(std::span<const double> query, size_t k) const {
  const std::vector<double> target = padded_.TransformQuery(query);
  TopKResult result;
  const uint32_t entry =
      GreedyDescend(target, entry_, max_level_, 0, &result.evaluations);
  const std::vector<Candidate> found =
      SearchLayer(target, entry, std::max(config().ef_search, k), 0,
                  &result.evaluations);
  std::vector<std::pair<double, size_t>> scored;
  scored.reserve(found.size());
  for (const auto& [dist, id] : found) {
    scored.emplace_back(Dot(vectors().row(id), query), id);
  }
  internal::KeepBest(scored, k);
  result.exact = false;
  for (const auto& [score, id] : scored) {
    result.indices.push_back(id);
    result.scores.push_back(score);
  }
  return result;
}

void HnswIndex::SavePayload(std::ostream& out) const {
  internal::PutU64(out, entry_);
  internal::PutU32(out, static_cast<uint32_t>(max_level_));
  for (uint32_t id = 0; id < size(); ++id) {
    internal::PutU32(out, static_cast<uint32_t>(levels_[id]));
    for (const auto& layer : links_[id]) {
      internal::PutU32(out, static_cast<uint32_t>(layer.size()));
      for (uint32_t next : layer) internal::PutU32(out, next);
    }
  }
}

void HnswIndex::Restore(std::istream& in) {
  const uint64_t entry = internal::GetU64(in);
  const uint32_t max_level = internal::GetU32(in);
  if (entry >= size() || max_level > 30) {
    throw std::runtime_error("HNSW payload: bad header");
  }
  entry_ = static_cast<uint32_t>(entry);
  max_level_ = static_cast<int>(max_level);
  levels_.resize(size());
  links_.resize(size());
  for (uint32_t id = 0; id < size(); ++id) {
    const uint32_t level = internal::GetU32(in);
    if (level > max_level) throw std::runtime_error("HNSW payload: bad level");
    levels_[id] = static_cast<int>(level);
    links_[id].resize(level + 1);
    for (auto& layer : links_[id]) {
      const uint32_t count = internal::GetU32(in);
      if (count > size()) throw std::runtime_error("HNSW payload: bad links");
      layer.resize(count);
      for (uint32_t& next : layer) {
        next = internal::GetU32(in);
        if (next >= size()) throw std::runtime_error("HNSW payload: bad id");
      }
    }
  }
  if (levels_[entry_] != max_level_) {
    throw std::runtime_error("HNSW payload: entry point not on top layer");
  }
  // Upper-layer links must point at vectors present on that layer.
  for (uint32_t id = 0; id < size(); ++id) {
    for (size_t layer = 1; layer < links_[id].size(); ++layer) {
      for (uint32_t next : links_[id][layer]) {
        if (static_cast<size_t>(levels_[next]) < layer) {
          throw std::runtime_error("HNSW payload: inconsistent layers");
        }
      }
    }
  }
}

}  // namespace

namespace internal {

std::unique_ptr<MipsIndex> MakeHnswIndex(Matrix vectors,
                                         const IndexConfig& config) {
  auto index = std::make_unique<HnswIndex>(std::move(vectors), config);
  index->Build();
  return index;
}

std::unique_ptr<MipsIndex> LoadHnswPayload(Matrix vectors,
                                           const IndexConfig& config,
                                           std::istream& in) {
  auto index = std::make_unique<HnswIndex>(std::move(vectors), config);
  index->Restore(in);
  return index;
}

}  // namespace internal

size_t HnswUnreachableCount(const MipsIndex& index) {
  const auto* hnsw = dynamic_cast<const HnswIndex*>(&index);
  if (hnsw == nullptr) {
    throw std::invalid_argument("HnswUnreachableCount: not an HNSW index");
  }
  return hnsw->Unreachable();
}

}  // namespace fastmwem
