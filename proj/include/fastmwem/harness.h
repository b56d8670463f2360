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

#ifndef FASTMWEM_HARNESS_H_
#define FASTMWEM_HARNESS_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "fastmwem/mips.h"
#include "json.hpp"

namespace fastmwem {

enum class Experiment {
  kQueryParity,
  kQueryErrorIndices,
  kQueryScaling,
  kMarginStudy,
  kNAblation,
  kLpParity,
  kLpScaling,
};

std::string ExperimentName(Experiment experiment);
// Throws ConfigError for an unknown name.
Experiment ParseExperiment(const std::string& name);

// Invalid or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Zero or empty fields take the experiment's default (desk scale, or paper
// scale when `paper_scale` is set).
struct ExperimentConfig {
  Experiment experiment = Experiment::kQueryParity;
  uint64_t seed = 0;
  std::vector<size_t> m;
  size_t domain = 0;  // U
  std::vector<size_t> n;
  size_t d = 0;
  size_t iterations = 0;  // T
  double epsilon = 1.0;
  double delta = 1e-3;
  double alpha = 0.0;
  // "classic" / "exhaustive" name the index-free baselines.
  std::vector<std::string> flavors;
  IndexConfig index;
  size_t repetitions = 1;
  bool paper_scale = false;
};

// Reads the JSON config document. Keys: experiment, seed, m and n (number
// or list), U, d, T, epsilon, delta, alpha, flavors, repetitions,
// paper_scale, index {nlist, nprobe, m_neighbors, ef_construction,
// ef_search, kmeans_iterations, kmeans_points_per_list, seed}. In n-ablation
// T = 0 means T = n^2. Throws ConfigError on unknown keys, wrong types or
// invalid values.
ExperimentConfig ParseConfig(const nlohmann::json& doc);

// Fills every defaulted field for the configured experiment and scale.
ExperimentConfig ResolveExperiment(const ExperimentConfig& config);

// Canonical JSON of a config (sorted keys).
nlohmann::json ConfigToJson(const ExperimentConfig& config);

// FNV-1a 64 of the canonical JSON dump, as 16 hex digits.
std::string ConfigHash(const ExperimentConfig& config);

// One measured event. Fields that do not apply hold -1.
struct RunRecord {
  std::string config_hash;
  uint64_t seed = 0;
  std::string experiment;
  int64_t m = -1;
  int64_t domain = -1;
  int64_t n = -1;
  int64_t d = -1;
  std::string flavor;
  int64_t iteration = -1;
  int64_t selected = -1;
  double error = 0.0;
  double samples_drawn = 0.0;
  int64_t wall_nanos = 0;
  int64_t build_nanos = 0;

  bool operator==(const RunRecord&) const = default;
};

inline constexpr const char* kCsvHeader =
    "config_hash,seed,experiment,m,U,n,d,flavor,iteration,selected,error,"
    "samples_drawn,wall_nanos,build_nanos";

// Header row, then one line per record. Fields holding commas, quotes or
// line breaks are quoted with doubled inner quotes.
void EmitCsv(const std::vector<RunRecord>& records, std::ostream& out);
// Inverse of EmitCsv. Throws std::runtime_error on a malformed document.
std::vector<RunRecord> ParseCsv(std::istream& in);

// Runs the configured experiment after resolving defaults. Repetitions are
// spread over `workers` threads; the output order does not depend on it.
// Progress lines go to `log` when it is non-null.
std::vector<RunRecord> RunExperiment(const ExperimentConfig& config,
                                     std::ostream* log = nullptr,
                                     size_t workers = 1);

}  // namespace fastmwem

#endif  // FASTMWEM_HARNESS_H_
