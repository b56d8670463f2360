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

#include "fastmwem/harness.h"

#include <algorithm>
#include <cerrno>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "fastmwem/generators.h"
#include "fastmwem/lpsolve.h"
#include "fastmwem/mwem.h"
#include "fastmwem/rng.h"

namespace fastmwem {
namespace {

using nlohmann::json;

struct ExperimentEntry {
  Experiment experiment;
  const char* name;
};

constexpr ExperimentEntry kExperiments[] = {
    {Experiment::kQueryParity, "query-parity"},
    {Experiment::kQueryErrorIndices, "query-error-indices"},
    {Experiment::kQueryScaling, "query-scaling"},
    {Experiment::kMarginStudy, "margin-study"},
    {Experiment::kNAblation, "n-ablation"},
    {Experiment::kLpParity, "lp-parity"},
    {Experiment::kLpScaling, "lp-scaling"},
};

bool IsLp(Experiment e) {
  return e == Experiment::kLpParity || e == Experiment::kLpScaling;
}

// Baseline name for the experiment family.
const char* BaselineName(Experiment e) {
  return IsLp(e) ? "exhaustive" : "classic";
}

// Noise stream per algorithm, independent of the order flavors are listed.
uint64_t FlavorStream(const std::string& flavor) {
  if (flavor == "classic" || flavor == "exhaustive") return 2;
  return 3 + static_cast<uint64_t>(ParseFlavor(flavor));
}

size_t ReadCount(const json& value, const char* key, bool allow_zero) {
  if (!value.is_number_integer()) {
    throw ConfigError(std::string("'") + key + "' must be an integer");
  }
  if (value.is_number_unsigned()) {
    const auto v = value.get<uint64_t>();
    if (v == 0 && !allow_zero) {
      throw ConfigError(std::string("'") + key + "' must be positive");
    }
    return static_cast<size_t>(v);
  }
  const auto v = value.get<int64_t>();
  if (v < 0 || (v == 0 && !allow_zero)) {
    throw ConfigError(std::string("'") + key + "' must be positive");
  }
  return static_cast<size_t>(v);
}

std::vector<size_t> ReadCountList(const json& value, const char* key) {
  std::vector<size_t> out;
  if (value.is_array()) {
    if (value.empty()) {
      throw ConfigError(std::string("'") + key + "' must not be empty");
    }
    for (const auto& item : value) out.push_back(ReadCount(item, key, false));
  } else {
    out.push_back(ReadCount(value, key, false));
  }
  return out;
}

double ReadNumber(const json& value, const char* key) {
  if (!value.is_number()) {
    throw ConfigError(std::string("'") + key + "' must be a number");
  }
  const double v = value.get<double>();
  if (!std::isfinite(v)) {
    throw ConfigError(std::string("'") + key + "' must be finite");
  }
  return v;
}

IndexConfig ReadIndex(const json& doc) {
  if (!doc.is_object()) throw ConfigError("'index' must be an object");
  IndexConfig config;
  for (const auto& [key, value] : doc.items()) {
    if (key == "nlist") {
      config.nlist = ReadCount(value, "index.nlist", true);
    } else if (key == "nprobe") {
      config.nprobe = ReadCount(value, "index.nprobe", true);
    } else if (key == "m_neighbors") {
      config.m_neighbors = ReadCount(value, "index.m_neighbors", false);
    } else if (key == "ef_construction") {
      config.ef_construction = ReadCount(value, "index.ef_construction", false);
    } else if (key == "ef_search") {
      config.ef_search = ReadCount(value, "index.ef_search", false);
    } else if (key == "kmeans_iterations") {
      config.kmeans_iterations =
          ReadCount(value, "index.kmeans_iterations", false);
    } else if (key == "kmeans_points_per_list") {
      config.kmeans_points_per_list =
          ReadCount(value, "index.kmeans_points_per_list", false);
    } else if (key == "seed") {
      config.seed = ReadCount(value, "index.seed", true);
    } else {
      throw ConfigError("unknown key 'index." + key + "'");
    }
  }
  return config;
}

void CheckFlavors(const ExperimentConfig& config) {
  for (const auto& flavor : config.flavors) {
    if (flavor == BaselineName(config.experiment)) continue;
    try {
      ParseFlavor(flavor);
    } catch (const std::invalid_argument&) {
      throw ConfigError("flavor '" + flavor + "' is not valid for " +
                        ExperimentName(config.experiment));
    }
  }
}

void Validate(const ExperimentConfig& config) {
  if (!(config.epsilon > 0.0)) throw ConfigError("'epsilon' must be > 0");
  if (!(config.delta > 0.0 && config.delta < 1.0)) {
    throw ConfigError("'delta' must lie in (0, 1)");
  }
  if (config.alpha < 0.0) throw ConfigError("'alpha' must be > 0");
  if (config.domain == 1) throw ConfigError("'U' must be at least 2");
  if (config.repetitions == 0) throw ConfigError("'repetitions' must be > 0");
  CheckFlavors(config);
}

// ---------------------------------------------------------------- CSV

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void WriteField(std::ostream& out, const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) {
    out << field;
    return;
  }
  out << '"';
  for (char ch : field) {
    if (ch == '"') out << '"';
    out << ch;
  }
  out << '"';
}

// Splits one record. Returns false at end of input.
bool ReadCsvRow(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;
  std::string field;
  bool quoted = false;
  bool after_quote = false;
  for (;;) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) {
      if (quoted) throw std::runtime_error("csv: unterminated quoted field");
      fields.push_back(std::move(field));
      return true;
    }
    const char ch = static_cast<char>(c);
    if (quoted) {
      if (ch != '"') {
        field += ch;
      } else if (in.peek() == '"') {
        in.get();
        field += '"';
      } else {
        quoted = false;
        after_quote = true;
      }
      continue;
    }
    if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
      after_quote = false;
    } else if (ch == '\n' || ch == '\r') {
      if (ch == '\r' && in.peek() == '\n') in.get();
      fields.push_back(std::move(field));
      return true;
    } else if (ch == '"' && field.empty() && !after_quote) {
      quoted = true;
    } else if (after_quote) {
      throw std::runtime_error("csv: text after closing quote");
    } else {
      field += ch;
    }
  }
}

int64_t ParseInt(const std::string& text, const char* column) {
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(text.c_str(), &end, 10);
  if (text.empty() || errno != 0 || *end != '\0') {
    throw std::runtime_error(std::string("csv: bad integer in ") + column);
  }
  return v;
}

uint64_t ParseUnsigned(const std::string& text, const char* column) {
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
  if (text.empty() || text[0] == '-' || errno != 0 || *end != '\0') {
    throw std::runtime_error(std::string("csv: bad integer in ") + column);
  }
  return v;
}

double ParseDouble(const std::string& text, const char* column) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || *end != '\0') {
    throw std::runtime_error(std::string("csv: bad number in ") + column);
  }
  return v;
}

// ---------------------------------------------------------------- runners

struct RunContext {
  const ExperimentConfig& config;
  std::string hash;
  std::ostream* log;
  std::mutex* log_mutex;

  void Log(const std::string& line) const {
    if (log == nullptr) return;
    std::lock_guard<std::mutex> lock(*log_mutex);
    *log << "[fastmwem] " << line << '\n';
    log->flush();
  }

  RunRecord Base(uint64_t seed) const {
    RunRecord r;
    r.config_hash = hash;
    r.seed = seed;
    r.experiment = ExperimentName(config.experiment);
    return r;
  }
};

MwemResult RunMwemFlavor(const std::string& flavor, const QueryInstance& inst,
                         const MwemParams& params, const IndexConfig& index,
                         uint64_t seed) {
  Rng rng(DeriveSeed(seed, FlavorStream(flavor)));
  if (flavor == "classic") return MwemClassic(inst.queries, inst.histogram,
                                              params, rng);
  FastMwemOptions options;
  options.index = index;
  options.index.flavor = ParseFlavor(flavor);
  options.index.seed = DeriveSeed(seed, 16);
  return FastMwem(inst.queries, inst.histogram, params, options, rng);
}

MwemParams QueryParams(const ExperimentConfig& c, size_t iterations,
                       bool track_error) {
  MwemParams params;
  params.alpha = c.alpha;
  params.epsilon = c.epsilon;
  params.delta = c.delta;
  params.iterations = iterations;
  params.track_error = track_error;
  return params;
}

// Per-iteration rows for one MWEM run. `metric` picks the error column.
template <typename Metric>
void AppendTrace(const RunContext& ctx, uint64_t seed, size_t m, size_t n,
                 const std::string& flavor, const MwemResult& result,
                 Metric metric, std::vector<RunRecord>& out) {
  for (const auto& it : result.trace) {
    RunRecord r = ctx.Base(seed);
    r.m = static_cast<int64_t>(m);
    r.domain = static_cast<int64_t>(ctx.config.domain);
    r.n = static_cast<int64_t>(n);
    r.flavor = flavor;
    r.iteration = static_cast<int64_t>(it.iteration);
    r.selected = static_cast<int64_t>(it.selected);
    r.error = metric(it);
    r.samples_drawn = static_cast<double>(it.samples_drawn);
    r.wall_nanos = it.wall_nanos;
    r.build_nanos = result.build_nanos;
    out.push_back(std::move(r));
  }
}

// query-parity, query-error-indices, query-scaling and margin-study.
std::vector<RunRecord> RunQueryFamily(const RunContext& ctx, uint64_t seed) {
  const auto& c = ctx.config;
  const bool margin = c.experiment == Experiment::kMarginStudy;
  const bool scaling = c.experiment == Experiment::kQueryScaling;
  std::vector<RunRecord> out;
  for (size_t m : c.m) {
    for (size_t n : c.n) {
      const uint64_t cell = DeriveSeed(DeriveSeed(seed, m), n);
      const QueryInstance inst =
          GenQueryInstance(c.domain, n, m, DeriveSeed(cell, 1));
      const MwemParams params =
          QueryParams(c, c.iterations, !(margin || scaling));
      std::vector<std::pair<std::string, MwemResult>> runs;
      for (const auto& flavor : c.flavors) {
        MwemResult result = RunMwemFlavor(flavor, inst, params, c.index, cell);
        ctx.Log(ExperimentName(c.experiment) + " seed=" +
                std::to_string(seed) + " m=" + std::to_string(m) +
                " n=" + std::to_string(n) + " flavor=" + flavor +
                " final_error=" + FormatDouble(result.final_error));
        if (margin) {
          const double md = static_cast<double>(m);
          AppendTrace(ctx, seed, m, n, flavor, result,
                      [md](const IterationRecord& it) {
                        return static_cast<double>(it.extra_samples) / md;
                      },
                      out);
        } else {
          AppendTrace(ctx, seed, m, n, flavor, result,
                      [](const IterationRecord& it) { return it.error; }, out);
        }
        runs.emplace_back(flavor, std::move(result));
      }
      if (c.experiment != Experiment::kQueryParity) continue;
      // Error difference against the baseline, one row per iteration.
      const auto base = std::find_if(runs.begin(), runs.end(), [](auto& r) {
        return r.first == "classic";
      });
      if (base == runs.end()) continue;
      for (const auto& [flavor, result] : runs) {
        if (flavor == "classic") continue;
        for (size_t t = 0; t < result.trace.size(); ++t) {
          RunRecord r = ctx.Base(seed);
          r.m = static_cast<int64_t>(m);
          r.domain = static_cast<int64_t>(c.domain);
          r.n = static_cast<int64_t>(n);
          r.flavor = "classic-minus-" + flavor;
          r.iteration = static_cast<int64_t>(result.trace[t].iteration);
          r.error = base->second.trace[t].error - result.trace[t].error;
          out.push_back(std::move(r));
        }
      }
    }
  }
  return out;
}

std::vector<RunRecord> RunNAblation(const RunContext& ctx, uint64_t seed) {
  const auto& c = ctx.config;
  std::vector<RunRecord> out;
  for (size_t m : c.m) {
    for (size_t n : c.n) {
      const uint64_t cell = DeriveSeed(DeriveSeed(seed, m), n);
      const QueryInstance inst =
          GenQueryInstance(c.domain, n, m, DeriveSeed(cell, 1));
      const size_t iterations = c.iterations > 0 ? c.iterations : n * n;
      const MwemParams params = QueryParams(c, iterations, false);
      for (const auto& flavor : c.flavors) {
        const MwemResult result =
            RunMwemFlavor(flavor, inst, params, c.index, cell);
        int64_t wall = 0;
        double samples = 0.0;
        for (const auto& it : result.trace) {
          wall += it.wall_nanos;
          samples += static_cast<double>(it.samples_drawn);
        }
        RunRecord r = ctx.Base(seed);
        r.m = static_cast<int64_t>(m);
        r.domain = static_cast<int64_t>(c.domain);
        r.n = static_cast<int64_t>(n);
        r.flavor = flavor;
        r.iteration = static_cast<int64_t>(result.trace.size());
        r.error = result.final_error;
        r.samples_drawn = samples / static_cast<double>(result.trace.size());
        r.wall_nanos = wall / static_cast<int64_t>(result.trace.size());
        r.build_nanos = result.build_nanos;
        out.push_back(std::move(r));
        ctx.Log("n-ablation seed=" + std::to_string(seed) + " n=" +
                std::to_string(n) + " T=" + std::to_string(iterations) +
                " flavor=" + flavor +
                " final_error=" + FormatDouble(result.final_error));
      }
    }
  }
  return out;
}

std::vector<RunRecord> RunLp(const RunContext& ctx, uint64_t seed) {
  const auto& c = ctx.config;
  std::vector<RunRecord> out;
  for (size_t m : c.m) {
    const uint64_t cell = DeriveSeed(seed, m);
    const PlantedLp planted = GenLpInstance(m, c.d, DeriveSeed(cell, 1));
    for (const auto& flavor : c.flavors) {
      LpSolveOptions options;
      options.iterations = c.iterations;
      options.exhaustive = flavor == "exhaustive";
      options.index = c.index;
      if (!options.exhaustive) options.index.flavor = ParseFlavor(flavor);
      options.index.seed = DeriveSeed(cell, 16);
      Rng rng(DeriveSeed(cell, FlavorStream(flavor)));
      const FeasibilityReport report = ScalarPrivateSolve(
          planted.lp, c.alpha, c.epsilon, c.delta, options, rng);
      RunRecord r = ctx.Base(seed);
      r.m = static_cast<int64_t>(m);
      r.d = static_cast<int64_t>(c.d);
      r.flavor = flavor;
      r.iteration = static_cast<int64_t>(report.iterations);
      r.error = static_cast<double>(report.ViolatedCountAt(c.alpha)) /
                static_cast<double>(m);
      r.samples_drawn = report.mean_samples;
      r.wall_nanos =
          report.solve_nanos / static_cast<int64_t>(report.iterations);
      r.build_nanos = report.build_nanos;
      out.push_back(std::move(r));
      ctx.Log(ExperimentName(c.experiment) + " seed=" + std::to_string(seed) +
              " m=" + std::to_string(m) + " flavor=" + flavor +
              " violated_fraction=" + FormatDouble(r.error));
    }
  }
  return out;
}

std::vector<RunRecord> RunRepetition(const RunContext& ctx, uint64_t seed) {
  switch (ctx.config.experiment) {
    case Experiment::kQueryParity:
    case Experiment::kQueryErrorIndices:
    case Experiment::kQueryScaling:
    case Experiment::kMarginStudy:
      return RunQueryFamily(ctx, seed);
    case Experiment::kNAblation:
      return RunNAblation(ctx, seed);
    case Experiment::kLpParity:
    case Experiment::kLpScaling:
      return RunLp(ctx, seed);
  }
  return {};
}

}  // namespace

std::string ExperimentName(Experiment experiment) {
  for (const auto& entry : kExperiments) {
    if (entry.experiment == experiment) return entry.name;
  }
  throw std::invalid_argument("unknown experiment value");
}

Experiment ParseExperiment(const std::string& name) {
  for (const auto& entry : kExperiments) {
    if (name == entry.name) return entry.experiment;
  }
  throw ConfigError("unknown experiment '" + name + "'");
}

ExperimentConfig ParseConfig(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig config;
  bool has_experiment = false;
  for (const auto& [key, value] : doc.items()) {
    if (key == "experiment") {
      if (!value.is_string()) throw ConfigError("'experiment' must be a string");
      config.experiment = ParseExperiment(value.get<std::string>());
      has_experiment = true;
    } else if (key == "seed") {
      config.seed = ReadCount(value, "seed", true);
    } else if (key == "m") {
      config.m = ReadCountList(value, "m");
    } else if (key == "n") {
      config.n = ReadCountList(value, "n");
    } else if (key == "U") {
      config.domain = ReadCount(value, "U", false);
    } else if (key == "d") {
      config.d = ReadCount(value, "d", false);
    } else if (key == "T") {
      config.iterations = ReadCount(value, "T", false);
    } else if (key == "epsilon") {
      config.epsilon = ReadNumber(value, "epsilon");
    } else if (key == "delta") {
      config.delta = ReadNumber(value, "delta");
    } else if (key == "alpha") {
      config.alpha = ReadNumber(value, "alpha");
      if (!(config.alpha > 0.0)) throw ConfigError("'alpha' must be > 0");
    } else if (key == "flavors") {
      if (!value.is_array() || value.empty()) {
        throw ConfigError("'flavors' must be a non-empty list of names");
      }
      for (const auto& item : value) {
        if (!item.is_string()) throw ConfigError("'flavors' entries are names");
        config.flavors.push_back(item.get<std::string>());
      }
    } else if (key == "index") {
      config.index = ReadIndex(value);
    } else if (key == "repetitions") {
      config.repetitions = ReadCount(value, "repetitions", false);
    } else if (key == "paper_scale") {
      if (!value.is_boolean()) throw ConfigError("'paper_scale' must be bool");
      config.paper_scale = value.get<bool>();
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  }
  if (!has_experiment) throw ConfigError("missing key 'experiment'");
  Validate(config);
  return config;
}

ExperimentConfig ResolveExperiment(const ExperimentConfig& config) {
  Validate(config);
  ExperimentConfig r = config;
  const bool paper = config.paper_scale;
  auto set_m = [&](std::vector<size_t> desk, std::vector<size_t> full) {
    if (r.m.empty()) r.m = paper ? std::move(full) : std::move(desk);
  };
  auto set = [&](size_t& field, size_t desk, size_t full) {
    if (field == 0) field = paper ? full : desk;
  };
  auto set_flavors = [&](std::vector<std::string> names) {
    if (r.flavors.empty()) r.flavors = std::move(names);
  };
  if (r.alpha == 0.0) r.alpha = 0.5;
  if (IsLp(r.experiment)) {
    r.domain = 0;
    r.n.clear();
    set(r.d, 20, 20);
  } else {
    r.d = 0;
    if (r.n.empty() && r.experiment != Experiment::kNAblation) r.n = {500};
  }
  switch (r.experiment) {
    case Experiment::kQueryParity:
      set_m({200, 500, 1000}, {200, 500, 1000});
      set(r.domain, 512, 3000);
      set(r.iterations, 2000, 20000);
      set_flavors({"classic", "flat"});
      break;
    case Experiment::kQueryErrorIndices:
      set_m({1000}, {1000});
      set(r.domain, 512, 3000);
      set(r.iterations, 2000, 20000);
      set_flavors({"flat", "ivf", "hnsw"});
      break;
    case Experiment::kQueryScaling:
      set_m({10000, 20000, 50000, 100000},
            {10000, 20000, 30000, 50000, 70000, 100000});
      set(r.domain, 32, 3000);
      set(r.iterations, 100, 1000);
      set_flavors({"flat", "ivf", "hnsw"});
      break;
    case Experiment::kMarginStudy:
      set_m({500, 2000, 20000}, {500, 2000, 20000});
      set(r.domain, 512, 3000);
      set(r.iterations, 500, 500);
      set_flavors({"flat"});
      break;
    case Experiment::kNAblation:
      set_m({100}, {100});
      set(r.domain, 512, 3000);
      if (r.n.empty()) {
        r.n = paper ? std::vector<size_t>{10, 20, 30, 40, 50, 60, 70, 80, 90,
                                          100}
                    : std::vector<size_t>{10, 20, 30, 40};
      }
      set_flavors({"classic", "flat"});
      break;
    case Experiment::kLpParity:
      set_m({2000}, {2000});
      set(r.iterations, 1000, 5000);
      set_flavors({"exhaustive", "flat"});
      break;
    case Experiment::kLpScaling:
      set_m({10000, 30000, 100000},
            {300000, 600000, 900000, 1200000, 1500000});
      set(r.iterations, 200, 1000);
      set_flavors({"exhaustive", "flat", "ivf", "hnsw"});
      break;
  }
  Validate(r);
  return r;
}

json ConfigToJson(const ExperimentConfig& config) {
  json index = {
      {"nlist", config.index.nlist},
      {"nprobe", config.index.nprobe},
      {"m_neighbors", config.index.m_neighbors},
      {"ef_construction", config.index.ef_construction},
      {"ef_search", config.index.ef_search},
      {"kmeans_iterations", config.index.kmeans_iterations},
      {"kmeans_points_per_list", config.index.kmeans_points_per_list},
      {"seed", config.index.seed},
  };
  return json{
      {"experiment", ExperimentName(config.experiment)},
      {"seed", config.seed},
      {"m", config.m},
      {"n", config.n},
      {"U", config.domain},
      {"d", config.d},
      {"T", config.iterations},
      {"epsilon", config.epsilon},
      {"delta", config.delta},
      {"alpha", config.alpha},
      {"flavors", config.flavors},
      {"index", index},
      {"repetitions", config.repetitions},
      {"paper_scale", config.paper_scale},
  };
}

std::string ConfigHash(const ExperimentConfig& config) {
  const std::string text = ConfigToJson(config).dump();
  uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, hash);
  return buf;
}

void EmitCsv(const std::vector<RunRecord>& records, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    WriteField(out, r.config_hash);
    out << ',' << r.seed << ',';
    WriteField(out, r.experiment);
    out << ',' << r.m << ',' << r.domain << ',' << r.n << ',' << r.d << ',';
    WriteField(out, r.flavor);
    out << ',' << r.iteration << ',' << r.selected << ','
        << FormatDouble(r.error) << ',' << FormatDouble(r.samples_drawn)
        << ',' << r.wall_nanos << ',' << r.build_nanos << '\n';
  }
}

std::vector<RunRecord> ParseCsv(std::istream& in) {
  std::vector<std::string> fields;
  if (!ReadCsvRow(in, fields)) throw std::runtime_error("csv: missing header");
  std::string header;
  for (size_t i = 0; i < fields.size(); ++i) {
    header += (i > 0 ? "," : "") + fields[i];
  }
  if (header != kCsvHeader) throw std::runtime_error("csv: unexpected header");
  std::vector<RunRecord> records;
  while (ReadCsvRow(in, fields)) {
    if (fields.size() != 14) {
      throw std::runtime_error("csv: expected 14 fields, got " +
                               std::to_string(fields.size()));
    }
    RunRecord r;
    r.config_hash = fields[0];
    r.seed = ParseUnsigned(fields[1], "seed");
    r.experiment = fields[2];
    r.m = ParseInt(fields[3], "m");
    r.domain = ParseInt(fields[4], "U");
    r.n = ParseInt(fields[5], "n");
    r.d = ParseInt(fields[6], "d");
    r.flavor = fields[7];
    r.iteration = ParseInt(fields[8], "iteration");
    r.selected = ParseInt(fields[9], "selected");
    r.error = ParseDouble(fields[10], "error");
    r.samples_drawn = ParseDouble(fields[11], "samples_drawn");
    r.wall_nanos = ParseInt(fields[12], "wall_nanos");
    r.build_nanos = ParseInt(fields[13], "build_nanos");
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<RunRecord> RunExperiment(const ExperimentConfig& config,
                                     std::ostream* log, size_t workers) {
  const ExperimentConfig resolved = ResolveExperiment(config);
  std::mutex log_mutex;
  const RunContext ctx{resolved, ConfigHash(resolved), log, &log_mutex};
  const size_t reps = resolved.repetitions;
  std::vector<std::vector<RunRecord>> per_rep(reps);
  std::vector<std::exception_ptr> errors(reps);
  auto run = [&](size_t rep) {
    try {
      per_rep[rep] = RunRepetition(ctx, resolved.seed + rep);
    } catch (...) {
      errors[rep] = std::current_exception();
    }
  };
  workers = std::clamp<size_t>(workers, 1, reps);
  if (workers == 1) {
    for (size_t rep = 0; rep < reps; ++rep) run(rep);
  } else {
    std::vector<std::thread> pool;
    for (size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (size_t rep = w; rep < reps; rep += workers) run(rep);
      });
    }
    for (auto& t : pool) t.join();
  }
  std::vector<RunRecord> records;
  for (size_t rep = 0; rep < reps; ++rep) {
    if (errors[rep]) std::rethrow_exception(errors[rep]);
    records.insert(records.end(), per_rep[rep].begin(), per_rep[rep].end());
  }
  return records;
}

}  // namespace fastmwem
