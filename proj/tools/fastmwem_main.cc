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

// Command-line driver for the experiment harness.
//
//   fastmwem <experiment> --config <file.json> [--seed N] [--out results.csv]
//            [--paper-scale] [--workers N]
//
// Exit status: 0 on success, 2 on a configuration or usage error, 1 when an
// experiment fails at run time.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fastmwem/harness.h"
#include "json.hpp"

namespace {

constexpr int kConfigErrorExit = 2;

fastmwem::ExperimentConfig LoadConfig(const std::string& path,
                                      const std::string& experiment) {
  std::ifstream in(path);
  if (!in) throw fastmwem::ConfigError("cannot open config '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw fastmwem::ConfigError("config '" + path + "' is not valid JSON: " +
                                e.what());
  }
  if (doc.is_object() && !doc.contains("experiment")) {
    doc["experiment"] = experiment;
  }
  fastmwem::ExperimentConfig config = fastmwem::ParseConfig(doc);
  if (config.experiment != fastmwem::ParseExperiment(experiment)) {
    throw fastmwem::ConfigError(
        "config names experiment '" +
        fastmwem::ExperimentName(config.experiment) + "' but '" + experiment +
        "' was requested");
  }
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Private query release and LP experiments"};
  std::string experiment;
  std::string config_path;
  std::optional<uint64_t> seed;
  std::string out_path;
  bool paper_scale = false;
  size_t workers = 1;
  app.add_option("experiment", experiment,
                 "query-parity, query-error-indices, query-scaling, "
                 "margin-study, n-ablation, lp-parity or lp-scaling")
      ->required();
  app.add_option("--config", config_path, "JSON experiment config")
      ->required();
  app.add_option("--seed", seed, "Override the config seed");
  app.add_option("--out", out_path, "CSV output path (default: stdout)");
  app.add_flag("--paper-scale", paper_scale,
               "Use the full-size defaults instead of desk scale");
  app.add_option("--workers", workers, "Threads for repetitions")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigErrorExit;
  }

  fastmwem::ExperimentConfig config;
  try {
    config = LoadConfig(config_path, experiment);
    if (seed) config.seed = *seed;
    if (paper_scale) config.paper_scale = true;
    config = fastmwem::ResolveExperiment(config);
  } catch (const fastmwem::ConfigError& e) {
    std::cerr << "fastmwem: config error: " << e.what() << '\n';
    return kConfigErrorExit;
  }

  std::cerr << "[fastmwem] " << experiment
            << " config_hash=" << fastmwem::ConfigHash(config) << '\n';
  try {
    const auto records = fastmwem::RunExperiment(config, &std::cerr, workers);
    if (out_path.empty()) {
      fastmwem::EmitCsv(records, std::cout);
    } else {
      std::ofstream out(out_path);
      if (!out) {
        std::cerr << "fastmwem: cannot write '" << out_path << "'\n";
        return 1;
      }
      fastmwem::EmitCsv(records, out);
    }
    std::cerr << "[fastmwem] wrote " << records.size() << " records\n";
  } catch (const std::exception& e) {
    std::cerr << "fastmwem: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
