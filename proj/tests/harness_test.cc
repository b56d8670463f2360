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

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fastmwem/generators.h"
#include "gtest/gtest.h"

namespace fastmwem {
namespace {

using nlohmann::json;

// Drops the two timing columns so runs can be compared byte for byte.
std::string WithoutTimes(const std::vector<RunRecord>& records) {
  std::vector<RunRecord> copy = records;
  for (auto& r : copy) {
    r.wall_nanos = 0;
    r.build_nanos = 0;
  }
  std::ostringstream out;
  EmitCsv(copy, out);
  return out.str();
}

size_t CountFields(const std::string& line) {
  size_t fields = 1;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') quoted = !quoted;
    if (ch == ',' && !quoted) ++fields;
  }
  return fields;
}

ExperimentConfig Small(const std::string& experiment) {
  ExperimentConfig config;
  config.experiment = ParseExperiment(experiment);
  config.seed = 11;
  return config;
}

TEST(GenQueryInstanceTest, DeterministicPerSeed) {
  const QueryInstance a = GenQueryInstance(64, 100, 20, 5);
  const QueryInstance b = GenQueryInstance(64, 100, 20, 5);
  const QueryInstance c = GenQueryInstance(64, 100, 20, 6);
  EXPECT_EQ(a.histogram.mass, b.histogram.mass);
  EXPECT_EQ(a.queries.data(), b.queries.data());
  EXPECT_NE(a.queries.data(), c.queries.data());
}

TEST(GenQueryInstanceTest, HistogramIsAnEmpiricalDistribution) {
  const size_t n = 500;
  const QueryInstance inst = GenQueryInstance(512, n, 10, 2);
  double total = 0.0;
  for (double p : inst.histogram.mass) {
    total += p;
    // Every mass is a multiple of 1/n.
    EXPECT_NEAR(p * n, std::round(p * n), 1e-9);
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_EQ(inst.histogram.n_source, n);
}

TEST(GenQueryInstanceTest, PaperDomainSupportAtMostAQuarter) {
  const QueryInstance inst = GenQueryInstance(3000, 500, 40, 8);
  for (size_t i = 0; i < inst.queries.rows(); ++i) {
    size_t support = 0;
    for (size_t x = 0; x < 3000; ++x) {
      const double v = inst.queries(i, x);
      ASSERT_TRUE(v == 0.0 || v == 1.0);
      support += v == 1.0;
    }
    EXPECT_LE(support, 750u);
    EXPECT_GT(support, 0u);
  }
}

TEST(GenQueryInstanceTest, RecordAndQueryCentres) {
  // Records ~ N(U/3, U/15); the mean of 20000 draws has standard error
  // (U/15) / sqrt(20000), about 0.1 for U = 1500. Clamping is negligible.
  const size_t u = 1500;
  const QueryInstance inst = GenQueryInstance(u, 20000, 200, 4);
  double mean = 0.0;
  for (size_t x = 0; x < u; ++x) mean += inst.histogram.mass[x] * x;
  EXPECT_NEAR(mean, u / 3.0, 1.0);
  // Query positions ~ N(U/2, U/5): the support centre sits near U/2.
  double centre = 0.0;
  double ones = 0.0;
  for (size_t i = 0; i < inst.queries.rows(); ++i) {
    for (size_t x = 0; x < u; ++x) {
      centre += inst.queries(i, x) * x;
      ones += inst.queries(i, x);
    }
  }
  EXPECT_NEAR(centre / ones, u / 2.0, 15.0);
}

TEST(GenQueryInstanceTest, Rejections) {
  EXPECT_THROW(GenQueryInstance(1, 10, 10, 0), std::invalid_argument);
  EXPECT_THROW(GenQueryInstance(10, 0, 10, 0), std::invalid_argument);
  EXPECT_THROW(GenQueryInstance(10, 10, 0, 0), std::invalid_argument);
}

TEST(ExperimentNameTest, RoundTrip) {
  for (const char* name :
       {"query-parity", "query-error-indices", "query-scaling",
        "margin-study", "n-ablation", "lp-parity", "lp-scaling"}) {
    EXPECT_EQ(ExperimentName(ParseExperiment(name)), name);
  }
  EXPECT_THROW(ParseExperiment("query_parity"), ConfigError);
}

TEST(ParseConfigTest, DefaultsAndFullDocument) {
  const ExperimentConfig minimal =
      ParseConfig(json{{"experiment", "query-parity"}});
  EXPECT_EQ(minimal.epsilon, 1.0);
  EXPECT_EQ(minimal.delta, 1e-3);
  EXPECT_EQ(minimal.repetitions, 1u);
  EXPECT_TRUE(minimal.m.empty());

  const json doc = {
      {"experiment", "query-scaling"},
      {"seed", 42},
      {"m", 5000},
      {"n", {100, 200}},
      {"U", 64},
      {"T", 30},
      {"epsilon", 0.5},
      {"delta", 1e-6},
      {"alpha", 0.25},
      {"flavors", {"hnsw", "ivf"}},
      {"index", {{"ef_search", 128}, {"nlist", 40}, {"nprobe", 4}}},
      {"repetitions", 3},
      {"paper_scale", true},
  };
  const ExperimentConfig c = ParseConfig(doc);
  EXPECT_EQ(c.experiment, Experiment::kQueryScaling);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.m, std::vector<size_t>{5000});
  EXPECT_EQ(c.n, (std::vector<size_t>{100, 200}));
  EXPECT_EQ(c.domain, 64u);
  EXPECT_EQ(c.iterations, 30u);
  EXPECT_EQ(c.epsilon, 0.5);
  EXPECT_EQ(c.delta, 1e-6);
  EXPECT_EQ(c.alpha, 0.25);
  EXPECT_EQ(c.flavors, (std::vector<std::string>{"hnsw", "ivf"}));
  EXPECT_EQ(c.index.ef_search, 128u);
  EXPECT_EQ(c.index.nlist, 40u);
  EXPECT_EQ(c.index.nprobe, 4u);
  EXPECT_EQ(c.repetitions, 3u);
  EXPECT_TRUE(c.paper_scale);
}

TEST(ParseConfigTest, Errors) {
  const json base = {{"experiment", "query-parity"}};
  auto with = [&](const char* key, json value) {
    json doc = base;
    doc[key] = std::move(value);
    return doc;
  };
  EXPECT_THROW(ParseConfig(json::array()), ConfigError);
  EXPECT_THROW(ParseConfig(json{{"seed", 1}}), ConfigError);
  EXPECT_THROW(ParseConfig(json{{"experiment", 3}}), ConfigError);
  EXPECT_THROW(ParseConfig(with("bogus", 1)), ConfigError);
  EXPECT_THROW(ParseConfig(with("m", 0)), ConfigError);
  EXPECT_THROW(ParseConfig(with("m", -5)), ConfigError);
  EXPECT_THROW(ParseConfig(with("m", json::array())), ConfigError);
  EXPECT_THROW(ParseConfig(with("m", "200")), ConfigError);
  EXPECT_THROW(ParseConfig(with("U", 1)), ConfigError);
  EXPECT_THROW(ParseConfig(with("T", 2.5)), ConfigError);
  EXPECT_THROW(ParseConfig(with("epsilon", 0)), ConfigError);
  EXPECT_THROW(ParseConfig(with("delta", 1)), ConfigError);
  EXPECT_THROW(ParseConfig(with("alpha", -1)), ConfigError);
  EXPECT_THROW(ParseConfig(with("repetitions", 0)), ConfigError);
  EXPECT_THROW(ParseConfig(with("paper_scale", 1)), ConfigError);
  EXPECT_THROW(ParseConfig(with("flavors", json{"lsh"})), ConfigError);
  EXPECT_THROW(ParseConfig(with("flavors", json{"exhaustive"})), ConfigError);
  EXPECT_THROW(ParseConfig(with("index", json{{"ef", 3}})), ConfigError);
  EXPECT_THROW(
      ParseConfig(json{{"experiment", "lp-parity"}, {"flavors", {"classic"}}}),
      ConfigError);
}

TEST(ResolveExperimentTest, DeskAndPaperDefaults) {
  const ExperimentConfig desk = ResolveExperiment(Small("query-parity"));
  EXPECT_EQ(desk.m, (std::vector<size_t>{200, 500, 1000}));
  EXPECT_EQ(desk.domain, 512u);
  EXPECT_EQ(desk.n, std::vector<size_t>{500});
  EXPECT_EQ(desk.iterations, 2000u);
  EXPECT_EQ(desk.flavors, (std::vector<std::string>{"classic", "flat"}));

  ExperimentConfig paper_in = Small("query-parity");
  paper_in.paper_scale = true;
  const ExperimentConfig paper = ResolveExperiment(paper_in);
  EXPECT_EQ(paper.domain, 3000u);
  EXPECT_EQ(paper.iterations, 20000u);

  const ExperimentConfig margin = ResolveExperiment(Small("margin-study"));
  EXPECT_EQ(margin.m, (std::vector<size_t>{500, 2000, 20000}));
  EXPECT_EQ(margin.iterations, 500u);

  const ExperimentConfig ablation = ResolveExperiment(Small("n-ablation"));
  EXPECT_EQ(ablation.m, std::vector<size_t>{100});
  EXPECT_EQ(ablation.iterations, 0u);

  const ExperimentConfig lp = ResolveExperiment(Small("lp-parity"));
  EXPECT_EQ(lp.m, std::vector<size_t>{2000});
  EXPECT_EQ(lp.d, 20u);
  EXPECT_EQ(lp.alpha, 0.5);
  EXPECT_EQ(lp.iterations, 1000u);
  EXPECT_EQ(lp.flavors, (std::vector<std::string>{"exhaustive", "flat"}));

  ExperimentConfig lp_paper_in = Small("lp-scaling");
  lp_paper_in.paper_scale = true;
  const ExperimentConfig lp_paper = ResolveExperiment(lp_paper_in);
  EXPECT_EQ(lp_paper.m.front(), 300000u);
  EXPECT_EQ(lp_paper.m.back(), 1500000u);
}

TEST(ResolveExperimentTest, ExplicitValuesWinAndResolutionIsIdempotent) {
  ExperimentConfig in = Small("query-scaling");
  in.m = {123};
  in.domain = 40;
  in.iterations = 7;
  in.paper_scale = true;
  const ExperimentConfig once = ResolveExperiment(in);
  EXPECT_EQ(once.m, std::vector<size_t>{123});
  EXPECT_EQ(once.domain, 40u);
  EXPECT_EQ(once.iterations, 7u);
  EXPECT_EQ(ConfigToJson(ResolveExperiment(once)), ConfigToJson(once));
}

TEST(ConfigHashTest, FnvOfCanonicalDump) {
  const ExperimentConfig c = ResolveExperiment(Small("lp-parity"));
  // Reference FNV-1a 64 written out independently.
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : ConfigToJson(c).dump()) {
    h = (h ^ ch) * 1099511628211ULL;
  }
  std::ostringstream hex;
  hex << std::hex;
  hex.width(16);
  hex.fill('0');
  hex << h;
  EXPECT_EQ(ConfigHash(c), hex.str());

  ExperimentConfig other = c;
  other.seed += 1;
  EXPECT_NE(ConfigHash(other), ConfigHash(c));
  // Key order in the source document does not matter.
  const json a = json::parse(R"({"experiment":"lp-parity","seed":3,"T":9})");
  const json b = json::parse(R"({"T":9,"seed":3,"experiment":"lp-parity"})");
  EXPECT_EQ(ConfigHash(ParseConfig(a)), ConfigHash(ParseConfig(b)));
}

TEST(CsvTest, EmptyRecordListIsHeaderOnly) {
  std::ostringstream out;
  EmitCsv({}, out);
  EXPECT_EQ(out.str(), std::string(kCsvHeader) + "\n");
  std::istringstream in(out.str());
  EXPECT_TRUE(ParseCsv(in).empty());
}

TEST(CsvTest, QuotingAndRoundTrip) {
  RunRecord plain;
  plain.config_hash = "00ff";
  plain.seed = 18446744073709551615ULL;
  plain.experiment = "query-parity";
  plain.m = 200;
  plain.domain = 512;
  plain.n = 500;
  plain.flavor = "flat";
  plain.iteration = 1;
  plain.selected = 17;
  plain.error = 0.1 + 0.2;
  plain.samples_drawn = 29;
  plain.wall_nanos = 12345;
  plain.build_nanos = 678;

  RunRecord odd = plain;
  odd.flavor = "a,b \"quoted\"\nnext";
  odd.error = -1.0 / 3.0;
  odd.samples_drawn = 1e-300;
  odd.selected = -1;

  std::ostringstream out;
  EmitCsv({plain, odd}, out);
  const std::string text = out.str();
  EXPECT_NE(text.find("\"a,b \"\"quoted\"\"\nnext\""), std::string::npos);
  EXPECT_NE(text.find(",flat,"), std::string::npos);

  std::istringstream in(text);
  const std::vector<RunRecord> back = ParseCsv(in);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], plain);
  EXPECT_EQ(back[1], odd);
}

TEST(CsvTest, AcceptsCrLfLineEnds) {
  const std::string text = std::string(kCsvHeader) +
                           "\r\nab,1,x,2,3,4,5,flat,6,7,0.5,8,9,10\r\n";
  std::istringstream in(text);
  const auto records = ParseCsv(in);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].build_nanos, 10);
  EXPECT_EQ(records[0].error, 0.5);
}

TEST(CsvTest, MalformedInputIsRejected) {
  const std::string header = std::string(kCsvHeader) + "\n";
  for (const std::string& text :
       {std::string(""), std::string("a,b\n"),
        header + "h,1,x,2,3,4,5,flat,6,7,0.5,8,9\n",
        header + "h,1,x,2,3,4,5,\"flat,6,7,0.5,8,9,10\n",
        header + "h,1,x,two,3,4,5,flat,6,7,0.5,8,9,10\n",
        header + "h,-1,x,2,3,4,5,flat,6,7,0.5,8,9,10\n",
        header + "h,1,x,2,3,4,5,flat,6,7,half,8,9,10\n",
        header + "h,1,x,2,3,4,5,\"fl\"at,6,7,0.5,8,9,10\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(ParseCsv(in), std::runtime_error) << text;
  }
}

TEST(RunExperimentTest, QueryParityIsReproducibleAndPaired) {
  ExperimentConfig c = Small("query-parity");
  c.m = {30};
  c.domain = 48;
  c.n = {200};
  c.iterations = 25;
  c.repetitions = 2;
  const auto first = RunExperiment(c);
  const auto second = RunExperiment(c, nullptr, 2);
  EXPECT_EQ(WithoutTimes(first), WithoutTimes(second));

  // classic, flat and their difference for every iteration of both seeds.
  ASSERT_EQ(first.size(), 2u * 3u * 25u);
  std::map<std::pair<uint64_t, int64_t>, std::map<std::string, double>> by;
  for (const auto& r : first) {
    EXPECT_EQ(r.m, 30);
    EXPECT_EQ(r.domain, 48);
    EXPECT_EQ(r.n, 200);
    EXPECT_EQ(r.d, -1);
    by[{r.seed, r.iteration}][r.flavor] = r.error;
  }
  EXPECT_EQ(by.size(), 50u);
  for (const auto& [key, errors] : by) {
    EXPECT_DOUBLE_EQ(errors.at("classic-minus-flat"),
                     errors.at("classic") - errors.at("flat"));
  }
  // Seeds are the config seed plus the repetition number, in order.
  EXPECT_EQ(first.front().seed, 11u);
  EXPECT_EQ(first.back().seed, 12u);

  ExperimentConfig reseeded = c;
  reseeded.seed = 99;
  EXPECT_NE(WithoutTimes(RunExperiment(reseeded)), WithoutTimes(first));
}

TEST(RunExperimentTest, EveryLineHasTheSameColumnCount) {
  ExperimentConfig c = Small("query-error-indices");
  c.m = {40};
  c.domain = 32;
  c.n = {100};
  c.iterations = 10;
  std::ostringstream out;
  EmitCsv(RunExperiment(c), out);
  std::istringstream lines(out.str());
  std::string line;
  size_t count = 0;
  while (std::getline(lines, line)) {
    EXPECT_EQ(CountFields(line), 14u) << line;
    ++count;
  }
  EXPECT_EQ(count, 1u + 3u * 10u);
}

TEST(RunExperimentTest, MarginStudyRecordsExtraSampleFraction) {
  ExperimentConfig c = Small("margin-study");
  c.m = {60};
  c.domain = 32;
  c.n = {100};
  c.iterations = 20;
  const size_t k = static_cast<size_t>(std::ceil(std::sqrt(2.0 * 60)));
  for (const auto& r : RunExperiment(c)) {
    ASSERT_GE(r.samples_drawn, static_cast<double>(k));
    EXPECT_DOUBLE_EQ(r.error, (r.samples_drawn - k) / 60.0);
  }
}

TEST(RunExperimentTest, NAblationUsesSquaredIterations) {
  ExperimentConfig c = Small("n-ablation");
  c.m = {20};
  c.domain = 32;
  c.n = {3, 5};
  const auto records = RunExperiment(c);
  ASSERT_EQ(records.size(), 4u);
  EXPECT_EQ(records[0].iteration, 9);
  EXPECT_EQ(records[0].flavor, "classic");
  EXPECT_EQ(records[1].flavor, "flat");
  EXPECT_EQ(records[2].iteration, 25);
  for (const auto& r : records) {
    EXPECT_GE(r.error, 0.0);
    EXPECT_LE(r.error, 1.0);
  }
}

TEST(RunExperimentTest, LpRecordsViolatedFraction) {
  ExperimentConfig c = Small("lp-scaling");
  c.m = {300};
  c.iterations = 15;
  c.flavors = {"exhaustive", "ivf"};
  const auto records = RunExperiment(c);
  ASSERT_EQ(records.size(), 2u);
  for (const auto& r : records) {
    EXPECT_EQ(r.iteration, 15);
    EXPECT_EQ(r.d, 20);
    EXPECT_EQ(r.domain, -1);
    EXPECT_GE(r.error, 0.0);
    EXPECT_LE(r.error, 1.0);
    // Violated counts are integers out of m.
    EXPECT_NEAR(r.error * 300, std::round(r.error * 300), 1e-9);
  }
  EXPECT_EQ(records[0].samples_drawn, 300.0);
  EXPECT_EQ(records[0].build_nanos, 0);
  EXPECT_GT(records[1].build_nanos, 0);
}

}  // namespace
}  // namespace fastmwem
