// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "mmimo/experiment.hpp"

namespace fs = std::filesystem;

namespace mmimo {
namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mmimo_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Json smallFigure(const std::string& kind, const fs::path& out) {
  return Json{{"kind", kind},
              {"network", {{"cellCount", 7}, {"usersPerCell", 4}, {"bsAntennas", 20}, {"seed", 11}}},
              {"sweep", {{"variable", "bsAntennas"}, {"values", {20, 40}}}},
              {"trials", 40},
              {"drops", 2},
              {"output", out.string()}};
}

std::set<std::string> seriesOf(const Json& panel) {
  std::set<std::string> out;
  for (const auto& s : panel["series"]) out.insert(s["label"].get<std::string>());
  return out;
}

TEST(SpecParsing, RejectsUnknownKeysAtEveryLevel) {
  Json j = smallFigure("fig2", "x");
  j["colour"] = "red";
  EXPECT_THROW(experimentSpecFromJson(j), std::invalid_argument);
  j = smallFigure("fig2", "x");
  j["network"]["antennas"] = 4;
  EXPECT_THROW(experimentSpecFromJson(j), std::invalid_argument);
  j = smallFigure("fig2", "x");
  j["params"] = Json{{"powerDB", {20}}};
  EXPECT_THROW(experimentSpecFromJson(j), std::invalid_argument);
  j = smallFigure("fig2", "x");
  j["sweep"]["step"] = 2;
  EXPECT_THROW(experimentSpecFromJson(j), std::invalid_argument);
}

TEST(SpecParsing, RejectsBadValues) {
  Json j = smallFigure("fig2", "x");
  j["sweep"]["values"] = {40, 20};
  EXPECT_THROW(experimentSpecFromJson(j), std::invalid_argument);
  j["sweep"]["values"] = {20, 20};
  EXPECT_THROW(experimentSpecFromJson(j), std::invalid_argument);
  j = smallFigure("fig9", "x");
  EXPECT_THROW(experimentSpecFromJson(j), std::invalid_argument);
  j = smallFigure("fig2", "x");
  j["trials"] = 0;
  EXPECT_THROW(experimentSpecFromJson(j), std::invalid_argument);
  j = smallFigure("fig3", "x");
  EXPECT_THROW(resolve(experimentSpecFromJson(j)), std::invalid_argument);  // fig3 sweeps power
}

TEST(SpecParsing, ResolvedSpecRoundTrips) {
  const ExperimentSpec a = resolve(experimentSpecFromJson(smallFigure("fig5", "x")));
  const ExperimentSpec b = experimentSpecFromJson(toJson(a));
  EXPECT_EQ(toJson(a), toJson(b));
  EXPECT_EQ(resolve(b).params.strategies->size(), 3u);
}

TEST(RunExperiment, SameSeedGivesIdenticalFiles) {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  const auto ra = runExperiment(experimentSpecFromJson(smallFigure("fig2", a)));
  const auto rb = runExperiment(experimentSpecFromJson(smallFigure("fig2", b)), "", 3);
  ASSERT_EQ(ra.files, rb.files);
  for (const auto& f : ra.files) EXPECT_EQ(readFile(a / f), readFile(b / f)) << f;
}

TEST(RunExperiment, ManifestReproducesTheRun) {
  const fs::path a = scratch("manifest_a"), b = scratch("manifest_b");
  const auto first = runExperiment(experimentSpecFromJson(smallFigure("fig2", a)));
  const Json m = Json::parse(readFile(a / "manifest.json"));
  for (const char* key : {"tool", "version", "spec", "seed", "inputHash", "outputs"}) EXPECT_TRUE(m.contains(key));
  ExperimentSpec again = loadExperimentSpec(m);
  again.output = b.string();
  runExperiment(again);
  for (const auto& f : first.files) EXPECT_EQ(readFile(a / f), readFile(b / f));
  for (const auto& o : m["outputs"])
    EXPECT_EQ(o["hash"].get<std::string>(), gitBlobHash(readFile(a / o["file"].get<std::string>())));
}

TEST(RunExperiment, CurveFilesHaveHeaderAndOneRowPerSweepPoint) {
  const fs::path d = scratch("rows");
  const auto r = runExperiment(experimentSpecFromJson(smallFigure("fig2", d)));
  ASSERT_FALSE(r.files.empty());
  for (const auto& f : r.files) {
    const std::string s = readFile(d / f);
    EXPECT_EQ(s.rfind("x,mean,ciHalfWidth\n", 0), 0u);
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 3);
  }
}

TEST(PlotData, FigureTwoHasTwoPanels) {
  const fs::path d = scratch("plot_fig2");
  runExperiment(experimentSpecFromJson(smallFigure("fig2", d)));
  emitPlotData(d);
  const Json p = Json::parse(readFile(d / "plot.json"));
  ASSERT_EQ(p["panels"].size(), 2u);
  for (const auto& panel : p["panels"])
    EXPECT_EQ(seriesOf(panel), (std::set<std::string>{"monteCarlo", "lowerBound", "approximation", "upperBound"}));
  EXPECT_TRUE(fs::exists(d / "plot.gp"));
}

TEST(PlotData, GainFigureHasOneSeriesPerStrategy) {
  const fs::path d = scratch("plot_fig5");
  Json j = smallFigure("fig5", d);
  j["params"] = Json{{"strategies", {"lowerBound", "approximation"}}, {"estimator", "closedForm"}};
  runExperiment(experimentSpecFromJson(j));
  emitPlotData(d);
  const Json p = Json::parse(readFile(d / "plot.json"));
  ASSERT_EQ(p["panels"].size(), 2u);
  for (const auto& panel : p["panels"])
    EXPECT_EQ(seriesOf(panel), (std::set<std::string>{"lowerBound", "approximation"}));
}

TEST(PlotData, RejectsMalformedDirectories) {
  const fs::path empty = scratch("plot_empty");
  EXPECT_THROW(emitPlotData(empty), std::runtime_error);
  const fs::path noRows = scratch("plot_norows");
  writeFile(noRows / "a__b.csv", "x,mean,ciHalfWidth\n");
  EXPECT_THROW(emitPlotData(noRows), std::runtime_error);
  const fs::path badCols = scratch("plot_badcols");
  writeFile(badCols / "a__b.csv", "x,mean\n1,2\n");
  EXPECT_THROW(emitPlotData(badCols), std::runtime_error);
  const fs::path blank = scratch("plot_blank");
  writeFile(blank / "a__b.csv", "");
  EXPECT_THROW(emitPlotData(blank), std::runtime_error);
}

TEST(ThresholdSearch, ZeroThresholdReturnsUpperEnd) {
  GainThresholdQuery q;
  q.threshold = 0.0;
  q.searchRange = {2, 30};
  q.drops = 3;
  NetworkConfig base;
  base.cellCount = 7;
  base.usersPerCell = 4;
  const ThresholdResult r = findMaxRatio(q, base);
  EXPECT_EQ(r.value, 30);
  EXPECT_TRUE(r.boundary);
}

TEST(ThresholdSearch, UnreachableThresholdReturnsLowerEnd) {
  GainThresholdQuery q;
  q.threshold = 50.0;
  q.searchRange = {2, 30};
  q.drops = 3;
  NetworkConfig base;
  base.cellCount = 7;
  base.usersPerCell = 4;
  const ThresholdResult r = findMaxRatio(q, base);
  EXPECT_EQ(r.value, 2);
  EXPECT_TRUE(r.boundary);
}

TEST(ThresholdSearch, BisectionResultBracketsTheThreshold) {
  GainThresholdQuery q;
  q.threshold = 0.10;
  q.powerDb = 20.0;
  q.searchRange = {2, 60};
  q.drops = 5;
  NetworkConfig base;
  base.cellCount = 7;
  base.usersPerCell = 5;
  const ThresholdResult r = findMaxRatio(q, base);
  ASSERT_FALSE(r.boundary);
  EXPECT_GE(measuredGain(q, base, r.value), q.threshold);
  EXPECT_LT(measuredGain(q, base, r.value + 1), q.threshold);
}

TEST(ThresholdSearch, QueryJsonValidation) {
  NetworkConfig base;
  EXPECT_THROW(gainThresholdQueryFromJson(Json{{"threshold", 0.0}}, base), std::invalid_argument);
  EXPECT_THROW(gainThresholdQueryFromJson(Json{{"threshold", 0.1}, {"tolerance", 1}}, base), std::invalid_argument);
  EXPECT_THROW(gainThresholdQueryFromJson(Json{{"threshold", 0.1}, {"searchRange", {10, 2}}}, base),
               std::invalid_argument);
  const auto q = gainThresholdQueryFromJson(Json{{"threshold", 0.2}, {"direction", "downlink"}}, base);
  EXPECT_EQ(q.region, PlacementRegion::edge);
}

TEST(GitBlobHash, MatchesGitForKnownContent) {
  // `printf 'hello\n' | git hash-object --stdin`
  EXPECT_EQ(gitBlobHash("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
  EXPECT_EQ(gitBlobHash(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

#ifdef MMIMO_CLI_PATH

int runCli(const std::string& args) {
  const std::string cmd = std::string("\"") + MMIMO_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

TEST(CommandLine, RunThenPlotdata) {
  const fs::path d = scratch("cli_run");
  writeFile(d / "spec.json", smallFigure("fig2", d / "out").dump());
  ASSERT_EQ(runCli("run " + (d / "spec.json").string() + " --trials 20 --drops 1 --jobs 2"), 0);
  EXPECT_TRUE(fs::exists(d / "out" / "manifest.json"));
  const Json m = Json::parse(readFile(d / "out" / "manifest.json"));
  EXPECT_EQ(m["spec"]["trials"], 20);
  EXPECT_EQ(m["spec"]["drops"], 1);
  EXPECT_EQ(m["inputHash"], gitBlobHash(readFile(d / "spec.json")));
  EXPECT_EQ(runCli("plotdata " + (d / "out").string()), 0);
  EXPECT_TRUE(fs::exists(d / "out" / "plot.json"));
}

TEST(CommandLine, UsageErrorsExitWithTwo) {
  const fs::path d = scratch("cli_bad");
  Json bad = smallFigure("fig2", d / "out");
  bad["extra"] = 1;
  writeFile(d / "bad.json", bad.dump());
  EXPECT_EQ(runCli("run " + (d / "bad.json").string()), 2);
  writeFile(d / "broken.json", "{");
  EXPECT_EQ(runCli("run " + (d / "broken.json").string()), 2);
  EXPECT_NE(runCli("frobnicate"), 0);
  EXPECT_NE(runCli("run " + (d / "missing.json").string()), 0);
}

TEST(CommandLine, TableQueryWritesCsv) {
  const fs::path d = scratch("cli_table");
  const Json q{{"threshold", 0.1},
               {"powerDb", 20},
               {"searchRange", {2, 40}},
               {"drops", 3},
               {"network", {{"cellCount", 7}, {"usersPerCell", 4}}},
               {"output", (d / "out").string()}};
  writeFile(d / "q.json", q.dump());
  ASSERT_EQ(runCli("table " + (d / "q.json").string()), 0);
  const std::string csv = readFile(d / "out" / "query.csv");
  EXPECT_EQ(csv.rfind("direction,mode,powerDb,threshold,result,boundary,gain\n", 0), 0u);
}

#endif

}  // namespace
}  // namespace mmimo
