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

// Batch runner: figures and tables from JSON specs, plot descriptions from CSVs.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mmimo/experiment.hpp"

namespace {

struct CommonFlags {
  std::optional<std::uint64_t> seed;
  std::optional<long> trials;
  std::optional<int> drops;
  std::optional<std::string> out;
  int jobs = 1;
};

void addCommonFlags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--seed", f.seed, "Root seed (overrides network.seed)");
  cmd->add_option("--trials", f.trials, "Monte Carlo trials per point")->check(CLI::PositiveNumber);
  cmd->add_option("--drops", f.drops, "User drops averaged per point")->check(CLI::PositiveNumber);
  cmd->add_option("--jobs", f.jobs, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out", f.out, "Output directory");
}

int runSpec(const std::string& path, const CommonFlags& f) {
  const std::string text = mmimo::readFile(path);
  mmimo::ExperimentSpec spec = mmimo::loadExperimentSpec(mmimo::Json::parse(text));
  spec = mmimo::applyOverrides(spec, {f.seed, f.trials, f.drops, f.out, f.jobs});
  const auto outcome = mmimo::runExperiment(spec, mmimo::gitBlobHash(text), f.jobs);
  for (const auto& file : outcome.files) std::cout << (outcome.directory / file).string() << "\n";
  std::cout << (outcome.directory / "manifest.json").string() << "\n";
  return 0;
}

int runTable(const std::string& path, const CommonFlags& f) {
  const std::string text = mmimo::readFile(path);
  const mmimo::Json j = mmimo::Json::parse(text);
  mmimo::NetworkConfig base;
  mmimo::GainThresholdQuery q = mmimo::gainThresholdQueryFromJson(j, base);
  if (f.seed) base.seed = *f.seed;
  if (f.trials) q.trials = *f.trials;
  if (f.drops) q.drops = *f.drops;
  std::string out = j.contains("output") ? j.at("output").get<std::string>() : "out";
  if (f.out) out = *f.out;
  const auto outcome = mmimo::runTableQuery(q, base, out, mmimo::gitBlobHash(text));
  std::cout << outcome.result.value << (outcome.result.boundary ? " (boundary: threshold not crossed in range)" : "")
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multicell massive-MIMO rate and power-allocation experiments"};
  app.require_subcommand(1);

  CommonFlags runFlags, tableFlags;
  std::string specPath, queryPath, plotDir;

  auto* run = app.add_subcommand("run", "Run an experiment spec (or re-run a manifest)");
  run->add_option("spec", specPath, "Experiment spec or manifest JSON")->required()->check(CLI::ExistingFile);
  addCommonFlags(run, runFlags);

  auto* table = app.add_subcommand("table", "Threshold search for one gain query");
  table->add_option("query", queryPath, "Gain-threshold query JSON")->required()->check(CLI::ExistingFile);
  addCommonFlags(table, tableFlags);

  auto* plot = app.add_subcommand("plotdata", "Write plot descriptions for the curve CSVs in a directory");
  plot->add_option("dir", plotDir, "Directory holding curve CSVs")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return runSpec(specPath, runFlags);
    if (*table) return runTable(queryPath, tableFlags);
    if (*plot) {
      std::cout << mmimo::emitPlotData(plotDir).string() << "\n";
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const mmimo::Json::exception& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
