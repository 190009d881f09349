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

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <openssl/evp.h>

#include "mmimo/allocation.hpp"
#include "mmimo/closedform.hpp"
#include "mmimo/config_json.hpp"
#include "mmimo/mcrate.hpp"
#include "mmimo/network.hpp"
#include "mmimo/topology.hpp"

namespace mmimo {

inline constexpr const char* kToolName = "mmimo";
inline constexpr const char* kToolVersion = "1.0.0";

// Powers in experiment files are dB relative to the unit noise variance.
inline double dbToLinear(double db) { return std::pow(10.0, db / 10.0); }
inline double linearToDb(double x) { return 10.0 * std::log10(x); }

enum class ExperimentKind {
  fig2, fig3, fig4, fig5, fig6, fig7, fig8, fig10, fig11, fig12, table2, table3a, table3b, custom
};

inline const std::vector<std::pair<ExperimentKind, std::string>>& experimentKindNames() {
  static const std::vector<std::pair<ExperimentKind, std::string>> names{
      {ExperimentKind::fig2, "fig2"},     {ExperimentKind::fig3, "fig3"},       {ExperimentKind::fig4, "fig4"},
      {ExperimentKind::fig5, "fig5"},     {ExperimentKind::fig6, "fig6"},       {ExperimentKind::fig7, "fig7"},
      {ExperimentKind::fig8, "fig8"},     {ExperimentKind::fig10, "fig10"},     {ExperimentKind::fig11, "fig11"},
      {ExperimentKind::fig12, "fig12"},   {ExperimentKind::table2, "table2"},   {ExperimentKind::table3a, "table3a"},
      {ExperimentKind::table3b, "table3b"}, {ExperimentKind::custom, "custom"}};
  return names;
}

inline std::string toString(ExperimentKind k) {
  for (const auto& [kind, name] : experimentKindNames())
    if (kind == k) return name;
  return "?";
}

inline ExperimentKind experimentKindFromString(const std::string& s) {
  for (const auto& [kind, name] : experimentKindNames())
    if (name == s) return kind;
  throw std::invalid_argument("kind: unknown experiment kind '" + s + "'");
}

inline bool isTable(ExperimentKind k) {
  return k == ExperimentKind::table2 || k == ExperimentKind::table3a || k == ExperimentKind::table3b;
}

/// Kind-specific knobs; anything unset takes the kind's default.
struct ExperimentParams {
  std::optional<std::vector<double>> powersDb;
  std::optional<double> interfererPowerDb;  // downlink: total per interfering cell, split equally
  std::optional<std::vector<double>> ratios;
  std::optional<std::vector<double>> thresholds;
  std::optional<std::vector<int>> fixedValues;  // tables: N (table2/3a) or M (table3b) per row block
  std::optional<std::vector<Strategy>> strategies;
  std::optional<EstimateKind> estimator;
  std::optional<double> splitFraction;
  std::optional<int> slots;
  std::optional<double> budgetWatts;
  std::optional<double> initialPowerDb;
  std::optional<bool> singleCell;
  std::optional<double> fixedGain;
  std::optional<Direction> direction;
  std::optional<std::pair<int, int>> searchRange;
};

struct SweepAxis {
  std::string variable;
  std::vector<double> values;
};

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::custom;
  NetworkConfig network;
  SweepAxis sweep;  // empty values: kind default
  long trials = 10000;
  int drops = 50;
  std::string output = "out";
  ExperimentParams params;
};

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline EstimateKind estimateKindFromString(const std::string& s) {
  if (s == "closedForm") return EstimateKind::closedForm;
  if (s == "monteCarlo") return EstimateKind::monteCarlo;
  throw std::invalid_argument("estimator: expected 'closedForm' or 'monteCarlo', got '" + s + "'");
}

inline Direction directionFromString(const std::string& s) {
  if (s == "uplink") return Direction::uplink;
  if (s == "downlink") return Direction::downlink;
  throw std::invalid_argument("direction: expected 'uplink' or 'downlink', got '" + s + "'");
}

template <class T>
void readOptional(const Json& obj, const char* key, std::optional<T>& out) {
  if (!obj.contains(key)) return;
  T v{};
  readField(obj, key, v);
  out = std::move(v);
}

}  // namespace detail

inline ExperimentParams paramsFromJson(const Json& j) {
  requireKnownKeys(j,
                   {"powersDb", "interfererPowerDb", "ratios", "thresholds", "fixedValues", "strategies", "estimator",
                    "splitFraction", "slots", "budgetWatts", "initialPowerDb", "singleCell", "fixedGain",
                    "direction", "searchRange"},
                   "params");
  ExperimentParams p;
  detail::readOptional(j, "powersDb", p.powersDb);
  detail::readOptional(j, "interfererPowerDb", p.interfererPowerDb);
  detail::readOptional(j, "ratios", p.ratios);
  detail::readOptional(j, "thresholds", p.thresholds);
  detail::readOptional(j, "fixedValues", p.fixedValues);
  detail::readOptional(j, "splitFraction", p.splitFraction);
  detail::readOptional(j, "slots", p.slots);
  detail::readOptional(j, "budgetWatts", p.budgetWatts);
  detail::readOptional(j, "initialPowerDb", p.initialPowerDb);
  detail::readOptional(j, "singleCell", p.singleCell);
  detail::readOptional(j, "fixedGain", p.fixedGain);
  if (j.contains("strategies")) {
    std::vector<std::string> names;
    readField(j, "strategies", names);
    std::vector<Strategy> s;
    for (const auto& n : names) s.push_back(strategyFromString(n));
    p.strategies = s;
  }
  if (j.contains("estimator")) {
    std::string s;
    readField(j, "estimator", s);
    p.estimator = detail::estimateKindFromString(s);
  }
  if (j.contains("direction")) {
    std::string s;
    readField(j, "direction", s);
    p.direction = detail::directionFromString(s);
  }
  if (j.contains("searchRange")) {
    std::vector<int> r;
    readField(j, "searchRange", r);
    if (r.size() != 2 || r[0] > r[1]) throw std::invalid_argument("searchRange: expected [low, high] with low <= high");
    p.searchRange = std::make_pair(r[0], r[1]);
  }
  if (p.splitFraction && !(*p.splitFraction > 0.0 && *p.splitFraction < 1.0))
    throw std::invalid_argument("splitFraction: must lie in (0, 1)");
  if (p.slots && *p.slots < 1) throw std::invalid_argument("slots: must be >= 1");
  if (p.budgetWatts && !(*p.budgetWatts > 0.0)) throw std::invalid_argument("budgetWatts: must be positive");
  if (p.fixedGain && !(*p.fixedGain > 0.0)) throw std::invalid_argument("fixedGain: must be positive");
  if (p.thresholds)
    for (double t : *p.thresholds)
      if (!(t >= 0.0)) throw std::invalid_argument("thresholds: must be non-negative");
  return p;
}

inline Json toJson(const ExperimentParams& p) {
  Json j = Json::object();
  if (p.powersDb) j["powersDb"] = *p.powersDb;
  if (p.interfererPowerDb) j["interfererPowerDb"] = *p.interfererPowerDb;
  if (p.ratios) j["ratios"] = *p.ratios;
  if (p.thresholds) j["thresholds"] = *p.thresholds;
  if (p.fixedValues) j["fixedValues"] = *p.fixedValues;
  if (p.strategies) {
    Json a = Json::array();
    for (Strategy s : *p.strategies) a.push_back(toString(s));
    j["strategies"] = a;
  }
  if (p.estimator) j["estimator"] = toString(*p.estimator);
  if (p.splitFraction) j["splitFraction"] = *p.splitFraction;
  if (p.slots) j["slots"] = *p.slots;
  if (p.budgetWatts) j["budgetWatts"] = *p.budgetWatts;
  if (p.initialPowerDb) j["initialPowerDb"] = *p.initialPowerDb;
  if (p.singleCell) j["singleCell"] = *p.singleCell;
  if (p.fixedGain) j["fixedGain"] = *p.fixedGain;
  if (p.direction) j["direction"] = toString(*p.direction);
  if (p.searchRange) j["searchRange"] = {p.searchRange->first, p.searchRange->second};
  return j;
}

inline ExperimentSpec experimentSpecFromJson(const Json& j) {
  requireKnownKeys(j, {"kind", "network", "sweep", "trials", "drops", "output", "params"}, "ExperimentSpec");
  if (!j.contains("kind")) throw std::invalid_argument("kind: required");
  ExperimentSpec spec;
  std::string kind;
  readField(j, "kind", kind);
  spec.kind = experimentKindFromString(kind);
  spec.network = j.contains("network") ? networkConfigFromJson(j.at("network")) : NetworkConfig{};
  if (j.contains("sweep")) {
    const Json& s = j.at("sweep");
    requireKnownKeys(s, {"variable", "values"}, "sweep");
    readField(s, "variable", spec.sweep.variable);
    readField(s, "values", spec.sweep.values);
  }
  readField(j, "trials", spec.trials);
  readField(j, "drops", spec.drops);
  readField(j, "output", spec.output);
  if (j.contains("params")) spec.params = paramsFromJson(j.at("params"));
  if (spec.trials < 1) throw std::invalid_argument("trials: must be >= 1");
  if (spec.drops < 1) throw std::invalid_argument("drops: must be >= 1");
  for (std::size_t i = 1; i < spec.sweep.values.size(); ++i)
    if (!(spec.sweep.values[i] > spec.sweep.values[i - 1]))
      throw std::invalid_argument("sweep.values: must be strictly increasing");
  return spec;
}

inline Json toJson(const ExperimentSpec& spec) {
  return Json{{"kind", toString(spec.kind)},
              {"network", toJson(spec.network)},
              {"sweep", Json{{"variable", spec.sweep.variable}, {"values", spec.sweep.values}}},
              {"trials", spec.trials},
              {"drops", spec.drops},
              {"output", spec.output},
              {"params", toJson(spec.params)}};
}

// ---------------------------------------------------------------------------
// Defaults

namespace detail {

inline std::vector<double> antennaGrid() { return {20, 40, 60, 80, 100, 128, 160, 200, 256, 320, 400, 512}; }

inline std::string defaultSweepVariable(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::fig3: return "powerDb";
    case ExperimentKind::fig7: return "ratio";
    case ExperimentKind::fig12: return "slot";
    default: return isTable(k) ? "" : "bsAntennas";
  }
}

inline std::vector<double> defaultSweepValues(ExperimentKind k, const ExperimentParams& p) {
  switch (k) {
    case ExperimentKind::fig3: return {0, 5, 10, 15, 20, 25, 30, 35, 40};
    case ExperimentKind::fig6: return {40, 80, 120, 160, 200, 240, 280, 320};
    case ExperimentKind::fig7: return {2, 3, 4, 6, 8, 10, 12, 16, 20, 25, 30, 40};
    case ExperimentKind::fig12: {
      std::vector<double> v;
      for (int s = 1; s <= p.slots.value_or(12); ++s) v.push_back(s);
      return v;
    }
    default: return isTable(k) ? std::vector<double>{} : antennaGrid();
  }
}

inline std::vector<double> defaultPowersDb(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::fig2: return {20, 30};
    case ExperimentKind::fig3: return {};
    case ExperimentKind::fig7: return {10, 15, 20, 25};
    case ExperimentKind::fig8: return {40, 50};
    case ExperimentKind::fig10:
    case ExperimentKind::fig11: return {40};
    case ExperimentKind::table2: return {10, 15, 20, 25};
    case ExperimentKind::table3a:
    case ExperimentKind::table3b: return {35, 40, 45};
    default: return {20};
  }
}

inline EstimateKind defaultEstimator(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::fig4:
    case ExperimentKind::fig5:
    case ExperimentKind::fig6:
    case ExperimentKind::fig10:
    case ExperimentKind::fig11:
    case ExperimentKind::custom: return EstimateKind::monteCarlo;
    default: return EstimateKind::closedForm;
  }
}

inline std::vector<std::string> allowedSweepVariables(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::fig3: return {"powerDb"};
    case ExperimentKind::fig7: return {"ratio"};
    case ExperimentKind::fig12: return {"slot"};
    case ExperimentKind::custom: return {"bsAntennas", "powerDb", "usersPerCell"};
    default: return isTable(k) ? std::vector<std::string>{""} : std::vector<std::string>{"bsAntennas"};
  }
}

}  // namespace detail

/// Fills every default so that the spec alone reproduces the run.
inline ExperimentSpec resolve(ExperimentSpec spec) {
  const ExperimentKind k = spec.kind;
  ExperimentParams& p = spec.params;
  if (spec.sweep.variable.empty()) spec.sweep.variable = detail::defaultSweepVariable(k);
  const auto allowed = detail::allowedSweepVariables(k);
  if (std::find(allowed.begin(), allowed.end(), spec.sweep.variable) == allowed.end())
    throw std::invalid_argument("sweep.variable: '" + spec.sweep.variable + "' not supported by kind " + toString(k));
  if (k == ExperimentKind::fig12 && !p.slots)
    p.slots = spec.sweep.values.empty() ? 12 : static_cast<int>(spec.sweep.values.back());
  if (spec.sweep.values.empty()) spec.sweep.values = detail::defaultSweepValues(k, p);
  if (!isTable(k) && spec.sweep.values.empty()) throw std::invalid_argument("sweep.values: empty");
  if (k == ExperimentKind::fig12) {
    for (double s : spec.sweep.values)
      if (s < 1 || s != std::floor(s) || s > *p.slots)
        throw std::invalid_argument("sweep.values: slots must be integers in [1, slots]");
  }
  if (!p.powersDb && k != ExperimentKind::fig3 && k != ExperimentKind::fig12) p.powersDb = detail::defaultPowersDb(k);
  if (!p.estimator) p.estimator = detail::defaultEstimator(k);
  if (!p.splitFraction) p.splitFraction = 0.8;
  if (!p.direction)
    p.direction = (k == ExperimentKind::fig8 || k == ExperimentKind::fig10 || k == ExperimentKind::fig11 ||
                   k == ExperimentKind::table3a || k == ExperimentKind::table3b)
                      ? Direction::downlink
                      : Direction::uplink;
  if (*p.direction == Direction::downlink && !p.interfererPowerDb) p.interfererPowerDb = 30.0;
  switch (k) {
    case ExperimentKind::fig4:
    case ExperimentKind::fig5:
      if (!p.strategies) p.strategies = {{Strategy::lowerBound, Strategy::upperBound, Strategy::approximation}};
      if (!p.singleCell) p.singleCell = true;
      break;
    case ExperimentKind::fig6:
      if (!p.ratios) p.ratios = {{2, 4, 8}};
      break;
    case ExperimentKind::fig12:
      if (!p.budgetWatts) p.budgetWatts = 50.0;
      if (!p.initialPowerDb) p.initialPowerDb = 10.0;
      break;
    case ExperimentKind::table2:
      if (!p.thresholds) p.thresholds = {{0.10, 0.20}};
      if (!p.fixedValues) p.fixedValues = {{spec.network.usersPerCell}};
      if (!p.searchRange) p.searchRange = {2, 200};
      break;
    case ExperimentKind::table3a:
      if (!p.thresholds) p.thresholds = {{0.10, 0.20}};
      if (!p.fixedValues) p.fixedValues = {{5, 10, 20}};
      if (!p.searchRange) p.searchRange = {0, 4000};  // clipped to M > N per row
      break;
    case ExperimentKind::table3b:
      if (!p.thresholds) p.thresholds = {{0.10, 0.20}};
      if (!p.fixedValues) p.fixedValues = {{50, 100, 200}};
      if (!p.searchRange) p.searchRange = {1, 4000};  // clipped to N < M per row
      break;
    default: break;
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Single-cell evaluation helpers shared by figures and tables

namespace detail {

/// Topology of drop `d`, common to every sweep point that shares the config.
inline CellTopology dropTopology(NetworkConfig cfg, std::uint64_t root, int drop, const DropOptions& region = {},
                                 std::optional<double> fixedGain = std::nullopt) {
  cfg.seed = deriveSeed(root, Stream::drop, {std::uint64_t(drop)});
  CellTopology topo = buildTopology(cfg, region);
  if (fixedGain) {
    const int k = topo.totalCells();
    for (int i = 0; i < k; ++i)
      for (int l = 0; l < k; ++l)
        for (int c = 0; c < topo.usersPerCell(); ++c) topo.largeScale(i, l, c) = *fixedGain;
  }
  return topo;
}

/// Target (cell 0) at `targetPerUser`, every other cell at `otherPerUser`.
inline NetworkPowers targetAndOthers(const CellTopology& topo, double targetPerUser, double otherPerUser, Direction d) {
  NetworkPowers p = uniformPowers(topo, otherPerUser, d);
  p[0] = PowerAllocation{std::vector<double>(topo.usersPerCell(), targetPerUser), d};
  return p;
}

struct RateValue {
  double value = 0.0;
  double halfWidth = 0.0;
};

/// Sum rate of cell 0 under `powers`: Monte Carlo or its closed-form stand-in
/// (uplink approximation, downlink lower bound).
inline RateValue targetSumRate(const CellTopology& topo, const NetworkPowers& powers, EstimateKind kind,
                               const McOptions& mc) {
  const bool down = powers[0].direction == Direction::downlink;
  const int m = topo.config.bsAntennas;
  if (kind == EstimateKind::monteCarlo) {
    const RateEstimate e = down ? downlinkRateMC(topo, powers, 0, mc) : uplinkRateMC(topo, powers, 0, mc);
    return {e.sum(), e.sumHalfWidth()};
  }
  double s = 0.0;
  const auto r = down ? downlinkLowerBound(downlinkProfile(topo, powers, 0), m, powers[0].powers)
                      : uplinkApproximation(uplinkProfile(topo, powers, 0), m, powers[0].powers);
  for (double x : r) s += x;
  return {s, 0.0};
}

inline double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

/// Equal power versus a water-filling strategy on cell 0 (common random numbers).
struct GainSample {
  double allocated = 0.0;
  double equal = 0.0;
};

inline GainSample gainSample(const CellTopology& topo, Strategy strategy, double budget, double interfererPerUser,
                             EstimateKind kind, const McOptions& mc) {
  const Direction d = directionOf(strategy);
  const int n = topo.usersPerCell();
  NetworkPowers powers = targetAndOthers(topo, budget / n, interfererPerUser, d);
  const double eq = targetSumRate(topo, powers, kind, mc).value;
  powers[0] = allocate(strategy, topo, powers, 0, topo.config.bsAntennas, budget);
  const double pa = targetSumRate(topo, powers, kind, mc).value;
  return {pa, eq};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Threshold search (tables)

enum class SearchMode { maxRatio, maxAntennas, minUsers };

inline const char* toString(SearchMode m) {
  switch (m) {
    case SearchMode::maxRatio: return "maxRatio";
    case SearchMode::maxAntennas: return "maxAntennas";
    case SearchMode::minUsers: return "minUsers";
  }
  return "?";
}

struct GainThresholdQuery {
  Direction direction = Direction::uplink;
  double threshold = 0.10;
  double powerDb = 20.0;
  std::pair<int, int> searchRange{2, 200};
  SearchMode mode = SearchMode::maxRatio;
  int drops = 50;
  long trials = 1000;  // only for the Monte Carlo estimator
  EstimateKind estimator = EstimateKind::closedForm;
  double interfererPowerDb = 30.0;  // downlink only
  PlacementRegion region = PlacementRegion::anywhere;
  double splitFraction = 0.8;
};

struct ThresholdResult {
  int value = 0;
  bool boundary = false;  // threshold not crossed inside the search range
  double gainAtValue = 0.0;
  int evaluations = 0;
};

/// Relative gain of cell 0's water-filling allocation (approximation-based
/// uplink, lower-bound-based downlink) over equal power, averaged over
/// common drops. `x` is the searched variable: M/N, M or N by mode.
inline double measuredGain(const GainThresholdQuery& q, const NetworkConfig& base, int x) {
  NetworkConfig cfg = base;
  switch (q.mode) {
    case SearchMode::maxRatio: cfg.bsAntennas = x * cfg.usersPerCell; break;
    case SearchMode::maxAntennas: cfg.bsAntennas = x; break;
    case SearchMode::minUsers: cfg.usersPerCell = x; break;
  }
  validate(cfg);
  const Strategy strategy = q.direction == Direction::uplink ? Strategy::approximation : Strategy::downlink;
  const double budget = dbToLinear(q.powerDb);
  const double other =
      q.direction == Direction::uplink ? budget / cfg.usersPerCell : dbToLinear(q.interfererPowerDb) / cfg.usersPerCell;
  DropOptions region;
  region.region = q.region;
  region.splitFraction = q.splitFraction;
  double pa = 0.0, eq = 0.0;
  for (int d = 0; d < q.drops; ++d) {
    const CellTopology topo = detail::dropTopology(cfg, base.seed, d, region);
    McOptions mc;
    mc.trials = q.trials;
    mc.seed = deriveSeed(base.seed, Stream::point, {std::uint64_t(x), std::uint64_t(d)});
    const auto s = detail::gainSample(topo, strategy, budget, other, q.estimator, mc);
    pa += s.allocated;
    eq += s.equal;
  }
  return relativeGain(pa, eq);
}

/// Monotone bisection for the largest M/N (or M) whose gain still reaches the
/// threshold, or the smallest N that reaches it.
inline ThresholdResult findMaxRatio(const GainThresholdQuery& q, const NetworkConfig& base) {
  if (!(q.threshold >= 0.0)) throw std::invalid_argument("threshold: must be non-negative");
  if (q.drops < 1) throw std::invalid_argument("drops: must be >= 1");
  auto [lo, hi] = q.searchRange;
  switch (q.mode) {
    case SearchMode::maxRatio: lo = std::max(lo, 2); break;
    case SearchMode::maxAntennas: lo = std::max(lo, base.usersPerCell + 1); break;
    case SearchMode::minUsers:
      lo = std::max(lo, 1);
      hi = std::min(hi, base.bsAntennas - 1);
      break;
  }
  if (lo > hi) throw std::invalid_argument("searchRange: empty after applying M > N");

  ThresholdResult out;
  constexpr double kSlack = 1e-12;
  auto reaches = [&](int x, double& gain) {
    ++out.evaluations;
    gain = measuredGain(q, base, x);
    return gain >= q.threshold - kSlack;
  };
  double gLo = 0.0, gHi = 0.0;
  if (q.mode == SearchMode::minUsers) {
    // gain grows with N: smallest x that reaches
    if (!reaches(hi, gHi)) return {hi, true, gHi, out.evaluations};
    if (reaches(lo, gLo)) return {lo, true, gLo, out.evaluations};
    while (hi - lo > 1) {
      const int mid = lo + (hi - lo) / 2;
      double g = 0.0;
      if (reaches(mid, g)) {
        hi = mid;
        gHi = g;
      } else {
        lo = mid;
      }
    }
    return {hi, false, gHi, out.evaluations};
  }
  // gain shrinks with M: largest x that reaches
  if (!reaches(lo, gLo)) return {lo, true, gLo, out.evaluations};
  if (reaches(hi, gHi)) return {hi, true, gHi, out.evaluations};
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    double g = 0.0;
    if (reaches(mid, g)) {
      lo = mid;
      gLo = g;
    } else {
      hi = mid;
    }
  }
  return {lo, false, gLo, out.evaluations};
}

inline GainThresholdQuery gainThresholdQueryFromJson(const Json& j, NetworkConfig& base) {
  requireKnownKeys(j,
                   {"direction", "threshold", "powerDb", "searchRange", "mode", "drops", "trials", "estimator",
                    "interfererPowerDb", "region", "splitFraction", "network", "output"},
                   "GainThresholdQuery");
  GainThresholdQuery q;
  std::string s;
  if (j.contains("direction")) {
    readField(j, "direction", s);
    q.direction = detail::directionFromString(s);
  }
  q.region = q.direction == Direction::downlink ? PlacementRegion::edge : PlacementRegion::anywhere;
  readField(j, "threshold", q.threshold);
  readField(j, "powerDb", q.powerDb);
  if (j.contains("searchRange")) {
    std::vector<int> r;
    readField(j, "searchRange", r);
    if (r.size() != 2 || r[0] > r[1]) throw std::invalid_argument("searchRange: expected [low, high] with low <= high");
    q.searchRange = {r[0], r[1]};
  }
  if (j.contains("mode")) {
    readField(j, "mode", s);
    if (s == "maxRatio") q.mode = SearchMode::maxRatio;
    else if (s == "maxAntennas") q.mode = SearchMode::maxAntennas;
    else if (s == "minUsers") q.mode = SearchMode::minUsers;
    else throw std::invalid_argument("mode: expected maxRatio, maxAntennas or minUsers");
  }
  readField(j, "drops", q.drops);
  readField(j, "trials", q.trials);
  if (j.contains("estimator")) {
    readField(j, "estimator", s);
    q.estimator = detail::estimateKindFromString(s);
  }
  readField(j, "interfererPowerDb", q.interfererPowerDb);
  if (j.contains("region")) {
    readField(j, "region", s);
    if (s == "anywhere") q.region = PlacementRegion::anywhere;
    else if (s == "central") q.region = PlacementRegion::central;
    else if (s == "edge") q.region = PlacementRegion::edge;
    else throw std::invalid_argument("region: expected anywhere, central or edge");
  }
  readField(j, "splitFraction", q.splitFraction);
  if (!(q.threshold > 0.0)) throw std::invalid_argument("threshold: must be positive");
  if (q.drops < 1) throw std::invalid_argument("drops: must be >= 1");
  if (q.trials < 1) throw std::invalid_argument("trials: must be >= 1");
  base = j.contains("network") ? networkConfigFromJson(j.at("network")) : NetworkConfig{};
  return q;
}

inline Json toJson(const GainThresholdQuery& q) {
  const char* region = q.region == PlacementRegion::edge      ? "edge"
                       : q.region == PlacementRegion::central ? "central"
                                                              : "anywhere";
  return Json{{"direction", toString(q.direction)},
              {"threshold", q.threshold},
              {"powerDb", q.powerDb},
              {"searchRange", {q.searchRange.first, q.searchRange.second}},
              {"mode", toString(q.mode)},
              {"drops", q.drops},
              {"trials", q.trials},
              {"estimator", toString(q.estimator)},
              {"interfererPowerDb", q.interfererPowerDb},
              {"region", region},
              {"splitFraction", q.splitFraction}};
}

// ---------------------------------------------------------------------------
// Content hashing and file output

/// Git blob id: SHA-1 of "blob <size>\0" followed by the content.
inline std::string gitBlobHash(const std::string& content) {
  const std::string framed = "blob " + std::to_string(content.size()) + '\0' + content;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(framed.data(), framed.size(), md, &len, EVP_sha1(), nullptr) != 1)
    throw std::runtime_error("gitBlobHash: SHA-1 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

inline std::string readFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void writeFile(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

struct Curve {
  std::string panel;
  std::string series;
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> ciHalfWidth;

  std::string fileName() const { return panel + "__" + series + ".csv"; }
};

inline std::string curveCsv(const Curve& c) {
  std::string s = "x,mean,ciHalfWidth\n";
  char buf[128];
  for (std::size_t i = 0; i < c.x.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g\n", c.x[i], c.mean[i], c.ciHalfWidth[i]);
    s += buf;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Figure runners

namespace detail {

/// Per-drop samples of one series at one sweep point.
struct SeriesSamples {
  std::vector<double> values;
  std::vector<double> halfWidths;  // Monte Carlo half-width of each drop's value
  std::vector<double> allocated;   // gain series: C_PA and C_EQ per drop
  std::vector<double> equal;
};

using PointSamples = std::map<std::pair<std::string, std::string>, SeriesSamples>;

struct Recorder {
  PointSamples* point;
  void value(const std::string& panel, const std::string& series, double v, double half = 0.0) const {
    auto& s = (*point)[{panel, series}];
    s.values.push_back(v);
    s.halfWidths.push_back(half);
  }
  void gain(const std::string& panel, const std::string& series, const GainSample& g) const {
    auto& s = (*point)[{panel, series}];
    s.allocated.push_back(g.allocated);
    s.equal.push_back(g.equal);
  }
};

inline std::string powerLabel(double db) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "P%gdB", db);
  return buf;
}

inline std::string ratioLabel(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "MN%g", r);
  return buf;
}

struct Job {
  int xIndex = -1;  // -1: the job covers every sweep point (fig12)
  int drop = 0;
};

class FigureRunner {
 public:
  FigureRunner(const ExperimentSpec& spec, int jobs) : spec_(spec), p_(spec.params), jobs_(std::max(jobs, 1)) {}

  std::vector<Curve> run() {
    const auto& xs = spec_.sweep.values;
    std::vector<Job> jobs;
    if (spec_.kind == ExperimentKind::fig12) {
      for (int d = 0; d < spec_.drops; ++d) jobs.push_back({-1, d});
    } else {
      for (int i = 0; i < static_cast<int>(xs.size()); ++i)
        for (int d = 0; d < spec_.drops; ++d) jobs.push_back({i, d});
    }
    std::vector<std::vector<PointSamples>> results(jobs.size(), std::vector<PointSamples>(xs.size()));
    std::vector<std::exception_ptr> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t j; (j = next.fetch_add(1)) < jobs.size();) {
        try {
          runJob(jobs[j], results[j]);
        } catch (...) {
          errors[j] = std::current_exception();
        }
      }
    };
    const int threads = std::min<int>(jobs_, static_cast<int>(jobs.size()));
    if (threads <= 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);

    // Merge in job order so the output does not depend on scheduling.
    std::vector<PointSamples> merged(xs.size());
    for (const auto& r : results)
      for (std::size_t i = 0; i < xs.size(); ++i)
        for (const auto& [key, s] : r[i]) {
          auto& m = merged[i][key];
          m.values.insert(m.values.end(), s.values.begin(), s.values.end());
          m.halfWidths.insert(m.halfWidths.end(), s.halfWidths.begin(), s.halfWidths.end());
          m.allocated.insert(m.allocated.end(), s.allocated.begin(), s.allocated.end());
          m.equal.insert(m.equal.end(), s.equal.begin(), s.equal.end());
        }
    return summarize(merged);
  }

 private:
  static constexpr double kZ = 1.959963984540054;

  std::vector<Curve> summarize(const std::vector<PointSamples>& merged) const {
    std::map<std::pair<std::string, std::string>, Curve> curves;
    const auto& xs = spec_.sweep.values;
    for (std::size_t i = 0; i < xs.size(); ++i)
      for (const auto& [key, s] : merged[i]) {
        Curve& c = curves[key];
        c.panel = key.first;
        c.series = key.second;
        double mean = 0.0, half = 0.0;
        if (!s.allocated.empty()) {
          const double pa = detail::sum(s.allocated), eq = detail::sum(s.equal);
          mean = relativeGain(pa, eq);
          std::vector<double> per;
          for (std::size_t d = 0; d < s.allocated.size(); ++d) per.push_back(relativeGain(s.allocated[d], s.equal[d]));
          half = spread(per);
        } else {
          mean = detail::sum(s.values) / double(s.values.size());
          half = s.values.size() > 1 ? spread(s.values) : s.halfWidths.front();
        }
        c.x.push_back(xs[i]);
        c.mean.push_back(mean);
        c.ciHalfWidth.push_back(half);
      }
    std::vector<Curve> out;
    for (auto& [key, c] : curves) out.push_back(std::move(c));
    return out;
  }

  static double spread(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double mean = 0.0, m2 = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
      const double d = v[k] - mean;
      mean += d / double(k + 1);
      m2 += d * (v[k] - mean);
    }
    return kZ * std::sqrt(m2 / double(v.size() - 1) / double(v.size()));
  }

  McOptions mcFor(const Job& job) const {
    McOptions mc;
    mc.trials = spec_.trials;
    mc.seed = deriveSeed(spec_.network.seed, Stream::point, {std::uint64_t(job.xIndex + 1), std::uint64_t(job.drop)});
    return mc;
  }

  NetworkConfig configAt(double x) const {
    NetworkConfig cfg = spec_.network;
    const std::string& v = spec_.sweep.variable;
    if (v == "bsAntennas") cfg.bsAntennas = static_cast<int>(std::lround(x));
    if (v == "usersPerCell") cfg.usersPerCell = static_cast<int>(std::lround(x));
    if (v == "ratio") cfg.bsAntennas = static_cast<int>(std::lround(x * cfg.usersPerCell));
    validate(cfg);
    return cfg;
  }

  CellTopology topologyAt(const NetworkConfig& cfg, int drop, PlacementRegion region = PlacementRegion::anywhere) const {
    DropOptions opt;
    opt.region = region;
    opt.splitFraction = *p_.splitFraction;
    return dropTopology(cfg, spec_.network.seed, drop, opt, p_.fixedGain);
  }

  void runJob(const Job& job, std::vector<PointSamples>& out) const {
    if (spec_.kind == ExperimentKind::fig12) return runSchedule(job, out);
    const double x = spec_.sweep.values[job.xIndex];
    const Recorder rec{&out[job.xIndex]};
    const McOptions mc = mcFor(job);
    switch (spec_.kind) {
      case ExperimentKind::fig2:
        for (double db : *p_.powersDb) equalPowerRates(topologyAt(configAt(x), job.drop), db, powerLabel(db), mc, rec);
        break;
      case ExperimentKind::fig3: {
        char panel[32];
        std::snprintf(panel, sizeof panel, "M%d", spec_.network.bsAntennas);
        equalPowerRates(topologyAt(configAt(x), job.drop), x, panel, mc, rec);
        break;
      }
      case ExperimentKind::fig4:
      case ExperimentKind::fig5: uplinkStrategies(x, job, mc, rec); break;
      case ExperimentKind::fig6: fixedRatio(x, job, mc, rec); break;
      case ExperimentKind::fig7: {
        const CellTopology topo = topologyAt(configAt(x), job.drop);
        for (double db : *p_.powersDb) {
          const double budget = dbToLinear(db);
          rec.gain("gain", powerLabel(db),
                   gainSample(topo, Strategy::approximation, budget, budget / topo.usersPerCell(), *p_.estimator, mc));
        }
        break;
      }
      case ExperimentKind::fig8:
        for (double db : *p_.powersDb) downlinkRates(topologyAt(configAt(x), job.drop), db, powerLabel(db), mc, rec);
        break;
      case ExperimentKind::fig10:
      case ExperimentKind::fig11: downlinkRegions(x, job, mc, rec); break;
      case ExperimentKind::custom: custom(x, job, mc, rec); break;
      default: throw std::invalid_argument("run: kind " + toString(spec_.kind) + " is not a figure");
    }
  }

  /// Monte Carlo rate and the three uplink closed forms at equal power.
  void equalPowerRates(const CellTopology& topo, double db, const std::string& panel, const McOptions& mc,
                       const Recorder& rec) const {
    const int n = topo.usersPerCell();
    const int m = topo.config.bsAntennas;
    const double perUser = dbToLinear(db) / n;
    const NetworkPowers powers = uniformPowers(topo, perUser);
    const RateEstimate e = uplinkRateMC(topo, powers, 0, mc);
    rec.value(panel, "monteCarlo", e.sum(), e.sumHalfWidth());
    const InterferenceProfile prof = uplinkProfile(topo, powers, 0);
    rec.value(panel, "lowerBound", sum(uplinkLowerBound(prof, m, powers[0].powers)));
    rec.value(panel, "approximation", sum(uplinkApproximation(prof, m, powers[0].powers)));
    rec.value(panel, "upperBound", sum(uplinkUpperBound(prof, m, powers[0].powers).rates));
  }

  void downlinkRates(const CellTopology& topo, double db, const std::string& panel, const McOptions& mc,
                     const Recorder& rec) const {
    const int n = topo.usersPerCell();
    const NetworkPowers powers =
        targetAndOthers(topo, dbToLinear(db) / n, dbToLinear(*p_.interfererPowerDb) / n, Direction::downlink);
    const RateEstimate e = downlinkRateMC(topo, powers, 0, mc);
    rec.value(panel, "monteCarlo", e.sum(), e.sumHalfWidth());
    rec.value(panel, "lowerBound",
              sum(downlinkLowerBound(downlinkProfile(topo, powers, 0), topo.config.bsAntennas, powers[0].powers)));
  }

  void uplinkStrategies(double x, const Job& job, const McOptions& mc, const Recorder& rec) const {
    const bool gains = spec_.kind == ExperimentKind::fig5;
    const double budget = dbToLinear(p_.powersDb->front());
    std::vector<std::pair<std::string, int>> scenarios{{"multicell", spec_.network.cellCount}};
    if (*p_.singleCell) scenarios.emplace_back("singlecell", 1);
    for (const auto& [panel, cells] : scenarios) {
      NetworkConfig cfg = configAt(x);
      cfg.cellCount = cells;
      if (cells == 1) cfg.outerRing = false;
      const CellTopology topo = topologyAt(cfg, job.drop);
      const double other = budget / topo.usersPerCell();
      for (Strategy s : *p_.strategies) {
        const GainSample g = gainSample(topo, s, budget, other, *p_.estimator, mc);
        if (gains) {
          rec.gain(panel, toString(s), g);
        } else {
          rec.value(panel, toString(s), g.allocated);
          if (s == p_.strategies->front()) rec.value(panel, "equal", g.equal);
        }
      }
    }
  }

  void fixedRatio(double m, const Job& job, const McOptions& mc, const Recorder& rec) const {
    const double budget = dbToLinear(p_.powersDb->front());
    for (double r : *p_.ratios) {
      NetworkConfig cfg = spec_.network;
      cfg.bsAntennas = static_cast<int>(std::lround(m));
      cfg.usersPerCell = static_cast<int>(std::lround(m / r));
      if (cfg.usersPerCell < 1 || cfg.bsAntennas <= cfg.usersPerCell) continue;
      const CellTopology topo = topologyAt(cfg, job.drop);
      const GainSample g =
          gainSample(topo, Strategy::approximation, budget, budget / cfg.usersPerCell, *p_.estimator, mc);
      rec.value("sumRate", ratioLabel(r) + "_approximation", g.allocated);
      rec.value("sumRate", ratioLabel(r) + "_equal", g.equal);
    }
  }

  void downlinkRegions(double x, const Job& job, const McOptions& mc, const Recorder& rec) const {
    const double budget = dbToLinear(p_.powersDb->front());
    const NetworkConfig cfg = configAt(x);
    const double other = dbToLinear(*p_.interfererPowerDb) / cfg.usersPerCell;
    for (const auto& [name, region] : {std::pair{"central", PlacementRegion::central},
                                       std::pair{"edge", PlacementRegion::edge}}) {
      const CellTopology topo = topologyAt(cfg, job.drop, region);
      const GainSample g = gainSample(topo, Strategy::downlink, budget, other, *p_.estimator, mc);
      if (spec_.kind == ExperimentKind::fig11) {
        rec.gain("gain", name, g);
      } else {
        rec.value(name, "downlink", g.allocated);
        rec.value(name, "equal", g.equal);
      }
    }
  }

  void custom(double x, const Job& job, const McOptions& mc, const Recorder& rec) const {
    const bool powerSweep = spec_.sweep.variable == "powerDb";
    const std::vector<double> powers = powerSweep ? std::vector<double>{x} : *p_.powersDb;
    const CellTopology topo = topologyAt(configAt(x), job.drop);
    const int n = topo.usersPerCell();
    for (double db : powers) {
      const std::string panel = powerSweep ? "custom" : powerLabel(db);
      if (*p_.direction == Direction::uplink) {
        equalPowerRates(topo, db, panel, mc, rec);
      } else {
        const double other = dbToLinear(*p_.interfererPowerDb) / n;
        const NetworkPowers pw = targetAndOthers(topo, dbToLinear(db) / n, other, Direction::downlink);
        const RateEstimate e = downlinkRateMC(topo, pw, 0, mc);
        rec.value(panel, "monteCarlo", e.sum(), e.sumHalfWidth());
        rec.value(panel, "lowerBound",
                  sum(downlinkLowerBound(downlinkProfile(topo, pw, 0), topo.config.bsAntennas, pw[0].powers)));
      }
      if (!p_.strategies) continue;
      for (Strategy s : *p_.strategies) {
        if (s == Strategy::equal || directionOf(s) != *p_.direction) continue;
        const double budget = dbToLinear(db);
        const double other = *p_.direction == Direction::uplink ? budget / n : dbToLinear(*p_.interfererPowerDb) / n;
        rec.value(panel, std::string("alloc_") + toString(s),
                  gainSample(topo, s, budget, other, *p_.estimator, mc).allocated);
      }
    }
  }

  void runSchedule(const Job& job, std::vector<PointSamples>& out) const {
    const CellTopology topo = topologyAt(spec_.network, job.drop);
    const double budget = *p_.budgetWatts;
    const double initial = dbToLinear(*p_.initialPowerDb);
    const int slots = *p_.slots;
    const NetworkState st = runScheduled(topo, Strategy::approximation, budget, initial, slots);
    const JointResult joint = runJoint(topo, budget, initial);
    NetworkPowers equal = uniformPowers(topo, initial);
    for (int l = 0; l < topo.clusterCells(); ++l) equal[l] = equalAlloc(topo.usersPerCell(), budget);
    const double eq = networkSumRate(topo, equal);
    const bool mcReport = *p_.estimator == EstimateKind::monteCarlo;
    SumRateEstimator mcEst{EstimateKind::monteCarlo, mcFor(job)};
    const double jointMc = mcReport ? networkSumRate(topo, joint.powers, mcEst) : 0.0;
    const double eqMc = mcReport ? networkSumRate(topo, equal, mcEst) : 0.0;
    for (std::size_t i = 0; i < spec_.sweep.values.size(); ++i) {
      const int slot = static_cast<int>(spec_.sweep.values[i]);
      const Recorder rec{&out[i]};
      rec.value("network", "scheduled", st.history[slot - 1].sumRate);
      rec.value("network", "joint", joint.objective);
      rec.value("network", "equal", eq);
      if (mcReport) {
        rec.value("networkMonteCarlo", "joint", jointMc);
        rec.value("networkMonteCarlo", "equal", eqMc);
      }
    }
    if (mcReport) {
      // Monte Carlo of the scheduled powers needs the allocation at each slot.
      NetworkState replay;
      for (std::size_t i = 0; i < spec_.sweep.values.size(); ++i) {
        const int slot = static_cast<int>(spec_.sweep.values[i]);
        replay = runScheduled(topo, Strategy::approximation, budget, initial, slot);
        out[i][{"networkMonteCarlo", "scheduled"}].values.push_back(networkSumRate(topo, replay.perCellPowers, mcEst));
        out[i][{"networkMonteCarlo", "scheduled"}].halfWidths.push_back(0.0);
      }
    }
  }

  const ExperimentSpec& spec_;
  const ExperimentParams& p_;
  int jobs_;
};

inline std::vector<Json> runTable(const ExperimentSpec& spec) {
  const ExperimentParams& p = spec.params;
  std::vector<Json> rows;
  for (int fixed : *p.fixedValues)
    for (double threshold : *p.thresholds)
      for (double db : *p.powersDb) {
        GainThresholdQuery q;
        NetworkConfig base = spec.network;
        q.threshold = threshold;
        q.powerDb = db;
        q.drops = spec.drops;
        q.trials = spec.trials;
        q.estimator = *p.estimator;
        q.searchRange = *p.searchRange;
        q.splitFraction = *p.splitFraction;
        if (spec.kind == ExperimentKind::table2) {
          q.direction = Direction::uplink;
          q.mode = SearchMode::maxRatio;
          base.usersPerCell = fixed;
          base.bsAntennas = std::max(base.bsAntennas, fixed + 1);
        } else {
          q.direction = Direction::downlink;
          q.region = PlacementRegion::edge;
          q.interfererPowerDb = *p.interfererPowerDb;
          if (spec.kind == ExperimentKind::table3a) {
            q.mode = SearchMode::maxAntennas;
            base.usersPerCell = fixed;
            base.bsAntennas = std::max(base.bsAntennas, fixed + 1);
          } else {
            q.mode = SearchMode::minUsers;
            base.bsAntennas = fixed;
            base.usersPerCell = std::min(base.usersPerCell, fixed - 1);
          }
        }
        const ThresholdResult r = findMaxRatio(q, base);
        rows.push_back(Json{{"fixed", fixed},
                            {"threshold", threshold},
                            {"powerDb", db},
                            {"result", r.value},
                            {"boundary", r.boundary},
                            {"gain", r.gainAtValue}});
      }
  return rows;
}

inline std::string tableCsv(const std::vector<Json>& rows, const char* fixedName) {
  std::string s = std::string(fixedName) + ",threshold,powerDb,result,boundary,gain\n";
  char buf[160];
  for (const Json& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.6g,%.6g,%d,%d,%.10g\n", r["fixed"].get<int>(), r["threshold"].get<double>(),
                  r["powerDb"].get<double>(), r["result"].get<int>(), r["boundary"].get<bool>() ? 1 : 0,
                  r["gain"].get<double>());
    s += buf;
  }
  return s;
}

}  // namespace detail

/// Figure curves without touching the filesystem.
inline std::vector<Curve> computeCurves(const ExperimentSpec& resolved, int jobs = 1) {
  return detail::FigureRunner(resolved, jobs).run();
}

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<long> trials;
  std::optional<int> drops;
  std::optional<std::string> output;
  int jobs = 1;
};

struct ExperimentOutcome {
  std::filesystem::path directory;
  std::vector<std::string> files;
  Json manifest;
};

inline ExperimentSpec applyOverrides(ExperimentSpec spec, const RunOverrides& o) {
  if (o.seed) spec.network.seed = *o.seed;
  if (o.trials) {
    if (*o.trials < 1) throw std::invalid_argument("--trials: must be >= 1");
    spec.trials = *o.trials;
  }
  if (o.drops) {
    if (*o.drops < 1) throw std::invalid_argument("--drops: must be >= 1");
    spec.drops = *o.drops;
  }
  if (o.output) spec.output = *o.output;
  return spec;
}

/// Parses a spec file, or the spec recorded in a manifest written by an earlier run.
inline ExperimentSpec loadExperimentSpec(const Json& j) {
  if (j.is_object() && j.contains("tool") && j.contains("spec")) return experimentSpecFromJson(j.at("spec"));
  return experimentSpecFromJson(j);
}

inline ExperimentOutcome runExperiment(const ExperimentSpec& input, const std::string& inputHash = "",
                                       int jobs = 1) {
  const ExperimentSpec spec = resolve(input);
  ExperimentOutcome out;
  out.directory = spec.output;
  std::filesystem::create_directories(out.directory);

  std::vector<std::pair<std::string, std::string>> files;  // name, content
  if (isTable(spec.kind)) {
    const auto rows = detail::runTable(spec);
    const char* fixedName = spec.kind == ExperimentKind::table3b ? "bsAntennas" : "usersPerCell";
    files.emplace_back("table.csv", detail::tableCsv(rows, fixedName));
  } else {
    for (const Curve& c : computeCurves(spec, jobs)) files.emplace_back(c.fileName(), curveCsv(c));
  }

  Json outputs = Json::array();
  for (const auto& [name, content] : files) {
    writeFile(out.directory / name, content);
    out.files.push_back(name);
    outputs.push_back(Json{{"file", name}, {"hash", gitBlobHash(content)}});
  }
  out.manifest = Json{{"tool", kToolName},
                      {"version", kToolVersion},
                      {"spec", toJson(spec)},
                      {"seed", spec.network.seed},
                      {"inputHash", inputHash.empty() ? gitBlobHash(toJson(spec).dump()) : inputHash},
                      {"units", "powers in dB relative to unit noise variance"},
                      {"centralEdgeSplitRadius", *spec.params.splitFraction * spec.network.cellRadius},
                      {"interfererPower", "downlink interferers: per-cell total, split equally over users"},
                      {"outputs", outputs}};
  writeFile(out.directory / "manifest.json", out.manifest.dump(2) + "\n");
  return out;
}

struct TableOutcome {
  ThresholdResult result;
  Json manifest;
};

inline TableOutcome runTableQuery(const GainThresholdQuery& q, const NetworkConfig& base,
                                  const std::filesystem::path& outDir, const std::string& inputHash) {
  TableOutcome out;
  out.result = findMaxRatio(q, base);
  std::filesystem::create_directories(outDir);
  char buf[200];
  std::snprintf(buf, sizeof buf, "%s,%s,%.6g,%.6g,%d,%d,%.10g\n", toString(q.direction), toString(q.mode), q.powerDb,
                q.threshold, out.result.value, out.result.boundary ? 1 : 0, out.result.gainAtValue);
  const std::string csv = std::string("direction,mode,powerDb,threshold,result,boundary,gain\n") + buf;
  writeFile(outDir / "query.csv", csv);
  out.manifest = Json{{"tool", kToolName},
                      {"version", kToolVersion},
                      {"query", toJson(q)},
                      {"network", toJson(base)},
                      {"seed", base.seed},
                      {"inputHash", inputHash},
                      {"result", Json{{"value", out.result.value},
                                      {"boundary", out.result.boundary},
                                      {"gain", out.result.gainAtValue},
                                      {"evaluations", out.result.evaluations}}},
                      {"outputs", Json::array({Json{{"file", "query.csv"}, {"hash", gitBlobHash(csv)}}})}};
  writeFile(outDir / "manifest.json", out.manifest.dump(2) + "\n");
  return out;
}

// ---------------------------------------------------------------------------
// Plot descriptions

namespace detail {

inline std::pair<std::string, std::string> axisLabels(const std::string& kind) {
  const std::string rate = "sum rate (bits/s/Hz)";
  if (kind == "fig3") return {"total transmit power (dB)", rate};
  if (kind == "fig5" || kind == "fig11") return {"M (BS antennas)", "relative gain"};
  if (kind == "fig7") return {"M/N", "relative gain"};
  if (kind == "fig12") return {"time slot", "network sum rate (bits/s/Hz)"};
  return {"M (BS antennas)", rate};
}

}  // namespace detail

/// Reads the `<panel>__<series>.csv` curves in `dir` and writes plot.json (panels,
/// axes, series) plus a gnuplot script.
inline std::filesystem::path emitPlotData(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw std::runtime_error("plotdata: not a directory: " + dir.string());
  std::string kind;
  if (fs::exists(dir / "manifest.json")) {
    const Json m = Json::parse(readFile(dir / "manifest.json"));
    if (m.contains("spec") && m["spec"].contains("kind")) kind = m["spec"]["kind"].get<std::string>();
  }
  std::vector<fs::path> csvs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".csv" && e.path().stem().string().find("__") != std::string::npos)
      csvs.push_back(e.path());
  std::sort(csvs.begin(), csvs.end());
  if (csvs.empty()) throw std::runtime_error("plotdata: no curve CSVs in " + dir.string());

  std::map<std::string, Json> panels;
  for (const auto& path : csvs) {
    std::istringstream in(readFile(path));
    std::string header;
    if (!std::getline(in, header) || header.empty())
      throw std::runtime_error("plotdata: empty CSV " + path.filename().string());
    std::vector<std::string> cols;
    std::stringstream hs(header);
    for (std::string c; std::getline(hs, c, ',');) cols.push_back(c);
    for (const char* need : {"x", "mean", "ciHalfWidth"})
      if (std::find(cols.begin(), cols.end(), need) == cols.end())
        throw std::runtime_error("plotdata: " + path.filename().string() + " lacks column '" + need + "'");
    int rows = 0;
    for (std::string line; std::getline(in, line);)
      if (!line.empty()) ++rows;
    if (rows == 0) throw std::runtime_error("plotdata: CSV has no data rows: " + path.filename().string());
    const std::string stem = path.stem().string();
    const auto cut = stem.find("__");
    const std::string panel = stem.substr(0, cut);
    Json& p = panels[panel];
    if (p.is_null()) {
      const auto [xl, yl] = detail::axisLabels(kind);
      p = Json{{"name", panel}, {"xLabel", xl}, {"yLabel", yl}, {"series", Json::array()}};
    }
    p["series"].push_back(Json{{"label", stem.substr(cut + 2)},
                               {"file", path.filename().string()},
                               {"x", "x"},
                               {"y", "mean"},
                               {"error", "ciHalfWidth"},
                               {"points", rows}});
  }
  Json doc{{"kind", kind}, {"panels", Json::array()}};
  std::string gp = "set datafile separator ','\nset key autotitle columnhead\n";
  for (auto& [name, p] : panels) {
    doc["panels"].push_back(p);
    gp += "set title '" + name + "'\nset xlabel '" + p["xLabel"].get<std::string>() + "'\nset ylabel '" +
          p["yLabel"].get<std::string>() + "'\nplot ";
    bool first = true;
    for (const auto& s : p["series"]) {
      gp += (first ? "" : ", ") + std::string("'") + s["file"].get<std::string>() +
            "' using 1:2:3 with yerrorlines title '" + s["label"].get<std::string>() + "'";
      first = false;
    }
    gp += "\npause -1\n";
  }
  writeFile(dir / "plot.json", doc.dump(2) + "\n");
  writeFile(dir / "plot.gp", gp);
  return dir / "plot.json";
}

}  // namespace mmimo
