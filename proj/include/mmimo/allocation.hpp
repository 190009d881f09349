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
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmimo/closedform.hpp"
#include "mmimo/mcrate.hpp"
#include "mmimo/topology.hpp"

namespace mmimo {

struct WaterfillResult {
  std::vector<double> powers;
  double waterLevel = 0.0;
  std::vector<int> activeSet;  // ascending user indices
};

/// Maximizes sum_n log2(1 + c_n p_n) subject to sum_n p_n = P, p >= 0.
///
/// p_n = (mu - 1/c_n)^+. Sorting 1/c_n ascending, the active set is the longest
/// prefix whose water level strictly clears its last floor; users sitting
/// exactly on the water level get nothing. Users with c_n = 0 never receive
/// power.
inline WaterfillResult waterfill(std::span<const double> coeffs, double budget) {
  if (coeffs.empty()) throw std::invalid_argument("waterfill: no users");
  if (!(budget > 0.0) || !std::isfinite(budget)) throw std::invalid_argument("waterfill: budget must be positive");
  const int n = static_cast<int>(coeffs.size());
  std::vector<double> floor(n);
  for (int i = 0; i < n; ++i) {
    if (!(coeffs[i] >= 0.0) || !std::isfinite(coeffs[i]))
      throw std::invalid_argument("waterfill: coefficients must be finite and non-negative");
    floor[i] = coeffs[i] > 0.0 ? 1.0 / coeffs[i] : std::numeric_limits<double>::infinity();
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return floor[a] < floor[b]; });
  if (!std::isfinite(floor[order[0]])) throw std::invalid_argument("waterfill: all coefficients are zero");

  int active = 1;
  double prefix = floor[order[0]];
  double mu = budget + prefix;
  for (int k = 2; k <= n; ++k) {
    const double f = floor[order[k - 1]];
    if (!std::isfinite(f)) break;
    const double candidate = (budget + prefix + f) / k;
    if (!(candidate > f)) break;
    prefix += f;
    mu = candidate;
    active = k;
  }

  WaterfillResult out;
  out.waterLevel = mu;
  out.powers.assign(n, 0.0);
  double assigned = 0.0;
  for (int k = 0; k < active; ++k) {
    const int u = order[k];
    out.powers[u] = mu - floor[u];
    assigned += out.powers[u];
    out.activeSet.push_back(u);
  }
  // Absorb the rounding residue in the largest share so the budget holds exactly.
  const int largest = order[0];
  out.powers[largest] += budget - assigned;
  std::sort(out.activeSet.begin(), out.activeSet.end());
  return out;
}

/// Objective the water-filling maximizes.
inline double surrogateSumRate(std::span<const double> coeffs, std::span<const double> powers) {
  double s = 0.0;
  for (std::size_t n = 0; n < coeffs.size(); ++n) s += std::log2(1.0 + coeffs[n] * powers[n]);
  return s;
}

enum class Strategy { lowerBound, upperBound, approximation, downlink, equal };

inline const char* toString(Strategy s) {
  switch (s) {
    case Strategy::lowerBound: return "lowerBound";
    case Strategy::upperBound: return "upperBound";
    case Strategy::approximation: return "approximation";
    case Strategy::downlink: return "downlink";
    case Strategy::equal: return "equal";
  }
  return "?";
}

inline Strategy strategyFromString(const std::string& s) {
  for (Strategy k : {Strategy::lowerBound, Strategy::upperBound, Strategy::approximation, Strategy::downlink,
                     Strategy::equal})
    if (s == toString(k)) return k;
  throw std::invalid_argument("unknown strategy '" + s + "'");
}

inline Direction directionOf(Strategy s) { return s == Strategy::downlink ? Direction::downlink : Direction::uplink; }

inline PowerAllocation equalAlloc(int users, double budget, Direction d = Direction::uplink) {
  if (users < 1) throw std::invalid_argument("equalAlloc: needs at least one user");
  if (!(budget >= 0.0)) throw std::invalid_argument("equalAlloc: budget must be non-negative");
  return {std::vector<double>(users, budget / users), d};
}

namespace detail {

inline PowerAllocation fromWaterfill(std::span<const double> coeffs, double budget, Direction d) {
  return {waterfill(coeffs, budget).powers, d};
}

}  // namespace detail

// Per-cell strategies: the target cell re-allocates its budget P with every
// other cell's powers frozen at `powers`; M overrides the topology's antenna count.

inline PowerAllocation uplinkAllocLowerBound(const CellTopology& topo, const NetworkPowers& powers, int target,
                                             int antennas, double budget) {
  return detail::fromWaterfill(lowerBoundCoefficients(uplinkProfile(topo, powers, target), antennas), budget,
                               Direction::uplink);
}

inline PowerAllocation uplinkAllocUpperBound(const CellTopology& topo, const NetworkPowers& powers, int target,
                                             int antennas, double budget) {
  return detail::fromWaterfill(upperBoundCoefficients(uplinkProfile(topo, powers, target), antennas).coeffs, budget,
                               Direction::uplink);
}

inline PowerAllocation uplinkAllocApprox(const CellTopology& topo, const NetworkPowers& powers, int target,
                                         int antennas, double budget) {
  return detail::fromWaterfill(approximationCoefficients(uplinkProfile(topo, powers, target), antennas), budget,
                               Direction::uplink);
}

inline PowerAllocation downlinkAlloc(const CellTopology& topo, const NetworkPowers& powers, int target, int antennas,
                                     double budget) {
  return detail::fromWaterfill(downlinkCoefficients(downlinkProfile(topo, powers, target), antennas), budget,
                               Direction::downlink);
}

inline PowerAllocation allocate(Strategy s, const CellTopology& topo, const NetworkPowers& powers, int target,
                                int antennas, double budget) {
  switch (s) {
    case Strategy::lowerBound: return uplinkAllocLowerBound(topo, powers, target, antennas, budget);
    case Strategy::upperBound: return uplinkAllocUpperBound(topo, powers, target, antennas, budget);
    case Strategy::approximation: return uplinkAllocApprox(topo, powers, target, antennas, budget);
    case Strategy::downlink: return downlinkAlloc(topo, powers, target, antennas, budget);
    case Strategy::equal: return equalAlloc(topo.usersPerCell(), budget, directionOf(s));
  }
  throw std::invalid_argument("allocate: unknown strategy");
}

/// The coefficients a strategy water-fills over (surrogate objective of that strategy).
inline std::vector<double> strategyCoefficients(Strategy s, const CellTopology& topo, const NetworkPowers& powers,
                                                int target, int antennas) {
  switch (s) {
    case Strategy::lowerBound: return lowerBoundCoefficients(uplinkProfile(topo, powers, target), antennas);
    case Strategy::upperBound: return upperBoundCoefficients(uplinkProfile(topo, powers, target), antennas).coeffs;
    case Strategy::approximation:
    case Strategy::equal: return approximationCoefficients(uplinkProfile(topo, powers, target), antennas);
    case Strategy::downlink: return downlinkCoefficients(downlinkProfile(topo, powers, target), antennas);
  }
  throw std::invalid_argument("strategyCoefficients: unknown strategy");
}

/// eta = (C_PA - C_EQ) / C_EQ
inline double relativeGain(double cPA, double cEQ) {
  if (!(cEQ > 0.0)) throw std::domain_error("relativeGain: equal-power sum rate must be positive");
  return (cPA - cEQ) / cEQ;
}

/// CSV rows (cell, user, watts).
inline void writeCsv(std::ostream& os, const NetworkPowers& powers, bool header = true) {
  if (header) os << "cell,user,watts\n";
  char buf[96];
  for (std::size_t l = 0; l < powers.size(); ++l)
    for (std::size_t n = 0; n < powers[l].powers.size(); ++n) {
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.12g\n", l, n, powers[l].powers[n]);
      os << buf;
    }
}

}  // namespace mmimo
