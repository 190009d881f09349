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
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "mmimo/allocation.hpp"
#include "mmimo/closedform.hpp"
#include "mmimo/mcrate.hpp"
#include "mmimo/topology.hpp"

namespace mmimo {

struct SumRateEstimator {
  EstimateKind kind = EstimateKind::closedForm;
  McOptions mc{};
};

inline const char* toString(EstimateKind k) { return k == EstimateKind::closedForm ? "closedForm" : "monteCarlo"; }

/// Sum over the cluster cells of every user's rate. Closed form means the
/// uplink approximation or the downlink lower bound, by the powers' direction.
inline double networkSumRate(const CellTopology& topo, const NetworkPowers& powers, const SumRateEstimator& est = {}) {
  if (static_cast<int>(powers.size()) != topo.totalCells())
    throw std::invalid_argument("networkSumRate: one allocation per cell required");
  const int m = topo.config.bsAntennas;
  double total = 0.0;
  for (int cell = 0; cell < topo.clusterCells(); ++cell) {
    const PowerAllocation& own = powers[cell];
    if (detail::allZero(own)) {
      requireValid(own, topo.usersPerCell(), "networkSumRate");
      continue;
    }
    const bool down = own.direction == Direction::downlink;
    if (est.kind == EstimateKind::closedForm) {
      const auto r = down ? downlinkLowerBound(downlinkProfile(topo, powers, cell), m, own.powers)
                          : uplinkApproximation(uplinkProfile(topo, powers, cell), m, own.powers);
      for (double x : r) total += x;
    } else {
      McOptions opt = est.mc;
      opt.seed = deriveSeed(est.mc.seed, Stream::point, {std::uint64_t(cell)});
      total += (down ? downlinkRateMC(topo, powers, cell, opt) : uplinkRateMC(topo, powers, cell, opt)).sum();
    }
  }
  return total;
}

struct SlotRecord {
  int slot = 0;   // 1-based
  int group = 0;  // 0-based index into groups
  double sumRate = 0.0;
  EstimateKind method = EstimateKind::closedForm;
};

struct NetworkState {
  int slotIndex = 0;
  NetworkPowers perCellPowers;
  std::vector<std::vector<int>> groups;
  std::vector<SlotRecord> history;
  std::vector<int> allocationCounts;  // per cluster cell
};

struct ScheduleOptions {
  int jobs = 1;
  SumRateEstimator estimator{};
};

/// Scheduled per-cell allocation: in slot i only group (i - 1) mod |groups|
/// re-allocates, each of its cells seeing every other cell's powers as they
/// stood at the start of the slot. Out-of-cluster cells stay at the initial power.
inline NetworkState runScheduled(const CellTopology& topo, Strategy strategy, double budget, double initialPower,
                                 int slots, const ScheduleOptions& opt = {}) {
  if (slots < 0) throw std::invalid_argument("runScheduled: slots must be non-negative");
  if (!(budget > 0.0)) throw std::invalid_argument("runScheduled: budget must be positive");
  if (!(initialPower >= 0.0)) throw std::invalid_argument("runScheduled: initial power must be non-negative");
  NetworkState state;
  state.groups = scheduleGroups(topo);
  state.perCellPowers = uniformPowers(topo, initialPower, directionOf(strategy));
  state.allocationCounts.assign(topo.clusterCells(), 0);
  const int m = topo.config.bsAntennas;

  for (int slot = 1; slot <= slots; ++slot) {
    const int g = (slot - 1) % static_cast<int>(state.groups.size());
    const std::vector<int>& cells = state.groups[g];
    const NetworkPowers snapshot = state.perCellPowers;
    std::vector<PowerAllocation> fresh(cells.size());
    auto work = [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) fresh[i] = allocate(strategy, topo, snapshot, cells[i], m, budget);
    };
    const std::size_t jobs = std::clamp<std::size_t>(std::size_t(std::max(opt.jobs, 1)), 1, cells.size());
    if (jobs == 1) {
      work(0, cells.size());
    } else {
      std::vector<std::exception_ptr> errors(jobs);
      {
        std::vector<std::jthread> pool;
        for (std::size_t j = 0; j < jobs; ++j)
          pool.emplace_back([&, j] {
            try {
              work(cells.size() * j / jobs, cells.size() * (j + 1) / jobs);
            } catch (...) {
              errors[j] = std::current_exception();
            }
          });
      }
      for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      state.perCellPowers[cells[i]] = std::move(fresh[i]);
      ++state.allocationCounts[cells[i]];
    }
    state.slotIndex = slot;
    state.history.push_back({slot, g, networkSumRate(topo, state.perCellPowers, opt.estimator), opt.estimator.kind});
  }
  return state;
}

/// CSV rows (slot, group, networkSumRate, method).
inline void writeCsv(std::ostream& os, const std::vector<SlotRecord>& history, bool header = true) {
  if (header) os << "slot,group,networkSumRate,method\n";
  char buf[128];
  for (const SlotRecord& r : history) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.10g,%s\n", r.slot, r.group, r.sumRate, toString(r.method));
    os << buf;
  }
}

struct JointOptions {
  int maxIters = 2000;
  double tolerance = 1e-10;  // relative objective improvement
};

struct JointResult {
  NetworkPowers powers;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;  // false: maxIters hit, best iterate returned
};

namespace detail {

/// Euclidean projection onto {p >= 0, sum p = budget}.
inline void projectOntoSimplex(std::vector<double>& v, double budget) {
  std::vector<double> u(v);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cumulative += u[k];
    const double t = (cumulative - budget) / double(k + 1);
    if (u[k] - t > 0.0) theta = t;
  }
  for (double& x : v) x = std::max(x - theta, 0.0);
}

/// Sum over cluster cells of the uplink approximation, with its gradient with
/// respect to the cluster cells' powers.
class JointObjective {
 public:
  explicit JointObjective(const CellTopology& topo) : topo_(topo) {}

  double value(const NetworkPowers& p) const {
    double f = 0.0;
    const int n = topo_.usersPerCell();
    for (int i = 0; i < topo_.clusterCells(); ++i) {
      const double scale = gainScale(interference(p, i));
      for (int u = 0; u < n; ++u) f += std::log2(1.0 + p[i].powers[u] * topo_.beta(i, i, u) * scale);
    }
    return f;
  }

  std::vector<std::vector<double>> gradient(const NetworkPowers& p) const {
    const int k = topo_.clusterCells();
    const int n = topo_.usersPerCell();
    const double invLn2 = 1.0 / std::numbers::ln2;
    std::vector<std::vector<double>> g(k, std::vector<double>(n, 0.0));
    for (int i = 0; i < k; ++i) {
      const double interf = interference(p, i);
      const double scale = gainScale(interf);
      double pressure = 0.0;  // sum_u s/(1+s) / (I + 1)
      for (int u = 0; u < n; ++u) {
        const double t = topo_.beta(i, i, u) * scale;
        const double s = p[i].powers[u] * t;
        g[i][u] += invLn2 * t / (1.0 + s);
        pressure += s / (1.0 + s);
      }
      pressure /= interf + 1.0;
      for (int l : topo_.neighbors(i)) {
        if (l >= k) continue;
        for (int c = 0; c < n; ++c) g[l][c] -= invLn2 * pressure * topo_.beta(i, l, c);
      }
    }
    return g;
  }

 private:
  double interference(const NetworkPowers& p, int i) const {
    double s = 0.0;
    for (int l : topo_.neighbors(i))
      for (int c = 0; c < topo_.usersPerCell(); ++c) s += p[l].powers[c] * topo_.beta(i, l, c);
    return s;
  }
  double gainScale(double interf) const {
    return (topo_.config.bsAntennas - topo_.usersPerCell() + 1) / (interf + 1.0);
  }
  const CellTopology& topo_;
};

}  // namespace detail

/// Joint benchmark: projected-gradient ascent on all cluster cells' uplink
/// powers at once, each cell projected onto its own budget simplex, step
/// sizes by Armijo backtracking. Starts from equal power; out-of-cluster
/// cells transmit `fixedPowerPerUser`.
inline JointResult runJoint(const CellTopology& topo, double budget, double fixedPowerPerUser,
                            const JointOptions& opt = {}) {
  if (!(budget > 0.0)) throw std::invalid_argument("runJoint: budget must be positive");
  if (opt.maxIters < 1 || !(opt.tolerance >= 0.0)) throw std::invalid_argument("runJoint: invalid options");
  const int k = topo.clusterCells();
  const int n = topo.usersPerCell();
  const detail::JointObjective objective(topo);

  NetworkPowers x = uniformPowers(topo, fixedPowerPerUser, Direction::uplink);
  for (int i = 0; i < k; ++i) x[i] = equalAlloc(n, budget);
  double fx = objective.value(x);
  double step = 0.0;
  constexpr double kArmijo = 1e-4;

  JointResult out;
  for (int it = 1; it <= opt.maxIters; ++it) {
    out.iterations = it;
    const auto g = objective.gradient(x);
    if (step == 0.0) {
      double gmax = 0.0;
      for (const auto& row : g)
        for (double v : row) gmax = std::max(gmax, std::abs(v));
      step = gmax > 0.0 ? budget / gmax : 1.0;
    }
    bool accepted = false;
    NetworkPowers y = x;
    double fy = fx;
    for (int bt = 0; bt < 60; ++bt) {
      double ascent = 0.0;  // g . (y - x)
      for (int i = 0; i < k; ++i) {
        std::vector<double> v(n);
        for (int u = 0; u < n; ++u) v[u] = x[i].powers[u] + step * g[i][u];
        detail::projectOntoSimplex(v, budget);
        for (int u = 0; u < n; ++u) ascent += g[i][u] * (v[u] - x[i].powers[u]);
        y[i].powers = std::move(v);
      }
      fy = objective.value(y);
      if (ascent > 0.0 && fy >= fx + kArmijo * ascent) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {  // no ascent direction left at working precision
      out.converged = true;
      break;
    }
    const double gain = fy - fx;
    x = std::move(y);
    fx = fy;
    step *= 2.0;
    if (gain <= opt.tolerance * std::abs(fx)) {
      out.converged = true;
      break;
    }
  }
  out.powers = std::move(x);
  out.objective = fx;
  return out;
}

}  // namespace mmimo
