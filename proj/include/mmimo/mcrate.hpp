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
#include <cstdint>
#include <cstdio>
#include <exception>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "mmimo/rng.hpp"
#include "mmimo/topology.hpp"
#include "mmimo/zf.hpp"

namespace mmimo {

enum class Direction { uplink, downlink };

inline const char* toString(Direction d) { return d == Direction::uplink ? "uplink" : "downlink"; }

/// Per-user transmit powers of one cell, linear watts.
struct PowerAllocation {
  std::vector<double> powers;
  Direction direction = Direction::uplink;

  double total() const { return std::accumulate(powers.begin(), powers.end(), 0.0); }
};

/// One PowerAllocation per cell of a topology (outer ring included).
using NetworkPowers = std::vector<PowerAllocation>;

inline void requireValid(const PowerAllocation& a, int users, const char* who) {
  if (static_cast<int>(a.powers.size()) != users)
    throw std::invalid_argument(std::string(who) + ": allocation has " + std::to_string(a.powers.size()) +
                                " entries, expected " + std::to_string(users));
  for (double p : a.powers)
    if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument(std::string(who) + ": powers must be finite and non-negative");
}

/// Every cell transmits `perUser` watts on each of its users.
inline NetworkPowers uniformPowers(const CellTopology& topo, double perUser, Direction d = Direction::uplink) {
  return NetworkPowers(topo.totalCells(), PowerAllocation{std::vector<double>(topo.usersPerCell(), perUser), d});
}

enum class EstimateKind { monteCarlo, closedForm };

struct RateEstimate {
  std::vector<double> perUserRate;  // bits/s/Hz
  long trials = 0;
  std::vector<double> ciHalfWidth;  // normal-approximation half-width, 0 for closed form
  std::vector<double> stdError;
  EstimateKind kind = EstimateKind::monteCarlo;

  double sum() const { return std::accumulate(perUserRate.begin(), perUserRate.end(), 0.0); }
  /// Half-width of the confidence interval on the sum, treating users as correlated
  /// worst case (half-widths add).
  double sumHalfWidth() const { return std::accumulate(ciHalfWidth.begin(), ciHalfWidth.end(), 0.0); }
};

inline RateEstimate closedFormEstimate(std::vector<double> rates) {
  RateEstimate e;
  e.kind = EstimateKind::closedForm;
  e.ciHalfWidth.assign(rates.size(), 0.0);
  e.stdError.assign(rates.size(), 0.0);
  e.perUserRate = std::move(rates);
  return e;
}

/// CSV rows (user, rate, ciHalfWidth, trials).
inline void writeCsv(std::ostream& os, const RateEstimate& e, bool header = true) {
  if (header) os << "user,rate,ciHalfWidth,trials\n";
  char buf[128];
  for (std::size_t n = 0; n < e.perUserRate.size(); ++n) {
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%ld\n", n, e.perUserRate[n], e.ciHalfWidth[n], e.trials);
    os << buf;
  }
}

struct McOptions {
  long trials = 10000;
  std::uint64_t seed = 1;
  int jobs = 1;
  int maxRetries = 16;
  double ciZ = 1.959963984540054;  // 95% two-sided
};

/// Fast fading H_{bs,cell} of the listed links for one trial.
struct ChannelRealization {
  std::vector<int> bs;
  std::vector<int> cells;
  std::vector<CMatrix> fastFading;  // M x N each

  /// G = H diag(beta)^{1/2} for link k.
  CMatrix channel(std::size_t k, const CellTopology& topo) const {
    const CMatrix& h = fastFading[k];
    CMatrix g(h.rows(), h.cols());
    for (Eigen::Index c = 0; c < h.cols(); ++c)
      g.col(c) = h.col(c) * std::sqrt(topo.beta(bs[k], cells[k], static_cast<int>(c)));
    return g;
  }
};

/// Unit-variance Rayleigh fading for one link; a pure function of
/// (seed, trial, attempt, bs, cell).
inline CMatrix drawFastFading(int antennas, int users, std::uint64_t seed, std::uint64_t trial, std::uint64_t attempt,
                              int bs, int cell) {
  Engine rng = makeEngine(seed, Stream::fastFading, {trial, attempt, std::uint64_t(bs), std::uint64_t(cell)});
  ComplexGaussian cg;
  CMatrix h(antennas, users);
  for (Eigen::Index c = 0; c < h.cols(); ++c)
    for (Eigen::Index m = 0; m < h.rows(); ++m) h(m, c) = cg(rng);
  return h;
}

inline ChannelRealization drawChannels(const CellTopology& topo, std::span<const std::pair<int, int>> links,
                                       int antennas, std::uint64_t seed, std::uint64_t trial,
                                       std::uint64_t attempt = 0) {
  ChannelRealization r;
  for (const auto& [b, c] : links) {
    r.bs.push_back(b);
    r.cells.push_back(c);
    r.fastFading.push_back(drawFastFading(antennas, topo.usersPerCell(), seed, trial, attempt, b, c));
  }
  return r;
}

namespace detail {

inline bool allZero(const PowerAllocation& a) {
  return std::all_of(a.powers.begin(), a.powers.end(), [](double p) { return p == 0.0; });
}

inline void checkCoverage(const CellTopology& topo, const NetworkPowers& powers, int target, const char* who) {
  if (target < 0 || target >= topo.clusterCells())
    throw std::invalid_argument(std::string(who) + ": target cell out of range");
  if (static_cast<int>(powers.size()) != topo.totalCells())
    throw std::invalid_argument(std::string(who) + ": one allocation per cell required");
  requireValid(powers[target], topo.usersPerCell(), who);
  for (int l : topo.neighbors(target)) requireValid(powers[l], topo.usersPerCell(), who);
}

/// Uplink per-user log2(1 + SINR) for one realization; links[0] is the target's own channel.
inline void uplinkTrial(const CellTopology& topo, const NetworkPowers& powers, int target,
                        const ChannelRealization& ch, std::span<double> out) {
  const int n = topo.usersPerCell();
  const CMatrix g0 = ch.channel(0, topo);
  const CMatrix w = invertGram(g0.adjoint() * g0);
  Eigen::VectorXd interference = Eigen::VectorXd::Zero(n);
  for (std::size_t k = 1; k < ch.cells.size(); ++k) {
    const auto& p = powers[ch.cells[k]].powers;
    const CMatrix x = w * (g0.adjoint() * ch.channel(k, topo));  // [n, c] = a_n^H g_c
    for (int c = 0; c < n; ++c)
      if (p[c] > 0.0) interference += p[c] * x.col(c).cwiseAbs2();
  }
  const auto& own = powers[target].powers;
  for (int u = 0; u < n; ++u) out[u] = std::log2(1.0 + own[u] / (interference(u) + w(u, u).real()));
}

inline void downlinkTrial(const CellTopology& topo, const NetworkPowers& powers, int target, int antennas,
                          const ChannelRealization& ch, std::span<double> out) {
  const int n = topo.usersPerCell();
  std::vector<double> betaSelf(n);
  for (int c = 0; c < n; ++c) betaSelf[c] = topo.beta(target, target, c);
  const double alpha0 = precoderScale(antennas, betaSelf);
  Eigen::VectorXd interference = Eigen::VectorXd::Zero(n);
  // links come in pairs: (l, l) own channel of interferer l, then (l, target).
  for (std::size_t k = 0; k + 1 < ch.cells.size(); k += 2) {
    const int l = ch.bs[k];
    const auto& p = powers[l].powers;
    for (int c = 0; c < n; ++c) betaSelf[c] = topo.beta(l, l, c);
    const CMatrix gll = ch.channel(k, topo);
    const CMatrix gl0 = ch.channel(k + 1, topo);
    const ZfPrecoder b = zfPrecoder(gll, betaSelf);
    const CMatrix y = gl0.transpose() * b.matrix;  // [n, c] = g_{ln0}^T b_{lcl}
    for (int c = 0; c < n; ++c)
      if (p[c] > 0.0) interference += p[c] * y.col(c).cwiseAbs2();
  }
  const auto& own = powers[target].powers;
  for (int u = 0; u < n; ++u) out[u] = std::log2(1.0 + alpha0 * alpha0 * own[u] / (interference(u) + 1.0));
}

template <class TrialFn>
RateEstimate runTrials(int users, const McOptions& opt, TrialFn&& trial) {
  if (opt.trials < 1) throw std::invalid_argument("Monte Carlo: trials must be >= 1");
  std::vector<double> samples(std::size_t(opt.trials) * users);
  auto work = [&](long begin, long end) {
    for (long t = begin; t < end; ++t) {
      std::span<double> out(samples.data() + std::size_t(t) * users, users);
      for (int attempt = 0;; ++attempt) {
        try {
          trial(std::uint64_t(t), std::uint64_t(attempt), out);
          break;
        } catch (const IllConditionedChannel&) {
          if (attempt + 1 >= opt.maxRetries) throw;
        }
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(opt.jobs, static_cast<int>(opt.trials)));
  if (jobs == 1) {
    work(0, opt.trials);
  } else {
    std::vector<std::exception_ptr> errors(jobs);
    {
      std::vector<std::jthread> pool;
      for (int j = 0; j < jobs; ++j) {
        const long b = opt.trials * j / jobs;
        const long e = opt.trials * (j + 1) / jobs;
        pool.emplace_back([&, j, b, e] {
          try {
            work(b, e);
          } catch (...) {
            errors[j] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  // Reduction in trial order keeps results independent of the job count.
  RateEstimate est;
  est.kind = EstimateKind::monteCarlo;
  est.trials = opt.trials;
  est.perUserRate.assign(users, 0.0);
  est.stdError.assign(users, 0.0);
  est.ciHalfWidth.assign(users, 0.0);
  for (int u = 0; u < users; ++u) {
    double mean = 0.0;
    double m2 = 0.0;
    for (long t = 0; t < opt.trials; ++t) {
      const double x = samples[std::size_t(t) * users + u];
      const double d = x - mean;
      mean += d / double(t + 1);
      m2 += d * (x - mean);
    }
    est.perUserRate[u] = mean;
    const double var = opt.trials > 1 ? m2 / double(opt.trials - 1) : 0.0;
    est.stdError[u] = std::sqrt(var / double(opt.trials));
    est.ciHalfWidth[u] = opt.ciZ * est.stdError[u];
  }
  return est;
}

}  // namespace detail

/// Ergodic uplink rates of the target cell's users with ZF receivers.
inline RateEstimate uplinkRateMC(const CellTopology& topo, const NetworkPowers& powers, int target,
                                 const McOptions& opt) {
  detail::checkCoverage(topo, powers, target, "uplinkRateMC");
  const int m = topo.config.bsAntennas;
  const int n = topo.usersPerCell();
  std::vector<std::pair<int, int>> links{{target, target}};
  for (int l : topo.neighbors(target))
    if (!detail::allZero(powers[l])) links.emplace_back(target, l);
  return detail::runTrials(n, opt, [&](std::uint64_t t, std::uint64_t attempt, std::span<double> out) {
    const ChannelRealization ch = drawChannels(topo, links, m, opt.seed, t, attempt);
    detail::uplinkTrial(topo, powers, target, ch, out);
  });
}

/// Ergodic downlink rates of the target cell's users with ZF precoders in every cell.
inline RateEstimate downlinkRateMC(const CellTopology& topo, const NetworkPowers& powers, int target,
                                   const McOptions& opt) {
  detail::checkCoverage(topo, powers, target, "downlinkRateMC");
  const int m = topo.config.bsAntennas;
  const int n = topo.usersPerCell();
  std::vector<std::pair<int, int>> links;
  for (int l : topo.neighbors(target)) {
    if (detail::allZero(powers[l])) continue;
    links.emplace_back(l, l);
    links.emplace_back(l, target);
  }
  return detail::runTrials(n, opt, [&](std::uint64_t t, std::uint64_t attempt, std::span<double> out) {
    const ChannelRealization ch = drawChannels(topo, links, m, opt.seed, t, attempt);
    detail::downlinkTrial(topo, powers, target, m, ch, out);
  });
}

/// Copy of a topology evaluated with a different antenna count (same drop).
inline CellTopology withAntennas(CellTopology topo, int antennas) {
  topo.config.bsAntennas = antennas;
  validate(topo.config);
  return topo;
}

}  // namespace mmimo
