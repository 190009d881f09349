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

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mmimo/hypoexp.hpp"
#include "mmimo/mcrate.hpp"
#include "mmimo/topology.hpp"

namespace mmimo {

/// Large-scale view of one target cell that the closed-form rates need.
///
/// Uplink: the target's own gains beta_{0n0} and every interfering user's
/// (p_{cl}, beta_{0cl}). Downlink: Lambda_00 = sum_k 1/beta_{0k0} and, per
/// target user, sum_{l,c} p_{cl} beta_{ln0} / (beta_{lcl} Lambda_ll).
struct InterferenceProfile {
  std::vector<double> betaSelf;
  std::vector<std::pair<double, double>> crossTerms;  // (power, gain), zero-power users omitted
  std::vector<double> downlinkInterference;
  double lambdaSelf = 0.0;

  int users() const { return static_cast<int>(betaSelf.size()); }

  /// sum_{l,c} p_{cl} beta_{0cl}
  double uplinkInterference() const {
    double s = 0.0;
    for (const auto& [p, b] : crossTerms) s += p * b;
    return s;
  }

  /// zeta_{0k} = p_{cl} beta_{0cl}
  std::vector<double> zetas() const {
    std::vector<double> z;
    z.reserve(crossTerms.size());
    for (const auto& [p, b] : crossTerms) z.push_back(p * b);
    return z;
  }
};

inline double lambdaOf(const CellTopology& topo, int cell) {
  double s = 0.0;
  for (int k = 0; k < topo.usersPerCell(); ++k) s += 1.0 / topo.beta(cell, cell, k);
  return s;
}

inline InterferenceProfile uplinkProfile(const CellTopology& topo, const NetworkPowers& powers, int target) {
  detail::checkCoverage(topo, powers, target, "uplinkProfile");
  InterferenceProfile prof;
  const int n = topo.usersPerCell();
  for (int u = 0; u < n; ++u) prof.betaSelf.push_back(topo.beta(target, target, u));
  for (int l : topo.neighbors(target))
    for (int c = 0; c < n; ++c) {
      const double p = powers[l].powers[c];
      if (p > 0.0) prof.crossTerms.emplace_back(p, topo.beta(target, l, c));
    }
  prof.lambdaSelf = lambdaOf(topo, target);
  return prof;
}

inline InterferenceProfile downlinkProfile(const CellTopology& topo, const NetworkPowers& powers, int target) {
  detail::checkCoverage(topo, powers, target, "downlinkProfile");
  InterferenceProfile prof;
  const int n = topo.usersPerCell();
  for (int u = 0; u < n; ++u) prof.betaSelf.push_back(topo.beta(target, target, u));
  prof.lambdaSelf = lambdaOf(topo, target);
  prof.downlinkInterference.assign(n, 0.0);
  for (int l : topo.neighbors(target)) {
    const double lambda = lambdaOf(topo, l);
    for (int c = 0; c < n; ++c) {
      const double p = powers[l].powers[c];
      if (!(p > 0.0)) continue;
      const double w = p / (topo.beta(l, l, c) * lambda);
      for (int u = 0; u < n; ++u) prof.downlinkInterference[u] += w * topo.beta(l, target, u);
    }
  }
  return prof;
}

namespace detail {

inline void requireAntennas(int antennas, int users, int minimumExcess, const char* who) {
  if (users < 1) throw std::invalid_argument(std::string(who) + ": no users");
  if (antennas - users < minimumExcess)
    throw std::invalid_argument(std::string(who) + ": needs M - N >= " + std::to_string(minimumExcess) + " (M=" +
                                std::to_string(antennas) + ", N=" + std::to_string(users) + ")");
}

inline std::vector<double> ratesFrom(std::span<const double> coeffs, std::span<const double> powers) {
  if (coeffs.size() != powers.size()) throw std::invalid_argument("closed form: one power per user required");
  std::vector<double> r(coeffs.size());
  for (std::size_t n = 0; n < r.size(); ++n) {
    if (!(powers[n] >= 0.0)) throw std::invalid_argument("closed form: powers must be non-negative");
    r[n] = std::log2(1.0 + powers[n] * coeffs[n]);
  }
  return r;
}

}  // namespace detail

// Per-user SNR coefficients: every closed form here reads log2(1 + p_n c_n).

/// d_n = beta_{0n0} (M - N) / (I + 1)
inline std::vector<double> lowerBoundCoefficients(const InterferenceProfile& prof, int antennas) {
  detail::requireAntennas(antennas, prof.users(), 0, "uplinkLowerBound");
  const double denom = prof.uplinkInterference() + 1.0;
  std::vector<double> d;
  for (double b : prof.betaSelf) d.push_back(b * (antennas - prof.users()) / denom);
  return d;
}

/// t_n = beta_{0n0} (M - N + 1) / (I + 1)
inline std::vector<double> approximationCoefficients(const InterferenceProfile& prof, int antennas) {
  detail::requireAntennas(antennas, prof.users(), 0, "uplinkApproximation");
  const double denom = prof.uplinkInterference() + 1.0;
  std::vector<double> t;
  for (double b : prof.betaSelf) t.push_back(b * (antennas - prof.users() + 1) / denom);
  return t;
}

struct UpperBoundCoefficients {
  std::vector<double> coeffs;  // k_n = beta_{0n0} (M - N + 1) E{1/(v+1)}
  double shiftedInverseMean = 1.0;
  bool interferenceFree = false;  // no interferer: E{1/(v+1)} = 1
  ShiftedInverseMean evaluation;
};

inline UpperBoundCoefficients upperBoundCoefficients(const InterferenceProfile& prof, int antennas) {
  detail::requireAntennas(antennas, prof.users(), 0, "uplinkUpperBound");
  UpperBoundCoefficients out;
  const std::vector<double> z = prof.zetas();
  out.interferenceFree = z.empty();
  out.evaluation = expectedInverseShiftedDetailed(z);
  out.shiftedInverseMean = out.evaluation.value;
  for (double b : prof.betaSelf) out.coeffs.push_back(b * (antennas - prof.users() + 1) * out.shiftedInverseMean);
  return out;
}

/// s_n = ((M - N) / Lambda_00) / (I_n + 1)
inline std::vector<double> downlinkCoefficients(const InterferenceProfile& prof, int antennas) {
  detail::requireAntennas(antennas, prof.users(), 0, "downlinkLowerBound");
  if (static_cast<int>(prof.downlinkInterference.size()) != prof.users() || !(prof.lambdaSelf > 0.0))
    throw std::invalid_argument("downlinkLowerBound: profile lacks downlink terms");
  std::vector<double> s;
  for (double i : prof.downlinkInterference) s.push_back((antennas - prof.users()) / prof.lambdaSelf / (i + 1.0));
  return s;
}

inline std::vector<double> uplinkLowerBound(const InterferenceProfile& prof, int antennas, std::span<const double> powers) {
  return detail::ratesFrom(lowerBoundCoefficients(prof, antennas), powers);
}

inline std::vector<double> uplinkApproximation(const InterferenceProfile& prof, int antennas,
                                               std::span<const double> powers) {
  return detail::ratesFrom(approximationCoefficients(prof, antennas), powers);
}

struct UpperBoundRates {
  std::vector<double> rates;
  bool interferenceFree = false;
};

inline UpperBoundRates uplinkUpperBound(const InterferenceProfile& prof, int antennas, std::span<const double> powers) {
  const UpperBoundCoefficients k = upperBoundCoefficients(prof, antennas);
  return {detail::ratesFrom(k.coeffs, powers), k.interferenceFree};
}

inline std::vector<double> downlinkLowerBound(const InterferenceProfile& prof, int antennas,
                                              std::span<const double> powers) {
  return detail::ratesFrom(downlinkCoefficients(prof, antennas), powers);
}

}  // namespace mmimo
