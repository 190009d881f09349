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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "mmimo/allocation.hpp"

namespace mmimo {
namespace {

double total(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

TEST(Waterfill, EqualCoefficientsSplitEvenly) {
  const std::vector<double> c{3.0, 3.0, 3.0};
  const auto r = waterfill(c, 6.0);
  for (double p : r.powers) EXPECT_NEAR(p, 2.0, 1e-15);
  EXPECT_EQ(r.activeSet, (std::vector<int>{0, 1, 2}));
}

TEST(Waterfill, UserOnTheWaterLevelGetsNothing) {
  const std::vector<double> c{1.0, 0.5};
  const auto r = waterfill(c, 1.0);
  EXPECT_DOUBLE_EQ(r.powers[0], 1.0);
  EXPECT_DOUBLE_EQ(r.powers[1], 0.0);
  EXPECT_DOUBLE_EQ(r.waterLevel, 2.0);
  EXPECT_EQ(r.activeSet, std::vector<int>{0});
}

TEST(Waterfill, TwoActiveUsers) {
  const std::vector<double> c{2.0, 1.0};
  const auto r = waterfill(c, 3.0);
  EXPECT_NEAR(r.powers[0], 1.75, 1e-15);
  EXPECT_NEAR(r.powers[1], 1.25, 1e-15);
  EXPECT_NEAR(r.waterLevel, 2.25, 1e-15);
}

TEST(Waterfill, ZeroCoefficientNeverServed) {
  const std::vector<double> c{0.0, 4.0, 0.0};
  const auto r = waterfill(c, 2.0);
  EXPECT_EQ(r.powers, (std::vector<double>{0.0, 2.0, 0.0}));
  EXPECT_THROW(waterfill(std::vector<double>{0.0, 0.0}, 1.0), std::invalid_argument);
}

TEST(Waterfill, RejectsBadInputs) {
  const std::vector<double> c{1.0};
  EXPECT_THROW(waterfill(c, 0.0), std::invalid_argument);
  EXPECT_THROW(waterfill(c, -1.0), std::invalid_argument);
  EXPECT_THROW(waterfill(std::vector<double>{}, 1.0), std::invalid_argument);
  EXPECT_THROW(waterfill(std::vector<double>{1.0, -2.0}, 1.0), std::invalid_argument);
}

std::vector<double> randomCoeffs(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> lc(-3.0, 3.0);
  std::vector<double> c(n);
  for (double& x : c) x = std::pow(10.0, lc(rng));
  return c;
}

TEST(Waterfill, SpendsExactlyTheBudget) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 500; ++t) {
    const int n = 1 + t % 40;
    const auto c = randomCoeffs(rng, n);
    const double budget = std::pow(10.0, std::uniform_real_distribution<double>(-2.0, 4.0)(rng));
    const auto r = waterfill(c, budget);
    EXPECT_NEAR(total(r.powers), budget, 1e-12 * budget);
    for (double p : r.powers) EXPECT_GE(p, 0.0);
  }
}

TEST(Waterfill, SatisfiesKktConditions) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 300; ++t) {
    const int n = 2 + t % 20;
    const auto c = randomCoeffs(rng, n);
    const double budget = std::pow(10.0, std::uniform_real_distribution<double>(-1.0, 3.0)(rng));
    const auto r = waterfill(c, budget);
    // marginal utility c/(1+cp) equals 1/mu on the active set and is at most 1/mu elsewhere
    const double nu = 1.0 / r.waterLevel;
    for (int k = 0; k < n; ++k) {
      const double marginal = c[k] / (1.0 + c[k] * r.powers[k]);
      if (r.powers[k] > 0.0) EXPECT_NEAR(marginal, nu, 1e-9 * nu);
      else EXPECT_LE(marginal, nu * (1.0 + 1e-12));
    }
  }
}

TEST(Waterfill, NoFeasiblePerturbationImproves) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    const int n = 2 + t % 10;
    const auto c = randomCoeffs(rng, n);
    const double budget = 10.0;
    const auto r = waterfill(c, budget);
    const double best = surrogateSumRate(c, r.powers);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        if (a == b) continue;
        const double d = std::min(r.powers[a], 1e-3 * budget);
        if (d <= 0.0) continue;
        std::vector<double> q = r.powers;
        q[a] -= d;
        q[b] += d;
        EXPECT_LE(surrogateSumRate(c, q), best + 1e-12);
      }
  }
}

TEST(Waterfill, MatchesGridSearchForTwoAndThreeUsers) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    const auto c2 = randomCoeffs(rng, 2);
    double gridBest = -1.0;
    for (int i = 0; i <= 10000; ++i) {
      const std::vector<double> q{1.0 * i / 10000, 1.0 - 1.0 * i / 10000};
      gridBest = std::max(gridBest, surrogateSumRate(c2, q));
    }
    const double opt2 = surrogateSumRate(c2, waterfill(c2, 1.0).powers);
    EXPECT_GE(opt2, gridBest - 1e-12);
    EXPECT_LE(opt2 - gridBest, 1e-6);

    const auto c3 = randomCoeffs(rng, 3);
    gridBest = -1.0;
    const int g = 400;
    for (int i = 0; i <= g; ++i)
      for (int j = 0; i + j <= g; ++j) {
        const std::vector<double> q{1.0 * i / g, 1.0 * j / g, 1.0 * (g - i - j) / g};
        gridBest = std::max(gridBest, surrogateSumRate(c3, q));
      }
    const double opt3 = surrogateSumRate(c3, waterfill(c3, 1.0).powers);
    EXPECT_GE(opt3, gridBest - 1e-12);
  }
}

CellTopology smallTopology(int antennas, int users, std::uint64_t seed = 1, int cells = 7) {
  NetworkConfig cfg;
  cfg.cellCount = cells;
  cfg.usersPerCell = users;
  cfg.bsAntennas = antennas;
  cfg.seed = seed;
  return buildTopology(cfg);
}

TEST(Strategies, SymmetricUsersGetEqualShares) {
  NetworkConfig cfg;
  cfg.cellCount = 1;
  cfg.usersPerCell = 4;
  cfg.bsAntennas = 32;
  const double r = 300.0;
  std::vector<Point2> u;
  for (int k = 0; k < 4; ++k) u.push_back({r * std::cos(k * 1.5707963267948966), r * std::sin(k * 1.5707963267948966)});
  const CellTopology t = assembleTopology(cfg, {u});
  const NetworkPowers pw = uniformPowers(t, 1.0);
  for (Strategy s : {Strategy::lowerBound, Strategy::upperBound, Strategy::approximation, Strategy::downlink}) {
    const auto a = allocate(s, t, pw, 0, 32, 8.0);
    for (double p : a.powers) EXPECT_NEAR(p, 2.0, 1e-9) << toString(s);
  }
}

TEST(Strategies, ManyAntennasApproachEqualSplit) {
  const CellTopology t = smallTopology(16, 8);
  const NetworkPowers pw = uniformPowers(t, 10.0);
  double prev = 1e300;
  for (int m : {16, 1000, 100000, 10000000}) {
    const auto a = uplinkAllocApprox(t, pw, 0, m, 80.0);
    double dev = 0.0;
    for (double p : a.powers) dev = std::max(dev, std::abs(p - 10.0) / 10.0);
    EXPECT_LE(dev, prev);
    prev = dev;
  }
  EXPECT_LT(prev, 0.01);
}

TEST(Strategies, LowerBoundAndApproximationNearlyAgreeWithManyAntennas) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const CellTopology t = smallTopology(512, 8, seed);
    const NetworkPowers pw = uniformPowers(t, 10.0);
    const auto lb = uplinkAllocLowerBound(t, pw, 0, 512, 80.0);
    const auto ap = uplinkAllocApprox(t, pw, 0, 512, 80.0);
    const auto c = approximationCoefficients(uplinkProfile(t, pw, 0), 512);
    const double rLb = surrogateSumRate(c, lb.powers);
    const double rAp = surrogateSumRate(c, ap.powers);
    EXPECT_LE(std::abs(rLb - rAp) / rAp, 1e-3);
  }
}

TEST(Strategies, UpperBoundMatchesApproximationWithoutInterference) {
  const CellTopology t = smallTopology(40, 5);
  NetworkPowers pw = uniformPowers(t, 0.0);
  const auto ub = uplinkAllocUpperBound(t, pw, 0, 40, 20.0);
  const auto ap = uplinkAllocApprox(t, pw, 0, 40, 20.0);
  for (int n = 0; n < 5; ++n) EXPECT_NEAR(ub.powers[n], ap.powers[n], 1e-12);
  EXPECT_TRUE(upperBoundCoefficients(uplinkProfile(t, pw, 0), 40).interferenceFree);
}

TEST(Strategies, SingleUserTakesWholeBudget) {
  const CellTopology t = smallTopology(8, 1);
  const NetworkPowers pw = uniformPowers(t, 3.0);
  for (Strategy s : {Strategy::lowerBound, Strategy::upperBound, Strategy::approximation, Strategy::downlink})
    EXPECT_DOUBLE_EQ(allocate(s, t, pw, 0, 8, 5.0).powers[0], 5.0);
}

TEST(Strategies, AllocationsStayOnTheBudgetSimplex) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const CellTopology t = smallTopology(64, 10, seed, 19);
    const NetworkPowers pw = uniformPowers(t, 5.0);
    for (Strategy s : {Strategy::lowerBound, Strategy::upperBound, Strategy::approximation, Strategy::downlink}) {
      const auto a = allocate(s, t, pw, int(seed % 19), 64, 50.0);
      EXPECT_NEAR(a.total(), 50.0, 1e-10);
      EXPECT_EQ(a.direction, directionOf(s));
      for (double p : a.powers) EXPECT_GE(p, 0.0);
    }
  }
}

TEST(Strategies, EqualAllocation) {
  const auto a = equalAlloc(4, 10.0);
  EXPECT_EQ(a.powers, std::vector<double>(4, 2.5));
  EXPECT_THROW(equalAlloc(0, 1.0), std::invalid_argument);
  EXPECT_EQ(strategyFromString("upperBound"), Strategy::upperBound);
  EXPECT_THROW(strategyFromString("greedy"), std::invalid_argument);
}

TEST(RelativeGain, Definition) {
  EXPECT_DOUBLE_EQ(relativeGain(11.0, 10.0), 0.1);
  EXPECT_DOUBLE_EQ(relativeGain(10.0, 10.0), 0.0);
  EXPECT_THROW(relativeGain(1.0, 0.0), std::domain_error);
}

TEST(PowerCsv, HeaderAndRows) {
  NetworkPowers p{PowerAllocation{{1.0, 0.25}, Direction::uplink}};
  std::ostringstream os;
  writeCsv(os, p);
  EXPECT_EQ(os.str(), "cell,user,watts\n0,0,1\n0,1,0.25\n");
}

}  // namespace
}  // namespace mmimo
