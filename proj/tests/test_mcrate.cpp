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

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "mmimo/closedform.hpp"
#include "mmimo/mcrate.hpp"
#include "mmimo/zf.hpp"

namespace mmimo {
namespace {

CMatrix randomChannel(int m, int n, std::uint64_t seed) { return drawFastFading(m, n, seed, 0, 0, 0, 0); }

CellTopology unitCell(int antennas, int users = 1) {
  NetworkConfig cfg;
  cfg.cellCount = 1;
  cfg.usersPerCell = users;
  cfg.bsAntennas = antennas;
  std::vector<Point2> u;
  for (int k = 0; k < users; ++k) {
    const double a = 2.0 * std::numbers::pi * k / users;
    u.push_back({cfg.exclusionRadius * std::cos(a), cfg.exclusionRadius * std::sin(a)});
  }
  return assembleTopology(cfg, {u});
}

TEST(ZfReceiver, ScalarChannel) {
  CMatrix g(1, 1);
  g(0, 0) = 2.0;
  const CMatrix a = zfReceiver(g);
  EXPECT_NEAR(std::abs(a(0, 0) - 0.5), 0.0, 1e-15);
  EXPECT_NEAR(std::abs((a.adjoint() * g)(0, 0) - 1.0), 0.0, 1e-15);
}

TEST(ZfReceiver, IdentityResidualOnRandomChannels) {
  for (std::uint64_t s = 1; s <= 50; ++s) {
    const CMatrix g = randomChannel(8, 3, s);
    const CMatrix a = zfReceiver(g);
    const CMatrix r = a.adjoint() * g - CMatrix::Identity(3, 3);
    EXPECT_LT(r.cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(ZfReceiver, DuplicatedColumnIsIllConditioned) {
  CMatrix g = randomChannel(8, 3, 3);
  g.col(2) = g.col(0);
  EXPECT_THROW(zfReceiver(g), IllConditionedChannel);
}

TEST(ZfPrecoder, ScaleFromLargeScaleGains) {
  std::vector<double> ones5(5, 1.0), ones1(1, 1.0);
  EXPECT_NEAR(precoderScale(20, ones5), std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(precoderScale(2, ones1), 1.0, 1e-15);
  EXPECT_THROW(precoderScale(5, ones5), std::invalid_argument);
}

TEST(ZfPrecoder, ForcesZeroAndMeetsPowerConstraintOnAverage) {
  const int m = 8, n = 2;
  std::vector<double> beta{1.0, 1.0};
  double trace = 0.0;
  const int draws = 10000;
  for (int t = 0; t < draws; ++t) {
    const CMatrix g = drawFastFading(m, n, 11, std::uint64_t(t), 0, 0, 0);
    const ZfPrecoder b = zfPrecoder(g, beta);
    if (t < 20) {
      const CMatrix r = g.transpose() * b.matrix - b.alpha * CMatrix::Identity(n, n);
      EXPECT_LT(r.cwiseAbs().maxCoeff(), 1e-9);
    }
    trace += (b.matrix * b.matrix.adjoint()).trace().real();
  }
  EXPECT_NEAR(trace / draws, 1.0, 0.02);
}

TEST(ChiSquare, InverseGramDiagonalHasMeanMMinusNPlusOne) {
  const int m = 12, n = 4;
  double sum = 0.0;
  const int draws = 10000;
  for (int t = 0; t < draws; ++t) {
    const CMatrix h = drawFastFading(m, n, 21, std::uint64_t(t), 0, 0, 0);
    const CMatrix w = invertGram(h.adjoint() * h);
    sum += 1.0 / w(0, 0).real();
  }
  EXPECT_NEAR(sum / draws / (m - n + 1), 1.0, 0.02);
}

TEST(UplinkRateMC, SingleAntennaPairMatchesExactIntegral) {
  // M=2, N=1, unit gain and power: SNR ~ Gamma(2, 1), E log2(1+z) = 1/ln 2.
  const CellTopology t = unitCell(2);
  McOptions opt;
  opt.trials = 20000;
  opt.seed = 3;
  const RateEstimate e = uplinkRateMC(t, uniformPowers(t, 1.0), 0, opt);
  EXPECT_NEAR(e.perUserRate[0], 1.0 / std::numbers::ln2, 2.576 * e.stdError[0]);
  EXPECT_EQ(e.trials, 20000);
  EXPECT_EQ(e.kind, EstimateKind::monteCarlo);
}

TEST(UplinkRateMC, ZeroPowerGivesZeroRate) {
  NetworkConfig cfg;
  cfg.cellCount = 7;
  cfg.bsAntennas = 20;
  const CellTopology t = buildTopology(cfg);
  McOptions opt;
  opt.trials = 50;
  const RateEstimate e = uplinkRateMC(t, uniformPowers(t, 0.0), 0, opt);
  for (double r : e.perUserRate) EXPECT_EQ(r, 0.0);
  const RateEstimate d = downlinkRateMC(t, uniformPowers(t, 0.0, Direction::downlink), 0, opt);
  for (double r : d.perUserRate) EXPECT_EQ(r, 0.0);
}

TEST(UplinkRateMC, ResultDoesNotDependOnJobCount) {
  NetworkConfig cfg;
  cfg.cellCount = 7;
  cfg.bsAntennas = 16;
  cfg.usersPerCell = 4;
  const CellTopology t = buildTopology(cfg);
  McOptions opt;
  opt.trials = 300;
  const RateEstimate one = uplinkRateMC(t, uniformPowers(t, 10.0), 0, opt);
  opt.jobs = 4;
  const RateEstimate four = uplinkRateMC(t, uniformPowers(t, 10.0), 0, opt);
  EXPECT_EQ(one.perUserRate, four.perUserRate);
  EXPECT_EQ(one.ciHalfWidth, four.ciHalfWidth);
}

TEST(UplinkRateMC, OwnPowerMonotoneUnderCommonRandomNumbers) {
  NetworkConfig cfg;
  cfg.cellCount = 7;
  cfg.bsAntennas = 16;
  cfg.usersPerCell = 4;
  const CellTopology t = buildTopology(cfg);
  McOptions opt;
  opt.trials = 200;
  NetworkPowers p = uniformPowers(t, 10.0);
  double prev = -1.0;
  for (double own : {0.0, 1.0, 5.0, 20.0, 100.0}) {
    p[0].powers[2] = own;
    const double r = uplinkRateMC(t, p, 0, opt).perUserRate[2];
    EXPECT_GE(r, prev);
    prev = r;
  }
}

TEST(UplinkRateMC, RejectsMissingAllocations) {
  NetworkConfig cfg;
  cfg.cellCount = 7;
  cfg.bsAntennas = 16;
  cfg.usersPerCell = 4;
  const CellTopology t = buildTopology(cfg);
  NetworkPowers p = uniformPowers(t, 1.0);
  p[3].powers.pop_back();
  McOptions opt;
  opt.trials = 10;
  EXPECT_THROW(uplinkRateMC(t, p, 0, opt), std::invalid_argument);
  p = uniformPowers(t, 1.0);
  p[0].powers[1] = -1.0;
  EXPECT_THROW(uplinkRateMC(t, p, 0, opt), std::invalid_argument);
  opt.trials = 0;
  EXPECT_THROW(uplinkRateMC(t, uniformPowers(t, 1.0), 0, opt), std::invalid_argument);
}

TEST(DownlinkRateMC, InterferenceFreeIsDeterministic) {
  const CellTopology t = unitCell(2);
  McOptions opt;
  opt.trials = 100;
  const RateEstimate e = downlinkRateMC(t, uniformPowers(t, 1.0, Direction::downlink), 0, opt);
  EXPECT_NEAR(e.perUserRate[0], 1.0, 1e-12);
  EXPECT_NEAR(e.ciHalfWidth[0], 0.0, 1e-12);
}

TEST(DownlinkRateMC, NeverBelowClosedFormLowerBound) {
  NetworkConfig cfg;
  cfg.bsAntennas = 128;
  cfg.usersPerCell = 10;
  const CellTopology t = buildTopology(cfg);
  NetworkPowers p = uniformPowers(t, 100.0, Direction::downlink);
  p[0] = PowerAllocation{std::vector<double>(10, 1000.0), Direction::downlink};
  McOptions opt;
  opt.trials = 300;
  const RateEstimate e = downlinkRateMC(t, p, 0, opt);
  const auto lb = downlinkLowerBound(downlinkProfile(t, p, 0), 128, p[0].powers);
  for (int n = 0; n < 10; ++n) EXPECT_GE(e.perUserRate[n] + e.ciHalfWidth[n], lb[n]) << "user " << n;
}

TEST(RateEstimate, CsvHasHeaderAndOneRowPerUser) {
  const RateEstimate e = closedFormEstimate({1.0, 2.5});
  std::ostringstream os;
  writeCsv(os, e);
  EXPECT_EQ(os.str(), "user,rate,ciHalfWidth,trials\n0,1,0,0\n1,2.5,0,0\n");
}

}  // namespace
}  // namespace mmimo
