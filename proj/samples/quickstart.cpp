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

// One drop of the 19-cell network: equal power versus water-filling in the
// center cell, then a few scheduled rounds across the whole cluster.

#include <cstdio>

#include "mmimo/mmimo.hpp"

int main() {
  using namespace mmimo;
  NetworkConfig cfg;
  cfg.bsAntennas = 100;
  cfg.usersPerCell = 10;
  const CellTopology topo = buildTopology(cfg);

  const double budget = dbToLinear(20.0);
  const NetworkPowers equal = uniformPowers(topo, budget / cfg.usersPerCell);
  NetworkPowers tuned = equal;
  tuned[0] = uplinkAllocApprox(topo, equal, 0, cfg.bsAntennas, budget);

  McOptions mc;
  mc.trials = 2000;
  const RateEstimate eq = uplinkRateMC(topo, equal, 0, mc);
  const RateEstimate pa = uplinkRateMC(topo, tuned, 0, mc);
  std::printf("center cell, equal power : %.3f +/- %.3f bits/s/Hz\n", eq.sum(), eq.sumHalfWidth());
  std::printf("center cell, water-filled: %.3f +/- %.3f bits/s/Hz\n", pa.sum(), pa.sumHalfWidth());
  std::printf("relative gain            : %.1f%%\n", 100.0 * relativeGain(pa.sum(), eq.sum()));

  const NetworkState state = runScheduled(topo, Strategy::approximation, budget, budget / cfg.usersPerCell, 6);
  for (const SlotRecord& r : state.history)
    std::printf("slot %d (group %d): network sum rate %.2f\n", r.slot, r.group + 1, r.sumRate);
  return 0;
}
