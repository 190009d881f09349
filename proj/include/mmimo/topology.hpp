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
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmimo/rng.hpp"

namespace mmimo {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Axial hexagon coordinate (flat-top orientation).
struct AxialCoord {
  int q = 0;
  int r = 0;
};

inline int hexDistance(const AxialCoord& a, const AxialCoord& b) {
  const int dq = a.q - b.q;
  const int dr = a.r - b.r;
  return (std::abs(dq) + std::abs(dr) + std::abs(dq + dr)) / 2;
}

struct NetworkConfig {
  double cellRadius = 1000.0;      // center-to-vertex, meters
  double exclusionRadius = 100.0;  // r_h, meters
  double shadowStdDb = 8.0;
  double pathLossExponent = 3.8;
  int cellCount = 19;
  int usersPerCell = 10;
  int bsAntennas = 100;
  std::uint64_t seed = 1;
  /// Adds one ring of out-of-cluster cells that only contribute interference.
  bool outerRing = false;
};

/// Number of hexagon rings around the center cell for a supported cluster size.
inline int ringsForCellCount(int cellCount) {
  switch (cellCount) {
    case 1: return 0;
    case 7: return 1;
    case 19: return 2;
    default:
      throw std::invalid_argument("cellCount: unsupported hexagonal layout " + std::to_string(cellCount) +
                                  " (expected 1, 7 or 19)");
  }
}

inline void validate(const NetworkConfig& cfg) {
  if (!(cfg.cellRadius > 0.0)) throw std::invalid_argument("cellRadius: must be positive");
  if (!(cfg.exclusionRadius > 0.0)) throw std::invalid_argument("exclusionRadius: must be positive");
  if (!(cfg.exclusionRadius < cfg.cellRadius))
    throw std::invalid_argument("exclusionRadius: must be smaller than cellRadius");
  if (!(cfg.shadowStdDb >= 0.0)) throw std::invalid_argument("shadowStdDb: must be non-negative");
  if (!(cfg.pathLossExponent > 0.0)) throw std::invalid_argument("pathLossExponent: must be positive");
  if (cfg.usersPerCell < 1) throw std::invalid_argument("usersPerCell: must be at least 1");
  if (cfg.bsAntennas <= cfg.usersPerCell)
    throw std::invalid_argument("bsAntennas: zero-forcing needs bsAntennas > usersPerCell");
  ringsForCellCount(cfg.cellCount);
}

/// Axial coordinates of the first `rings` rings, center first, then ring by ring.
inline std::vector<AxialCoord> hexSpiral(int rings) {
  static constexpr int kDir[6][2] = {{1, 0}, {1, -1}, {0, -1}, {-1, 0}, {-1, 1}, {0, 1}};
  std::vector<AxialCoord> out{{0, 0}};
  for (int k = 1; k <= rings; ++k) {
    AxialCoord h{-k, k};
    for (const auto& d : kDir) {
      for (int s = 0; s < k; ++s) {
        out.push_back(h);
        h.q += d[0];
        h.r += d[1];
      }
    }
  }
  return out;
}

inline Point2 hexCenter(const AxialCoord& a, double radius) {
  return {1.5 * radius * a.q, std::sqrt(3.0) * radius * (a.r + 0.5 * a.q)};
}

/// Flat-top hexagon of circumradius `radius` centered at `center`.
inline bool insideHexagon(const Point2& p, const Point2& center, double radius) {
  const double x = std::abs(p.x - center.x);
  const double y = std::abs(p.y - center.y);
  const double s3 = std::sqrt(3.0);
  return y <= 0.5 * s3 * radius && s3 * x + y <= s3 * radius;
}

/// Linear gain shadow / (distance / r_h)^v.
inline double largeScaleGain(double distanceMeters, double shadow, const NetworkConfig& cfg) {
  if (!(distanceMeters >= cfg.exclusionRadius))
    throw std::domain_error("largeScaleGain: distance inside the exclusion radius");
  if (!(shadow > 0.0)) throw std::domain_error("largeScaleGain: shadow gain must be positive");
  return shadow / std::pow(distanceMeters / cfg.exclusionRadius, cfg.pathLossExponent);
}

inline double shadowGainFromDb(double db) { return std::pow(10.0, db / 10.0); }

/// Where users of the region-constrained cells are dropped.
enum class PlacementRegion {
  anywhere,  // whole hexagon minus the exclusion disk
  central,   // exclusion radius <= d < split radius
  edge,      // d >= split radius, still inside the hexagon
};

struct DropOptions {
  PlacementRegion region = PlacementRegion::anywhere;
  /// Fraction of the cell radius separating central from edge users.
  double splitFraction = 0.8;
  /// Cells whose users obey `region`; everyone else is dropped anywhere.
  std::vector<int> regionCells{0};
};

/// Large-scale fading beta[i][l][c]: from user c of cell l to BS i.
class LargeScaleFading {
 public:
  LargeScaleFading() = default;
  LargeScaleFading(int cells, int users) : cells_(cells), users_(users), data_(std::size_t(cells) * cells * users) {}

  double operator()(int bs, int cell, int user) const { return data_[index(bs, cell, user)]; }
  double& operator()(int bs, int cell, int user) { return data_[index(bs, cell, user)]; }

  int cells() const { return cells_; }
  int users() const { return users_; }
  const std::vector<double>& raw() const { return data_; }

 private:
  std::size_t index(int bs, int cell, int user) const {
    return (std::size_t(bs) * cells_ + cell) * users_ + user;
  }
  int cells_ = 0;
  int users_ = 0;
  std::vector<double> data_;
};

/// Geometry and large-scale fading of one user drop.
///
/// Cells [0, clusterCells) form the hexagonal cluster; when the config asks for
/// an outer ring, its cells follow and take part only as interferers.
struct CellTopology {
  NetworkConfig config;
  std::vector<AxialCoord> axial;
  std::vector<Point2> bsPositions;
  std::vector<std::vector<Point2>> userPositions;
  LargeScaleFading largeScale;
  std::vector<std::vector<char>> adjacency;

  int clusterCells() const { return config.cellCount; }
  int totalCells() const { return static_cast<int>(bsPositions.size()); }
  int usersPerCell() const { return config.usersPerCell; }
  double beta(int bs, int cell, int user) const { return largeScale(bs, cell, user); }
  bool adjacent(int a, int b) const { return adjacency[a][b] != 0; }

  /// Interfering cells of `cell` (edge-sharing neighbours, outer ring included).
  std::vector<int> neighbors(int cell) const {
    std::vector<int> out;
    for (int l = 0; l < totalCells(); ++l)
      if (adjacency[cell][l]) out.push_back(l);
    return out;
  }
};

namespace detail {

inline void layoutCells(const NetworkConfig& cfg, CellTopology& topo) {
  const int rings = ringsForCellCount(cfg.cellCount) + (cfg.outerRing ? 1 : 0);
  topo.axial = hexSpiral(rings);
  topo.bsPositions.clear();
  for (const auto& a : topo.axial) topo.bsPositions.push_back(hexCenter(a, cfg.cellRadius));
  const int k = topo.totalCells();
  topo.adjacency.assign(k, std::vector<char>(k, 0));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) topo.adjacency[i][j] = hexDistance(topo.axial[i], topo.axial[j]) == 1;
}

inline bool regionAccepts(PlacementRegion region, double d, double split) {
  switch (region) {
    case PlacementRegion::anywhere: return true;
    case PlacementRegion::central: return d < split;
    case PlacementRegion::edge: return d >= split;
  }
  return true;
}

}  // namespace detail

/// Computes beta for given user positions and per-link shadowing (in dB, indexed
/// [bs][cell][user]; pass an empty vector for unit shadowing).
inline CellTopology assembleTopology(const NetworkConfig& cfg, std::vector<std::vector<Point2>> users,
                                     const std::vector<double>& shadowDb = {}) {
  validate(cfg);
  CellTopology topo;
  topo.config = cfg;
  detail::layoutCells(cfg, topo);
  const int k = topo.totalCells();
  const int n = cfg.usersPerCell;
  if (static_cast<int>(users.size()) != k) throw std::invalid_argument("assembleTopology: one user list per cell required");
  for (const auto& u : users)
    if (static_cast<int>(u.size()) != n) throw std::invalid_argument("assembleTopology: usersPerCell users per cell required");
  if (!shadowDb.empty() && shadowDb.size() != std::size_t(k) * k * n)
    throw std::invalid_argument("assembleTopology: shadowing array has the wrong size");
  for (int l = 0; l < k; ++l)
    for (const auto& p : users[l]) {
      if (!insideHexagon(p, topo.bsPositions[l], cfg.cellRadius))
        throw std::invalid_argument("assembleTopology: user outside its hexagon");
      if (distance(p, topo.bsPositions[l]) < cfg.exclusionRadius)
        throw std::invalid_argument("assembleTopology: user inside the exclusion disk");
    }
  topo.userPositions = std::move(users);
  topo.largeScale = LargeScaleFading(k, n);
  std::size_t s = 0;
  for (int i = 0; i < k; ++i)
    for (int l = 0; l < k; ++l)
      for (int c = 0; c < n; ++c, ++s) {
        const double z = shadowDb.empty() ? 1.0 : shadowGainFromDb(shadowDb[s]);
        const double d = std::max(distance(topo.userPositions[l][c], topo.bsPositions[i]), cfg.exclusionRadius);
        topo.largeScale(i, l, c) = largeScaleGain(d, z, cfg);
      }
  return topo;
}

/// Drops users uniformly over each hexagon minus the central disk and draws
/// independent log-normal shadowing for every (BS, user) link.
inline CellTopology buildTopology(const NetworkConfig& cfg, const DropOptions& drop = {}) {
  validate(cfg);
  CellTopology frame;
  frame.config = cfg;
  detail::layoutCells(cfg, frame);
  const int k = frame.totalCells();
  const int n = cfg.usersPerCell;
  const double r = cfg.cellRadius;
  const double split = drop.splitFraction * r;
  if (drop.region == PlacementRegion::central && !(split > cfg.exclusionRadius))
    throw std::invalid_argument("DropOptions: split radius must exceed the exclusion radius");

  std::vector<std::vector<Point2>> users(k);
  for (int l = 0; l < k; ++l) {
    const bool constrained =
        std::find(drop.regionCells.begin(), drop.regionCells.end(), l) != drop.regionCells.end();
    const PlacementRegion region = constrained ? drop.region : PlacementRegion::anywhere;
    Engine rng = makeEngine(cfg.seed, Stream::placement, {std::uint64_t(l)});
    std::uniform_real_distribution<double> ux(-r, r);
    std::uniform_real_distribution<double> uy(-0.5 * std::sqrt(3.0) * r, 0.5 * std::sqrt(3.0) * r);
    const Point2 c0 = frame.bsPositions[l];
    while (static_cast<int>(users[l].size()) < n) {
      const Point2 p{c0.x + ux(rng), c0.y + uy(rng)};
      const double d = distance(p, c0);
      if (d < cfg.exclusionRadius || !insideHexagon(p, c0, r)) continue;
      if (!detail::regionAccepts(region, d, split)) continue;
      users[l].push_back(p);
    }
  }

  std::vector<double> shadowDb(std::size_t(k) * k * n);
  std::size_t s = 0;
  for (int i = 0; i < k; ++i)
    for (int l = 0; l < k; ++l) {
      Engine rng = makeEngine(cfg.seed, Stream::shadowing, {std::uint64_t(i), std::uint64_t(l)});
      std::normal_distribution<double> g(0.0, cfg.shadowStdDb);
      for (int c = 0; c < n; ++c, ++s) shadowDb[s] = cfg.shadowStdDb > 0.0 ? g(rng) : 0.0;
    }
  return assembleTopology(cfg, std::move(users), shadowDb);
}

/// Partitions the cluster cells into groups of mutually non-adjacent cells.
///
/// Greedy coloring, visiting cells ordered by their reuse-3 lattice class
/// ((q - r) mod 3), which makes the greedy pass reproduce the 3-group pattern
/// on hexagonal layouts.
inline std::vector<std::vector<int>> scheduleGroups(const CellTopology& topo) {
  const int k = topo.clusterCells();
  std::vector<int> order(k);
  for (int i = 0; i < k; ++i) order[i] = i;
  auto lattice = [&](int i) { return ((topo.axial[i].q - topo.axial[i].r) % 3 + 3) % 3; };
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return lattice(a) < lattice(b); });

  std::vector<int> color(k, -1);
  int colors = 0;
  for (int i : order) {
    std::vector<char> used(colors + 1, 0);
    for (int j = 0; j < k; ++j)
      if (topo.adjacent(i, j) && color[j] >= 0) used[color[j]] = 1;
    int c = 0;
    while (used[c]) ++c;
    color[i] = c;
    colors = std::max(colors, c + 1);
  }
  std::vector<std::vector<int>> groups(colors);
  for (int i = 0; i < k; ++i) groups[color[i]].push_back(i);
  return groups;
}

}  // namespace mmimo
