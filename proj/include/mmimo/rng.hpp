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

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace mmimo {

// Random streams.
//
// Every consumer of randomness draws from its own engine whose seed is a hash
// of (root seed, purpose, index path). Adding or removing a consumer never
// shifts the numbers seen by another one, and Monte Carlo trial t always sees
// the same fading regardless of thread count or of the powers being compared.
//
//   placement   path = {cell}
//   shadowing   path = {bs, cell}
//   fastFading  path = {trial, attempt, bs, userCell}
//   drop        path = {dropIndex}            (derives a per-drop root seed)
//   point       path = {pointIndex}           (experiment sweep points)

enum class Stream : std::uint64_t {
  placement = 1,
  shadowing = 2,
  fastFading = 3,
  drop = 4,
  point = 5,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t deriveSeed(std::uint64_t root, Stream purpose,
                                std::initializer_list<std::uint64_t> path = {}) noexcept {
  std::uint64_t h = splitmix64(root);
  h = splitmix64(h ^ splitmix64(static_cast<std::uint64_t>(purpose) + 0x632be59bd9b4e019ULL));
  for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p + 0x8cb92ba72f3d8dd7ULL));
  return h;
}

using Engine = std::mt19937_64;

inline Engine makeEngine(std::uint64_t root, Stream purpose,
                         std::initializer_list<std::uint64_t> path = {}) {
  return Engine(deriveSeed(root, purpose, path));
}

/// Circularly-symmetric complex Gaussian source, unit variance (each part 1/2).
class ComplexGaussian {
 public:
  template <class Rng>
  std::complex<double> operator()(Rng& rng) {
    const double re = normal_(rng);
    const double im = normal_(rng);
    return {re, im};
  }

 private:
  std::normal_distribution<double> normal_{0.0, 0.70710678118654752440};
};

}  // namespace mmimo
