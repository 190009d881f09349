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
#include <limits>
#include <stdexcept>

#include <boost/math/constants/constants.hpp>

namespace mmimo {

/// Below this argument E1 is summed from its power series, above it from the
/// continued fraction.
inline constexpr double kE1Switchover = 1.5;

/// e^x E1(x) for x > 0. Works for any floating type with std-style math
/// functions reachable by ADL (double, long double, boost::multiprecision).
template <class Real>
Real scaledExpIntegralE1(const Real& x) {
  using std::abs;
  using std::exp;
  using std::log;
  if (!(x > 0)) throw std::domain_error("expIntegralE1: argument must be positive");
  const Real eps = std::numeric_limits<Real>::epsilon();
  constexpr int kMaxIter = 100000;

  if (x < Real(kE1Switchover)) {
    // E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
    Real sum = 0;
    Real term = 1;  // (-x)^k / k!
    for (int k = 1; k < kMaxIter; ++k) {
      term *= -x / Real(k);
      const Real add = term / Real(k);
      sum += add;
      if (abs(add) < eps * abs(sum)) break;
    }
    const Real e1 = -boost::math::constants::euler<Real>() - log(x) - sum;
    return exp(x) * e1;
  }

  // Modified Lentz evaluation of the continued fraction
  // e^x E1(x) = 1/(x+1- 1/(x+3- 4/(x+5- ...))).
  const Real tiny = std::numeric_limits<Real>::min() / eps;
  Real b = x + 1;
  Real c = 1 / tiny;
  Real d = 1 / b;
  Real h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const Real a = -Real(i) * Real(i);
    b += 2;
    d = 1 / (a * d + b);
    c = b + a / c;
    const Real del = c * d;
    h *= del;
    if (abs(del - 1) < eps) break;
  }
  return h;
}

/// Exponential integral E1(x) = int_1^inf e^{-xt}/t dt, x > 0.
template <class Real>
Real expIntegralE1(const Real& x) {
  using std::exp;
  if (!(x > 0)) throw std::domain_error("expIntegralE1: argument must be positive");
  return exp(-x) * scaledExpIntegralE1(x);
}

inline double expIntegralE1(double x) { return expIntegralE1<double>(x); }

}  // namespace mmimo
