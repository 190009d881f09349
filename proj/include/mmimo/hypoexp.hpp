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
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "mmimo/special.hpp"

namespace mmimo {

// Sum of independent exponentials v = sum_k x_k, x_k ~ Exp(mean zeta_k).
//
// With distinct means zeta_<h> (multiplicity tau_h) the Laplace transform
// prod_h (1 + zeta_<h> s)^{-tau_h} splits into partial fractions
//
//   sum_h sum_{j<=tau_h} lambda_{h,j} (1 + zeta_<h> s)^{-j},
//
// so the density is the lambda-weighted mixture of Erlang(j, zeta_<h>) densities.
// Around the pole of h, with u = 1 + zeta_<h> s and r_k = zeta_k / zeta_<h>,
// the remaining factors are ((1 - r_k) + r_k u)^{-tau_k} and lambda_{h,j} is
// the u^{tau_h - j} Taylor coefficient of their product.

inline constexpr double kZetaMergeTolerance = 1e-9;

struct HypoexpSpec {
  std::vector<double> zetas;                     // as given
  std::vector<double> distinct;                  // strictly decreasing
  std::vector<int> multiplicity;                 // tau_h
  std::vector<std::vector<double>> charCoeffs;   // [h][j-1] = lambda_{h,j}

  int terms() const { return static_cast<int>(zetas.size()); }
  double mean() const;
  double pdf(double v) const;
  double cdf(double v) const;
};

namespace detail {

/// Sorts decreasingly and merges values closer than the relative tolerance
/// (merged value = group mean).
inline void groupZetas(std::span<const double> zetas, std::vector<double>& distinct, std::vector<int>& mult) {
  if (zetas.empty()) throw std::invalid_argument("characteristicCoefficients: empty input");
  std::vector<double> z(zetas.begin(), zetas.end());
  for (double v : z)
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("characteristicCoefficients: zetas must be positive");
  std::sort(z.begin(), z.end(), std::greater<>());
  distinct.clear();
  mult.clear();
  double groupHead = z[0];
  double groupSum = 0.0;
  int count = 0;
  for (double v : z) {
    if (count > 0 && groupHead - v > kZetaMergeTolerance * groupHead) {
      distinct.push_back(groupSum / count);
      mult.push_back(count);
      groupHead = v;
      groupSum = 0.0;
      count = 0;
    }
    groupSum += v;
    ++count;
  }
  distinct.push_back(groupSum / count);
  mult.push_back(count);
}

template <class Real>
struct PartialFractions {
  std::vector<Real> distinct;
  std::vector<int> multiplicity;
  std::vector<std::vector<Real>> lambda;
  std::vector<std::vector<Real>> lambdaMagnitude;  // same recursion on |.|, bounds cancellation
};

template <class Real>
PartialFractions<Real> partialFractions(const std::vector<double>& distinct, const std::vector<int>& mult) {
  using std::abs;
  using std::pow;
  const std::size_t hs = distinct.size();
  PartialFractions<Real> pf;
  pf.multiplicity = mult;
  for (double d : distinct) pf.distinct.emplace_back(d);
  pf.lambda.resize(hs);
  pf.lambdaMagnitude.resize(hs);
  for (std::size_t h = 0; h < hs; ++h) {
    const int tau = mult[h];
    std::vector<Real> s(tau, Real(0)), sa(tau, Real(0));
    s[0] = 1;
    sa[0] = 1;
    for (std::size_t k = 0; k < hs; ++k) {
      if (k == h) continue;
      const Real r = pf.distinct[k] / pf.distinct[h];
      const Real oneMinus = 1 - r;
      const Real a = r / oneMinus;
      const Real scale = pow(oneMinus, -mult[k]);
      // (1 + a u)^{-tau_k} = sum_m C(tau_k + m - 1, m) (-a)^m u^m
      std::vector<Real> f(tau);
      f[0] = 1;
      for (int m = 1; m < tau; ++m) f[m] = f[m - 1] * (-a) * Real(mult[k] + m - 1) / Real(m);
      std::vector<Real> next(tau, Real(0)), nextAbs(tau, Real(0));
      for (int i = 0; i < tau; ++i)
        for (int m = 0; i + m < tau; ++m) {
          next[i + m] += s[i] * f[m];
          nextAbs[i + m] += sa[i] * abs(f[m]);
        }
      for (int i = 0; i < tau; ++i) {
        s[i] = next[i] * scale;
        sa[i] = nextAbs[i] * abs(scale);
      }
    }
    pf.lambda[h].resize(tau);
    pf.lambdaMagnitude[h].resize(tau);
    for (int j = 1; j <= tau; ++j) {
      pf.lambda[h][j - 1] = s[tau - j];
      pf.lambdaMagnitude[h][j - 1] = sa[tau - j];
    }
  }
  return pf;
}

struct ShiftedInverseValue {
  double value = 0.0;
  double relativeError = 0.0;  // rounding-error estimate of the evaluation
};

/// E{1/(v+1)} by the closed form
///   sum_h sum_j lambda_{h,j} (-1)^{j-1} zeta^{-j}/(j-1)!
///       * [e^{1/zeta} E1(1/zeta) - sum_{m=0}^{j-2} (-1)^m zeta^{m+1} m!]
/// evaluated in `Real`, with a running bound on the magnitude of all summands.
template <class Real>
ShiftedInverseValue shiftedInverseClosedForm(const std::vector<double>& distinct, const std::vector<int>& mult) {
  using std::abs;
  using std::pow;
  const PartialFractions<Real> pf = partialFractions<Real>(distinct, mult);
  Real total = 0;
  Real magnitude = 0;
  for (std::size_t h = 0; h < pf.distinct.size(); ++h) {
    const Real zeta = pf.distinct[h];
    const Real scaledE1 = scaledExpIntegralE1<Real>(1 / zeta);
    Real poly = 0;       // sum_{m=0}^{j-2} (-1)^m zeta^{m+1} m!
    Real polyAbs = 0;
    Real zetaPow = zeta;  // zeta^{m+1}
    Real fact = 1;        // m!
    Real jFact = 1;       // (j-1)!
    for (int j = 1; j <= pf.multiplicity[h]; ++j) {
      if (j >= 2) {
        const int m = j - 2;
        if (m > 0) {
          fact *= Real(m);
          zetaPow *= zeta;
        }
        const Real t = zetaPow * fact;
        poly += (m % 2 == 0) ? t : Real(-t);
        polyAbs += t;
        jFact *= Real(j - 1);
      }
      const Real weight = pow(zeta, -j) / jFact;
      const Real sign = (j % 2 == 1) ? Real(1) : Real(-1);
      total += pf.lambda[h][j - 1] * sign * weight * (scaledE1 - poly);
      magnitude += pf.lambdaMagnitude[h][j - 1] * weight * (abs(scaledE1) + polyAbs);
    }
  }
  ShiftedInverseValue out;
  out.value = static_cast<double>(total);
  const Real eps = std::numeric_limits<Real>::epsilon();
  out.relativeError = total != 0 ? static_cast<double>(eps * magnitude * 16 / abs(total))
                                 : std::numeric_limits<double>::infinity();
  return out;
}

template <unsigned Digits>
using HighPrecision = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<Digits>,
                                                    boost::multiprecision::et_off>;

}  // namespace detail

/// Partial-fraction decomposition of the hypoexponential density.
inline HypoexpSpec characteristicCoefficients(std::span<const double> zetas) {
  HypoexpSpec spec;
  spec.zetas.assign(zetas.begin(), zetas.end());
  detail::groupZetas(zetas, spec.distinct, spec.multiplicity);
  const auto pf = detail::partialFractions<detail::HighPrecision<60>>(spec.distinct, spec.multiplicity);
  spec.charCoeffs.resize(pf.lambda.size());
  for (std::size_t h = 0; h < pf.lambda.size(); ++h)
    for (const auto& l : pf.lambda[h]) spec.charCoeffs[h].push_back(static_cast<double>(l));
  return spec;
}

inline double HypoexpSpec::mean() const {
  double s = 0.0;
  for (double z : zetas) s += z;
  return s;
}

inline double HypoexpSpec::pdf(double v) const {
  if (v < 0.0) return 0.0;
  double f = 0.0;
  for (std::size_t h = 0; h < distinct.size(); ++h) {
    const double z = distinct[h];
    // zeta^{-j} v^{j-1} e^{-v/zeta} / (j-1)!, exponential folded in so large v stays finite
    double term = std::exp(-v / z) / z;
    for (int j = 1; j <= multiplicity[h]; ++j) {
      if (j > 1) term *= v / (z * (j - 1));
      f += charCoeffs[h][j - 1] * term;
    }
  }
  return f;
}

inline double HypoexpSpec::cdf(double v) const {
  if (v <= 0.0) return 0.0;
  double f = 0.0;
  for (std::size_t h = 0; h < distinct.size(); ++h) {
    const double x = v / distinct[h];
    double partial = 0.0;  // e^{-x} sum_{m<j} x^m/m!
    double term = std::exp(-x);
    for (int j = 1; j <= multiplicity[h]; ++j) {
      if (j > 1) term *= x / (j - 1);
      partial += term;
      f += charCoeffs[h][j - 1] * (1.0 - partial);
    }
  }
  return f;
}

/// How E{1/(v+1)} was obtained.
struct ShiftedInverseMean {
  double value = 1.0;
  int digits = 0;             // 0 = double, otherwise decimal digits of the working precision
  bool integralRoute = false; // Laplace-integral quadrature was needed
};

/// E{1/(v+1)} for v a sum of independent exponentials with means `zetas`.
///
/// The closed form loses digits to cancellation when means cluster, so it is
/// re-evaluated with more working precision until the rounding estimate is
/// below 1e-15 relative. The integral int_0^inf e^{-t} prod_k (1 + zeta_k t)^{-1} dt
/// is the last resort.
inline ShiftedInverseMean expectedInverseShiftedDetailed(std::span<const double> zetas) {
  if (zetas.empty()) return {1.0, 0, false};
  std::vector<double> distinct;
  std::vector<int> mult;
  detail::groupZetas(zetas, distinct, mult);
  constexpr double kTarget = 1e-15;

  auto r = detail::shiftedInverseClosedForm<double>(distinct, mult);
  if (r.relativeError < kTarget) return {r.value, 0, false};
  r = detail::shiftedInverseClosedForm<detail::HighPrecision<50>>(distinct, mult);
  if (r.relativeError < kTarget) return {r.value, 50, false};
  r = detail::shiftedInverseClosedForm<detail::HighPrecision<100>>(distinct, mult);
  if (r.relativeError < kTarget) return {r.value, 100, false};
  r = detail::shiftedInverseClosedForm<detail::HighPrecision<250>>(distinct, mult);
  if (r.relativeError < kTarget) return {r.value, 250, false};

  std::vector<double> z(zetas.begin(), zetas.end());
  boost::math::quadrature::exp_sinh<double> integrator;
  const double value = integrator.integrate([&](double t) {
    double f = std::exp(-t);
    for (double zk : z) f /= 1.0 + zk * t;
    return f;
  });
  return {value, 0, true};
}

inline double expectedInverseShifted(std::span<const double> zetas) {
  return expectedInverseShiftedDetailed(zetas).value;
}

}  // namespace mmimo
