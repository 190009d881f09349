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

#include <Eigen/Dense>

namespace mmimo {

using CMatrix = Eigen::MatrixXcd;

/// Raised when a channel Gram matrix is singular or too badly conditioned to invert.
class IllConditionedChannel : public std::runtime_error {
 public:
  explicit IllConditionedChannel(double condition)
      : std::runtime_error("ill-conditioned channel (Gram condition number " + std::to_string(condition) + ")"),
        condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

inline constexpr double kMaxGramCondition = 1e12;

/// Inverse of a Hermitian positive-definite Gram matrix, guarded by its
/// eigenvalue condition number.
inline CMatrix invertGram(const CMatrix& gram) {
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(gram);
  if (eig.info() != Eigen::Success) throw IllConditionedChannel(INFINITY);
  const Eigen::VectorXd& ev = eig.eigenvalues();  // ascending
  const double lo = ev(0);
  const double hi = ev(ev.size() - 1);
  if (!(lo > 0.0) || hi / lo > kMaxGramCondition) throw IllConditionedChannel(lo > 0.0 ? hi / lo : INFINITY);
  return eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().adjoint();
}

/// Zero-forcing receiver A = G (G^H G)^{-1}, so that A^H G = I.
inline CMatrix zfReceiver(const CMatrix& g) {
  if (g.rows() < g.cols()) throw IllConditionedChannel(INFINITY);
  return g * invertGram(g.adjoint() * g);
}

/// Precoder scale alpha = sqrt((M - N) / sum_n 1/beta_n) meeting E{tr(B B^H)} = 1.
inline double precoderScale(int antennas, std::span<const double> betaSelf) {
  const int users = static_cast<int>(betaSelf.size());
  if (antennas <= users) throw std::invalid_argument("precoderScale: needs antennas > users");
  double lambda = 0.0;
  for (double b : betaSelf) {
    if (!(b > 0.0)) throw std::invalid_argument("precoderScale: large-scale gains must be positive");
    lambda += 1.0 / b;
  }
  return std::sqrt((antennas - users) / lambda);
}

struct ZfPrecoder {
  CMatrix matrix;  // B, M x N
  double alpha = 0.0;
};

/// Zero-forcing precoder B = alpha G^* (G^T G^*)^{-1}; G^T B = alpha I.
inline ZfPrecoder zfPrecoder(const CMatrix& g, std::span<const double> betaSelf) {
  if (static_cast<Eigen::Index>(betaSelf.size()) != g.cols())
    throw std::invalid_argument("zfPrecoder: one large-scale gain per user required");
  const double alpha = precoderScale(static_cast<int>(g.rows()), betaSelf);
  const CMatrix gc = g.conjugate();
  // G^T G^* is the conjugate of G^H G.
  return {alpha * gc * invertGram(g.transpose() * gc), alpha};
}

}  // namespace mmimo
