/*
 * Copyright 2026 The hmlse Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "hmlse/design_space.hpp"
#include "hmlse/errors.hpp"

namespace hmlse {

/// Hyperparameters of the mixed continuous/binary squared-exponential kernel
///
///   k(a, b) = alpha2 * exp(-sum_i (a_i - b_i)^2 / l_i^2 - sum_j phi_j [a_j != b_j])
///
/// with i over continuous and j over binary coordinates.
struct KernelParams {
  double alpha2 = 1.0;
  Eigen::VectorXd lengthscales;
  Eigen::VectorXd binary_corr;

  int n_continuous() const noexcept { return static_cast<int>(lengthscales.size()); }
  int n_binary() const noexcept { return static_cast<int>(binary_corr.size()); }
  int n_params() const noexcept { return 1 + n_continuous() + n_binary(); }

  static KernelParams defaults(int n_continuous, int n_binary) {
    return {1.0, Eigen::VectorXd::Constant(n_continuous, 1.0), Eigen::VectorXd::Constant(n_binary, 1.0)};
  }

  /// [log alpha2, log l_1.., log phi_1..]; the optimizer works in this space.
  Eigen::VectorXd to_log() const;
  static KernelParams from_log(const Eigen::Ref<const Eigen::VectorXd>& theta, int n_continuous);

  void validate() const;
};

bool operator==(const KernelParams& a, const KernelParams& b);

template <typename DerivedA, typename DerivedB>
double kernel_eval(const KernelParams& p, const Eigen::MatrixBase<DerivedA>& a,
                   const Eigen::MatrixBase<DerivedB>& b) {
  const int nc = p.n_continuous();
  double s = 0.0;
  for (int i = 0; i < nc; ++i) {
    const double d = a[i] - b[i];
    s += d * d / (p.lengthscales[i] * p.lengthscales[i]);
  }
  for (int j = 0; j < p.n_binary(); ++j)
    if (a[nc + j] != b[nc + j]) s += p.binary_corr[j];
  return p.alpha2 * std::exp(-s);
}

double kernel_eval(const KernelParams& p, const InputPoint& a, const InputPoint& b);

/// Covariance between rows of `a` and rows of `b`.
Eigen::MatrixXd cross_covariance(const KernelParams& p, const PointMatrix& a, const PointMatrix& b);

inline Eigen::MatrixXd gram(const KernelParams& p, const PointMatrix& x) { return cross_covariance(p, x, x); }

/// Per-dimension pairwise distances of a fixed training set, reused across
/// hyperparameter evaluations.
class KernelWorkspace {
 public:
  KernelWorkspace() = default;
  KernelWorkspace(const PointMatrix& x, int n_continuous);

  Eigen::Index size() const noexcept { return n_; }
  /// Gram matrix at p (no jitter).
  Eigen::MatrixXd gram(const KernelParams& p) const;
  /// dK/dtheta_k for the log-parameter ordering of KernelParams::to_log,
  /// given the Gram matrix K at the same parameters.
  Eigen::MatrixXd gram_derivative(const KernelParams& p, const Eigen::MatrixXd& K, int k) const;

 private:
  Eigen::Index n_ = 0;
  int n_continuous_ = 0;
  std::vector<Eigen::MatrixXd> sqdist_;   // one per continuous dim
  std::vector<Eigen::MatrixXd> mismatch_;  // one per binary dim
};

}  // namespace hmlse
