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

#include "hmlse/kernel.hpp"

#include <algorithm>

namespace hmlse {

namespace {
constexpr double kMinBinaryCorr = 1e-10;
}

Eigen::VectorXd KernelParams::to_log() const {
  Eigen::VectorXd t(n_params());
  t[0] = std::log(alpha2);
  t.segment(1, n_continuous()) = lengthscales.array().log();
  t.tail(n_binary()) = binary_corr.array().max(kMinBinaryCorr).log();
  return t;
}

KernelParams KernelParams::from_log(const Eigen::Ref<const Eigen::VectorXd>& theta, int n_continuous) {
  if (theta.size() < 1 + n_continuous) throw ContractError("log-parameter vector too short");
  KernelParams p;
  p.alpha2 = std::exp(theta[0]);
  p.lengthscales = theta.segment(1, n_continuous).array().exp();
  p.binary_corr = theta.tail(theta.size() - 1 - n_continuous).array().exp();
  return p;
}

void KernelParams::validate() const {
  if (!(alpha2 > 0.0) || !std::isfinite(alpha2)) throw ContractError("alpha2 must be positive");
  if (!(lengthscales.array() > 0.0).all() || !lengthscales.allFinite())
    throw ContractError("lengthscales must be positive");
  if (!(binary_corr.array() >= 0.0).all() || !binary_corr.allFinite())
    throw ContractError("binary correlations must be nonnegative");
}

bool operator==(const KernelParams& a, const KernelParams& b) {
  return a.alpha2 == b.alpha2 && a.lengthscales == b.lengthscales && a.binary_corr == b.binary_corr;
}

double kernel_eval(const KernelParams& p, const InputPoint& a, const InputPoint& b) {
  if (a.continuous.size() != p.n_continuous() || b.continuous.size() != p.n_continuous() ||
      a.binary.size() != p.n_binary() || b.binary.size() != p.n_binary())
    throw ContractError("kernel_eval: point dimensions do not match kernel parameters");
  return kernel_eval(p, pack(a), pack(b));
}

Eigen::MatrixXd cross_covariance(const KernelParams& p, const PointMatrix& a, const PointMatrix& b) {
  const int nc = p.n_continuous();
  const int d = nc + p.n_binary();
  if (a.cols() != d || b.cols() != d) throw ContractError("cross_covariance: dimension mismatch");
  // Scaled coordinates turn the continuous part into a plain squared distance.
  const Eigen::RowVectorXd inv_l = p.lengthscales.cwiseInverse().transpose();
  const Eigen::MatrixXd as = a.leftCols(nc).array().rowwise() * inv_l.array();
  const Eigen::MatrixXd bs = b.leftCols(nc).array().rowwise() * inv_l.array();
  const Eigen::VectorXd an = as.rowwise().squaredNorm();
  const Eigen::VectorXd bn = bs.rowwise().squaredNorm();
  Eigen::MatrixXd s = -2.0 * as * bs.transpose();
  s.colwise() += an;
  s.rowwise() += bn.transpose();
  s = s.cwiseMax(0.0);
  for (int j = 0; j < p.n_binary(); ++j) {
    if (p.binary_corr[j] == 0.0) continue;
    const auto ca = a.col(nc + j);
    const auto cb = b.col(nc + j);
    for (Eigen::Index c = 0; c < s.cols(); ++c)
      for (Eigen::Index r = 0; r < s.rows(); ++r)
        if (ca[r] != cb[c]) s(r, c) += p.binary_corr[j];
  }
  return p.alpha2 * (-s.array()).exp().matrix();
}

KernelWorkspace::KernelWorkspace(const PointMatrix& x, int n_continuous)
    : n_(x.rows()), n_continuous_(n_continuous) {
  for (int i = 0; i < n_continuous; ++i) {
    Eigen::MatrixXd d(n_, n_);
    for (Eigen::Index c = 0; c < n_; ++c)
      for (Eigen::Index r = 0; r < n_; ++r) {
        const double diff = x(r, i) - x(c, i);
        d(r, c) = diff * diff;
      }
    sqdist_.push_back(std::move(d));
  }
  for (Eigen::Index j = n_continuous; j < x.cols(); ++j) {
    Eigen::MatrixXd m(n_, n_);
    for (Eigen::Index c = 0; c < n_; ++c)
      for (Eigen::Index r = 0; r < n_; ++r) m(r, c) = x(r, j) != x(c, j) ? 1.0 : 0.0;
    mismatch_.push_back(std::move(m));
  }
}

Eigen::MatrixXd KernelWorkspace::gram(const KernelParams& p) const {
  if (p.n_continuous() != n_continuous_ || p.n_binary() != static_cast<int>(mismatch_.size()))
    throw ContractError("kernel parameters do not match workspace dimensions");
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n_, n_);
  for (int i = 0; i < n_continuous_; ++i)
    s.noalias() += sqdist_[i] / (p.lengthscales[i] * p.lengthscales[i]);
  for (std::size_t j = 0; j < mismatch_.size(); ++j) s.noalias() += p.binary_corr[j] * mismatch_[j];
  return p.alpha2 * (-s.array()).exp().matrix();
}

Eigen::MatrixXd KernelWorkspace::gram_derivative(const KernelParams& p, const Eigen::MatrixXd& K,
                                                 int k) const {
  if (k == 0) return K;
  if (k <= n_continuous_) {
    const double l = p.lengthscales[k - 1];
    return (2.0 / (l * l)) * K.cwiseProduct(sqdist_[k - 1]);
  }
  const int j = k - 1 - n_continuous_;
  return -p.binary_corr[j] * K.cwiseProduct(mismatch_[j]);
}

}  // namespace hmlse
