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
#include <random>

#include <Eigen/Dense>

#include "hmlse/kernel.hpp"
#include "hmlse/random.hpp"

namespace hmlse {

struct HalfNormal {
  double sigma = 1.0;
  double log_density(double x) const {
    return 0.5 * std::log(2.0 / M_PI) - std::log(sigma) - 0.5 * x * x / (sigma * sigma);
  }
  /// d log p / d log x
  double dlog_dlogx(double x) const { return -x * x / (sigma * sigma); }
  double sample(Rng& rng) const { return std::abs(std::normal_distribution<double>(0.0, sigma)(rng)); }
};

struct InverseGamma {
  double shape = 5.0;
  double scale = 5.0;
  double log_density(double x) const {
    return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
  }
  double dlog_dlogx(double x) const { return -(shape + 1.0) + scale / x; }
  double sample(Rng& rng) const {
    return 1.0 / std::gamma_distribution<double>(shape, 1.0 / scale)(rng);
  }
};

/// Priors on the kernel hyperparameters: the process variance and each
/// binary correlation get Half-Normal(0,1), lengthscales Inverse-Gamma(5,5).
struct HyperPriors {
  HalfNormal alpha{1.0};
  InverseGamma lengthscale{5.0, 5.0};
  HalfNormal binary_corr{1.0};

  double log_density(const KernelParams& p) const {
    double lp = alpha.log_density(p.alpha2);
    for (int i = 0; i < p.n_continuous(); ++i) lp += lengthscale.log_density(p.lengthscales[i]);
    for (int j = 0; j < p.n_binary(); ++j) lp += binary_corr.log_density(p.binary_corr[j]);
    return lp;
  }

  /// Gradient of log_density with respect to KernelParams::to_log().
  Eigen::VectorXd log_density_gradient(const KernelParams& p) const {
    Eigen::VectorXd g(p.n_params());
    g[0] = alpha.dlog_dlogx(p.alpha2);
    for (int i = 0; i < p.n_continuous(); ++i) g[1 + i] = lengthscale.dlog_dlogx(p.lengthscales[i]);
    for (int j = 0; j < p.n_binary(); ++j)
      g[1 + p.n_continuous() + j] = binary_corr.dlog_dlogx(p.binary_corr[j]);
    return g;
  }

  KernelParams sample(int n_continuous, int n_binary, Rng& rng) const {
    KernelParams p;
    p.alpha2 = std::max(alpha.sample(rng), 1e-3);
    p.lengthscales.resize(n_continuous);
    for (int i = 0; i < n_continuous; ++i) p.lengthscales[i] = lengthscale.sample(rng);
    p.binary_corr.resize(n_binary);
    for (int j = 0; j < n_binary; ++j) p.binary_corr[j] = std::max(binary_corr.sample(rng), 1e-3);
    return p;
  }
};

}  // namespace hmlse
