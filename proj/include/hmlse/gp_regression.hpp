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

#include <cstdint>
#include <optional>

#include <Eigen/Dense>

#include "hmlse/design_space.hpp"
#include "hmlse/kernel.hpp"
#include "hmlse/optimize.hpp"
#include "hmlse/prediction.hpp"
#include "hmlse/priors.hpp"

namespace hmlse {

/// Jitter added to the Gram diagonal, relative to alpha2. Escalated by x10
/// on factorization failure up to `max_relative`.
struct JitterPolicy {
  double initial_relative = 1e-8;
  double max_relative = 1e-2;
};

struct FitSettings {
  int restarts = 5;
  std::uint64_t seed = 0;
  MinimizeSettings minimize{};
  JitterPolicy jitter{};
};

/// Zero-mean GP regression with known, possibly heteroscedastic, Gaussian
/// observation noise. Conditioned once; immutable afterwards.
class GpRegression {
 public:
  GpRegression() = default;

  /// Factorizes K + diag(noise) + jitter*I. Throws FitError when no jitter
  /// up to the cap gives a positive-definite matrix.
  static GpRegression condition(PointMatrix x, Eigen::VectorXd y, Eigen::VectorXd noise,
                                KernelParams params, const JitterPolicy& jitter = {});

  Prediction predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  /// Batch prediction over rows of `x`.
  void predict(const PointMatrix& x, Eigen::VectorXd& mean, Eigen::VectorXd& variance) const;

  double log_marginal_likelihood() const { return log_marginal_; }
  /// Leave-one-out predictive residuals y_i - E[y_i | y_-i].
  Eigen::VectorXd loo_residuals() const;
  /// Posterior mean of the latent function at the training inputs.
  Eigen::VectorXd fitted_values() const;

  const KernelParams& params() const noexcept { return params_; }
  const PointMatrix& inputs() const noexcept { return x_; }
  const Eigen::VectorXd& targets() const noexcept { return y_; }
  const Eigen::VectorXd& noise() const noexcept { return noise_; }
  double jitter() const noexcept { return jitter_; }

 private:
  PointMatrix x_;
  Eigen::VectorXd y_;
  Eigen::VectorXd noise_;
  KernelParams params_;
  double jitter_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd weights_;  // (K + Sigma)^-1 y
  double log_marginal_ = 0.0;
};

/// Log marginal likelihood of y ~ N(0, K + diag(noise) + jitter) and, when
/// `gradient` is non-null, its gradient with respect to the log
/// hyperparameters. Returns -inf if the matrix cannot be factorized at the
/// given relative jitter.
double gp_log_marginal(const KernelWorkspace& ws, const Eigen::VectorXd& y, const Eigen::VectorXd& noise,
                       const KernelParams& params, double jitter_relative, Eigen::VectorXd* gradient);

/// log marginal + log prior, and its log-parameter gradient.
double gp_log_posterior(const KernelWorkspace& ws, const Eigen::VectorXd& y, const Eigen::VectorXd& noise,
                        const KernelParams& params, const HyperPriors& priors, double jitter_relative,
                        Eigen::VectorXd* gradient);

/// MAP hyperparameters from `settings.restarts` prior draws (plus `warm_start`
/// when given). Ties go to the lexicographically smallest log-parameter vector.
KernelParams fit_gp_hyperparameters(const PointMatrix& x, int n_continuous, const Eigen::VectorXd& y,
                                    const Eigen::VectorXd& noise, const HyperPriors& priors,
                                    const FitSettings& settings,
                                    const std::optional<KernelParams>& warm_start = {});

/// Multi-start MAP driver shared by the emulators. `objective` returns the
/// negative log posterior at a log-parameter vector.
struct MultiStartResult {
  Eigen::VectorXd theta;
  double value = 0.0;  // negative log posterior
};
MultiStartResult multi_start_minimize(const Objective& objective, const std::vector<Eigen::VectorXd>& starts,
                                      const MinimizeSettings& settings);

/// `restarts` prior draws followed by the warm start, if any.
std::vector<Eigen::VectorXd> restart_points(const HyperPriors& priors, int n_continuous, int n_binary,
                                            const FitSettings& settings,
                                            const std::optional<KernelParams>& warm_start);

/// Wraps a log-posterior evaluator (value + gradient in log-parameter space)
/// with jitter escalation into a minimization objective.
Objective negated_with_jitter(
    std::function<double(const KernelParams&, double, Eigen::VectorXd*)> log_posterior, int n_continuous,
    const JitterPolicy& jitter);

/// Batch-size for chunked prediction over large candidate sets.
inline constexpr Eigen::Index kPredictBlock = 2048;

}  // namespace hmlse
