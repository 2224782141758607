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

#include <vector>

#include <Eigen/Dense>

#include "hmlse/gp_regression.hpp"

namespace hmlse {

/// Binary observations grouped by identical input: at row i, `successes[i]`
/// of `trials[i]` replicates were 1. Independent Bernoulli replicates at a
/// duplicated input give exactly this binomial likelihood.
struct BinomialData {
  PointMatrix inputs;
  Eigen::VectorXd successes;
  Eigen::VectorXd trials;
};

/// Groups (input, label) pairs by exact input equality, in first-seen order.
BinomialData aggregate_labels(const PointMatrix& inputs, const std::vector<int>& labels);

/// Laplace approximation to the latent-logit posterior of a zero-mean GP
/// classifier with Bernoulli (logistic) likelihood, at fixed hyperparameters.
struct LaplacePosterior {
  Eigen::VectorXd mode;           // latent logits at the training inputs
  Eigen::VectorXd dlog_lik;       // d log p(y|f) / df at the mode
  Eigen::VectorXd sqrt_w;         // sqrt of -d2 log p(y|f) / df2 at the mode
  Eigen::MatrixXd chol_b;         // lower Cholesky factor of I + sW K sW
  double log_marginal = 0.0;      // approximate log marginal likelihood
  int newton_iterations = 0;
};

/// Newton iteration for the posterior mode (K includes jitter).
LaplacePosterior laplace_mode(const Eigen::MatrixXd& K, const BinomialData& data);

/// Approximate log marginal likelihood and, if `gradient` is non-null, its
/// exact gradient (including the implicit dependence of the mode) with
/// respect to the log hyperparameters.
double laplace_log_marginal(const KernelWorkspace& ws, const BinomialData& data, const KernelParams& params,
                            double jitter_relative, Eigen::VectorXd* gradient);

double laplace_log_posterior(const KernelWorkspace& ws, const BinomialData& data, const KernelParams& params,
                             const HyperPriors& priors, double jitter_relative, Eigen::VectorXd* gradient);

/// Latent-GP Bernoulli classifier for an event probability. Predicts the
/// latent logit.
class ClassifierEmulator {
 public:
  ClassifierEmulator() = default;

  /// MAP hyperparameters (Laplace marginal + log priors), then conditions.
  static ClassifierEmulator fit(const PointMatrix& inputs, const std::vector<int>& labels, int n_continuous,
                                const HyperPriors& priors, const FitSettings& settings);
  /// Conditions on grouped data at given hyperparameters; no optimization.
  static ClassifierEmulator condition(BinomialData data, KernelParams params, const JitterPolicy& jitter = {});

  Prediction predict_logit(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  Prediction predict_logit(const InputPoint& x) const { return predict_logit(pack(x)); }
  void predict_logit(const PointMatrix& x, Eigen::VectorXd& mean, Eigen::VectorXd& variance) const;

  const KernelParams& params() const noexcept { return params_; }
  const BinomialData& data() const noexcept { return data_; }
  const LaplacePosterior& posterior() const noexcept { return post_; }
  double jitter() const noexcept { return jitter_; }
  double log_posterior() const noexcept { return log_posterior_; }

 private:
  KernelParams params_;
  BinomialData data_;
  LaplacePosterior post_;
  double jitter_ = 0.0;
  double log_posterior_ = 0.0;
};

}  // namespace hmlse
