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

#include <Eigen/Dense>

#include "hmlse/gp_regression.hpp"

namespace hmlse {

struct HetGpSettings {
  FitSettings fit{};
  int max_outer_iterations = 20;
  double tolerance = 1e-6;  // on the change of the combined log posterior
};

/// Everything needed to rebuild a fitted HetGpEmulator without optimization.
/// Vectors are indexed by unique training input; targets are standardized.
struct HetGpState {
  PointMatrix inputs;
  Eigen::VectorXd mean_response;  // replicate mean, standardized
  Eigen::VectorXd replicates;     // replicate count per input
  Eigen::VectorXd log_noise;      // fitted log delta^2 (standardized scale)
  Eigen::VectorXd logvar_targets; // bias-corrected log variance estimates, centred
  Eigen::VectorXd logvar_noise;   // sampling variance of those estimates
  double logvar_offset = 0.0;     // centring constant of the log variance
  double response_mean = 0.0;     // standardization constants
  double response_sd = 1.0;
  KernelParams mean_params;
  KernelParams logvar_params;
};

/// Heteroscedastic GP for a stochastic scalar response: the replicate mean
/// is a GP with per-input noise delta^2(x) / replicates, and log delta^2 is a
/// second GP. Fitted by alternating MAP fits of the two GPs.
class HetGpEmulator {
 public:
  HetGpEmulator() = default;

  static HetGpEmulator fit(const PointMatrix& inputs, const Eigen::VectorXd& responses, int n_continuous,
                           const HyperPriors& priors, const HetGpSettings& settings);
  static HetGpEmulator condition(HetGpState state, const JitterPolicy& jitter = {});

  /// Mean response (native units) and the variance of that mean; the
  /// intrinsic noise delta^2 is not included.
  Prediction predict_mean(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  Prediction predict_mean(const InputPoint& x) const { return predict_mean(pack(x)); }
  void predict_mean(const PointMatrix& x, Eigen::VectorXd& mean, Eigen::VectorXd& variance) const;

  /// Same, on the standardized response scale.
  Prediction predict_standardized(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

  /// Intrinsic noise variance delta^2(x), native units.
  double noise_variance(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  void noise_variance(const PointMatrix& x, Eigen::VectorXd& out) const;

  const HetGpState& state() const noexcept { return state_; }
  const GpRegression& mean_gp() const noexcept { return mean_gp_; }
  const GpRegression& logvar_gp() const noexcept { return logvar_gp_; }
  int outer_iterations() const noexcept { return outer_iterations_; }
  double log_posterior() const noexcept { return log_posterior_; }

 private:
  HetGpState state_;
  GpRegression mean_gp_;
  GpRegression logvar_gp_;
  int outer_iterations_ = 0;
  double log_posterior_ = 0.0;
};

double digamma(double x);
double trigamma(double x);

}  // namespace hmlse
