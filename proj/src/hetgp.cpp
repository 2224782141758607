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

#include "hmlse/hetgp.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <map>
#include <vector>

namespace hmlse {

namespace {

constexpr double kVarianceFloor = 1e-10;  // standardized units

struct Grouped {
  PointMatrix inputs;
  Eigen::VectorXd mean, count, sample_var;
};

Grouped group_responses(const PointMatrix& x, const Eigen::VectorXd& y) {
  std::map<std::vector<double>, std::size_t> index;
  std::vector<Eigen::Index> first;
  std::vector<std::vector<double>> values;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    std::vector<double> key(static_cast<std::size_t>(x.cols()));
    for (Eigen::Index c = 0; c < x.cols(); ++c) key[static_cast<std::size_t>(c)] = x(i, c);
    auto [it, inserted] = index.emplace(std::move(key), first.size());
    if (inserted) {
      first.push_back(i);
      values.emplace_back();
    }
    values[it->second].push_back(y[i]);
  }
  Grouped g;
  const auto m = static_cast<Eigen::Index>(first.size());
  g.inputs.resize(m, x.cols());
  g.mean.resize(m);
  g.count.resize(m);
  g.sample_var = Eigen::VectorXd::Zero(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto& v = values[static_cast<std::size_t>(r)];
    g.inputs.row(r) = x.row(first[static_cast<std::size_t>(r)]);
    const Eigen::Map<const Eigen::VectorXd> vv(v.data(), static_cast<Eigen::Index>(v.size()));
    g.count[r] = static_cast<double>(v.size());
    g.mean[r] = vv.mean();
    if (v.size() > 1) g.sample_var[r] = (vv.array() - g.mean[r]).square().sum() / (vv.size() - 1.0);
  }
  return g;
}

}  // namespace

double digamma(double x) {
  double result = 0.0;
  while (x < 6.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double x2 = 1.0 / (x * x);
  return result + std::log(x) - 0.5 / x -
         x2 * (1.0 / 12.0 - x2 * (1.0 / 120.0 - x2 * (1.0 / 252.0 - x2 * (1.0 / 240.0 - x2 / 132.0))));
}

double trigamma(double x) {
  double result = 0.0;
  while (x < 6.0) {
    result += 1.0 / (x * x);
    x += 1.0;
  }
  const double x2 = 1.0 / (x * x);
  return result + 1.0 / x + 0.5 * x2 +
         (1.0 / x) * x2 * (1.0 / 6.0 - x2 * (1.0 / 30.0 - x2 * (1.0 / 42.0 - x2 / 30.0)));
}

HetGpEmulator HetGpEmulator::fit(const PointMatrix& inputs, const Eigen::VectorXd& responses, int n_continuous,
                                 const HyperPriors& priors, const HetGpSettings& settings) {
  if (inputs.rows() < 2) throw ContractError("fit_hetgp needs at least 2 observations");
  if (inputs.rows() != responses.size()) throw ContractError("response count must equal input count");
  if (!responses.allFinite()) throw ContractError("responses must be finite");

  HetGpState st;
  st.response_mean = responses.mean();
  const double sd = std::sqrt((responses.array() - st.response_mean).square().sum() /
                              std::max<double>(1.0, static_cast<double>(responses.size() - 1)));
  st.response_sd = sd > 0.0 ? sd : 1.0;
  const Eigen::VectorXd z = (responses.array() - st.response_mean) / st.response_sd;
  Grouped g = group_responses(inputs, z);
  const Eigen::Index m = g.mean.size();
  st.inputs = g.inputs;
  st.mean_response = g.mean;
  st.replicates = g.count;

  // Starting noise: pooled within-replicate variance when available.
  double pooled_ss = 0.0, pooled_df = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    pooled_ss += g.sample_var[i] * (g.count[i] - 1.0);
    pooled_df += g.count[i] - 1.0;
  }
  const double start_var = pooled_df > 0.0 ? std::max(pooled_ss / pooled_df, kVarianceFloor) : 0.1;
  Eigen::VectorXd delta2 = Eigen::VectorXd::Constant(m, start_var);

  // Degrees of freedom of each variance estimate; unreplicated inputs use a
  // single squared residual.
  Eigen::VectorXd dof(m);
  for (Eigen::Index i = 0; i < m; ++i) dof[i] = g.count[i] > 1.0 ? g.count[i] - 1.0 : 1.0;
  st.logvar_noise.resize(m);
  Eigen::VectorXd bias(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    st.logvar_noise[i] = trigamma(0.5 * dof[i]);
    bias[i] = digamma(0.5 * dof[i]) - std::log(0.5 * dof[i]);
  }

  FitSettings first = settings.fit;
  FitSettings warm = settings.fit;
  warm.restarts = 0;
  std::optional<KernelParams> mean_params, logvar_params;
  double previous = -std::numeric_limits<double>::infinity();
  HetGpEmulator em;
  const bool any_unreplicated = (g.count.array() < 2.0).any();

  for (int it = 0; it < settings.max_outer_iterations; ++it) {
    em.outer_iterations_ = it + 1;
    const Eigen::VectorXd noise = delta2.cwiseQuotient(g.count);
    const FitSettings& fs = it == 0 ? first : warm;
    mean_params = fit_gp_hyperparameters(g.inputs, n_continuous, g.mean, noise, priors, fs, mean_params);
    em.mean_gp_ = GpRegression::condition(g.inputs, g.mean, noise, *mean_params, fs.jitter);

    Eigen::VectorXd raw_var = g.sample_var;
    if (any_unreplicated) {
      const Eigen::VectorXd loo = em.mean_gp_.loo_residuals();
      for (Eigen::Index i = 0; i < m; ++i)
        if (g.count[i] < 2.0) raw_var[i] = loo[i] * loo[i];
    }
    Eigen::VectorXd targets(m);
    for (Eigen::Index i = 0; i < m; ++i) targets[i] = std::log(std::max(raw_var[i], kVarianceFloor)) - bias[i];
    st.logvar_offset = targets.mean();
    st.logvar_targets = targets.array() - st.logvar_offset;

    FitSettings lfs = fs;
    lfs.seed = mix_seed(fs.seed ^ 0x5bd1e995ULL);
    logvar_params =
        fit_gp_hyperparameters(g.inputs, n_continuous, st.logvar_targets, st.logvar_noise, priors, lfs, logvar_params);
    em.logvar_gp_ = GpRegression::condition(g.inputs, st.logvar_targets, st.logvar_noise, *logvar_params, lfs.jitter);
    const Eigen::VectorXd fitted = em.logvar_gp_.fitted_values();
    st.log_noise = fitted.array() + st.logvar_offset;
    delta2 = st.log_noise.array().exp().max(kVarianceFloor);

    const double lp = em.mean_gp_.log_marginal_likelihood() + priors.log_density(*mean_params) +
                      em.logvar_gp_.log_marginal_likelihood() + priors.log_density(*logvar_params);
    const bool done = std::abs(lp - previous) < settings.tolerance;
    previous = lp;
    if (done) break;
  }

  // Final mean GP at the converged noise.
  st.mean_params = *mean_params;
  st.logvar_params = *logvar_params;
  st.log_noise = delta2.array().log();
  HetGpEmulator out = condition(std::move(st), settings.fit.jitter);
  out.outer_iterations_ = em.outer_iterations_;
  out.log_posterior_ = previous;
  return out;
}

HetGpEmulator HetGpEmulator::condition(HetGpState state, const JitterPolicy& jitter) {
  const Eigen::Index m = state.inputs.rows();
  if (state.mean_response.size() != m || state.replicates.size() != m || state.log_noise.size() != m ||
      state.logvar_targets.size() != m || state.logvar_noise.size() != m)
    throw ContractError("HetGpState vectors disagree in length");
  HetGpEmulator em;
  const Eigen::VectorXd noise = state.log_noise.array().exp().matrix().cwiseQuotient(state.replicates);
  em.mean_gp_ = GpRegression::condition(state.inputs, state.mean_response, noise, state.mean_params, jitter);
  em.logvar_gp_ =
      GpRegression::condition(state.inputs, state.logvar_targets, state.logvar_noise, state.logvar_params, jitter);
  em.state_ = std::move(state);
  return em;
}

Prediction HetGpEmulator::predict_standardized(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  return mean_gp_.predict(x);
}

Prediction HetGpEmulator::predict_mean(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  const Prediction p = mean_gp_.predict(x);
  const double s = state_.response_sd;
  return {state_.response_mean + s * p.mean, s * s * p.variance};
}

void HetGpEmulator::predict_mean(const PointMatrix& x, Eigen::VectorXd& mean, Eigen::VectorXd& variance) const {
  mean_gp_.predict(x, mean, variance);
  const double s = state_.response_sd;
  mean = (state_.response_mean + s * mean.array()).matrix();
  variance *= s * s;
}

double HetGpEmulator::noise_variance(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  const double s = state_.response_sd;
  return s * s * std::exp(state_.logvar_offset + logvar_gp_.predict(x).mean);
}

void HetGpEmulator::noise_variance(const PointMatrix& x, Eigen::VectorXd& out) const {
  Eigen::VectorXd mean, var;
  logvar_gp_.predict(x, mean, var);
  const double s = state_.response_sd;
  out = (s * s) * (state_.logvar_offset + mean.array()).exp().matrix();
}

}  // namespace hmlse
