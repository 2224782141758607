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

#include "hmlse/gp_regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hmlse {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

}  // namespace

GpRegression GpRegression::condition(PointMatrix x, Eigen::VectorXd y, Eigen::VectorXd noise,
                                     KernelParams params, const JitterPolicy& jitter) {
  params.validate();
  if (x.rows() != y.size() || noise.size() != y.size())
    throw ContractError("GpRegression: inputs, targets and noise must have equal length");
  if (x.cols() != params.n_params() - 1) throw ContractError("GpRegression: kernel dimension mismatch");
  GpRegression gp;
  gp.x_ = std::move(x);
  gp.y_ = std::move(y);
  gp.noise_ = std::move(noise);
  gp.params_ = std::move(params);
  const Eigen::MatrixXd K = gram(gp.params_, gp.x_);
  for (double rel = jitter.initial_relative; rel <= jitter.max_relative * (1 + 1e-12); rel *= 10.0) {
    gp.jitter_ = rel * gp.params_.alpha2;
    Eigen::MatrixXd A = K;
    A.diagonal() += gp.noise_ + Eigen::VectorXd::Constant(A.rows(), gp.jitter_);
    gp.llt_.compute(A);
    if (gp.llt_.info() == Eigen::Success) {
      gp.weights_ = gp.llt_.solve(gp.y_);
      const double logdet = gp.llt_.matrixLLT().diagonal().array().log().sum();
      gp.log_marginal_ = -0.5 * gp.y_.dot(gp.weights_) - logdet - 0.5 * gp.y_.size() * kLog2Pi;
      return gp;
    }
  }
  throw FitError("GP covariance not positive definite at the jitter cap",
                 std::vector<double>(gp.params_.to_log().data(), gp.params_.to_log().data() + gp.params_.n_params()));
}

Prediction GpRegression::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  Eigen::VectorXd m, v;
  predict(PointMatrix(x), m, v);
  return {m[0], v[0]};
}

void GpRegression::predict(const PointMatrix& x, Eigen::VectorXd& mean, Eigen::VectorXd& variance) const {
  const Eigen::Index m = x.rows();
  mean.resize(m);
  variance.resize(m);
  for (Eigen::Index start = 0; start < m; start += kPredictBlock) {
    const Eigen::Index len = std::min(kPredictBlock, m - start);
    const Eigen::MatrixXd ks = cross_covariance(params_, x_, x.middleRows(start, len));  // n x len
    mean.segment(start, len) = ks.transpose() * weights_;
    const Eigen::MatrixXd v = llt_.matrixL().solve(ks);
    variance.segment(start, len) =
        (params_.alpha2 - v.colwise().squaredNorm().transpose().array()).cwiseMax(0.0).matrix();
  }
}

Eigen::VectorXd GpRegression::loo_residuals() const {
  const Eigen::MatrixXd inv = llt_.solve(Eigen::MatrixXd::Identity(y_.size(), y_.size()));
  return weights_.array() / inv.diagonal().array();
}

Eigen::VectorXd GpRegression::fitted_values() const {
  return y_ - (noise_.array() + jitter_).matrix().cwiseProduct(weights_);
}

double gp_log_marginal(const KernelWorkspace& ws, const Eigen::VectorXd& y, const Eigen::VectorXd& noise,
                       const KernelParams& params, double jitter_relative, Eigen::VectorXd* gradient) {
  const Eigen::Index n = y.size();
  const Eigen::MatrixXd K = ws.gram(params);
  const double jitter = jitter_relative * params.alpha2;
  Eigen::MatrixXd A = K;
  A.diagonal() += noise + Eigen::VectorXd::Constant(n, jitter);
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  const Eigen::VectorXd w = llt.solve(y);
  const double logdet = llt.matrixLLT().diagonal().array().log().sum();
  const double value = -0.5 * y.dot(w) - logdet - 0.5 * n * kLog2Pi;
  if (gradient) {
    // d/dtheta = 1/2 tr((w w^T - A^-1) dA/dtheta)
    Eigen::MatrixXd Q = -llt.solve(Eigen::MatrixXd::Identity(n, n));
    Q.noalias() += w * w.transpose();
    gradient->resize(params.n_params());
    for (int k = 0; k < params.n_params(); ++k) {
      double g = 0.5 * Q.cwiseProduct(ws.gram_derivative(params, K, k)).sum();
      if (k == 0) g += 0.5 * jitter * Q.trace();
      (*gradient)[k] = g;
    }
  }
  return value;
}

double gp_log_posterior(const KernelWorkspace& ws, const Eigen::VectorXd& y, const Eigen::VectorXd& noise,
                        const KernelParams& params, const HyperPriors& priors, double jitter_relative,
                        Eigen::VectorXd* gradient) {
  double v = gp_log_marginal(ws, y, noise, params, jitter_relative, gradient);
  if (!std::isfinite(v)) return v;
  v += priors.log_density(params);
  if (gradient) *gradient += priors.log_density_gradient(params);
  return v;
}

MultiStartResult multi_start_minimize(const Objective& objective, const std::vector<Eigen::VectorXd>& starts,
                                      const MinimizeSettings& settings) {
  MultiStartResult best;
  best.value = std::numeric_limits<double>::infinity();
  bool any_converged = false;
  for (const auto& x0 : starts) {
    const MinimizeResult r = minimize_bfgs(objective, x0, settings);
    if (!std::isfinite(r.value)) continue;
    any_converged = any_converged || r.converged;
    if (r.value < best.value || (r.value == best.value && lex_less(r.x, best.theta))) {
      best.value = r.value;
      best.theta = r.x;
    }
  }
  if (best.theta.size() == 0) throw FitError("no optimizer restart reached a finite log posterior");
  if (!any_converged)
    throw FitError("hyperparameter optimization did not converge",
                   std::vector<double>(best.theta.data(), best.theta.data() + best.theta.size()), -best.value);
  return best;
}

std::vector<Eigen::VectorXd> restart_points(const HyperPriors& priors, int n_continuous, int n_binary,
                                            const FitSettings& settings,
                                            const std::optional<KernelParams>& warm_start) {
  Rng rng(settings.seed);
  std::vector<Eigen::VectorXd> starts;
  for (int r = 0; r < settings.restarts; ++r) starts.push_back(priors.sample(n_continuous, n_binary, rng).to_log());
  if (warm_start) starts.push_back(warm_start->to_log());
  if (starts.empty()) starts.push_back(KernelParams::defaults(n_continuous, n_binary).to_log());
  return starts;
}

Objective negated_with_jitter(
    std::function<double(const KernelParams&, double, Eigen::VectorXd*)> log_posterior, int n_continuous,
    const JitterPolicy& jitter) {
  return [log_posterior = std::move(log_posterior), n_continuous, jitter](const Eigen::VectorXd& theta,
                                                                            Eigen::VectorXd& grad) {
    const KernelParams p = KernelParams::from_log(theta, n_continuous);
    for (double rel = jitter.initial_relative; rel <= jitter.max_relative * (1 + 1e-12); rel *= 10.0) {
      const double v = log_posterior(p, rel, &grad);
      if (std::isfinite(v)) {
        grad = -grad;
        return -v;
      }
    }
    grad.setZero(theta.size());
    return std::numeric_limits<double>::infinity();
  };
}

KernelParams fit_gp_hyperparameters(const PointMatrix& x, int n_continuous, const Eigen::VectorXd& y,
                                    const Eigen::VectorXd& noise, const HyperPriors& priors,
                                    const FitSettings& settings, const std::optional<KernelParams>& warm_start) {
  const int n_binary = static_cast<int>(x.cols()) - n_continuous;
  const KernelWorkspace ws(x, n_continuous);
  const auto objective = negated_with_jitter(
      [&](const KernelParams& p, double rel, Eigen::VectorXd* g) {
        return gp_log_posterior(ws, y, noise, p, priors, rel, g);
      },
      n_continuous, settings.jitter);
  const auto best = multi_start_minimize(
      objective, restart_points(priors, n_continuous, n_binary, settings, warm_start), settings.minimize);
  return KernelParams::from_log(best.theta, n_continuous);
}

}  // namespace hmlse
