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

#include "hmlse/classifier.hpp"

#include <cmath>
#include <limits>
#include <map>

namespace hmlse {

namespace {

// log sigmoid(f), stable for large |f|.
double log_sigmoid(double f) { return f >= 0.0 ? -std::log1p(std::exp(-f)) : f - std::log1p(std::exp(f)); }

struct LikelihoodTerms {
  double log_lik = 0.0;
  Eigen::VectorXd d1, d2, d3;  // derivatives of log p(y|f)
};

LikelihoodTerms binomial_terms(const Eigen::VectorXd& f, const BinomialData& data) {
  const Eigen::Index n = f.size();
  LikelihoodTerms t;
  t.d1.resize(n);
  t.d2.resize(n);
  t.d3.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = data.successes[i];
    const double k = data.trials[i];
    const double p = inverse_logit(f[i]);
    t.log_lik += y * log_sigmoid(f[i]) + (k - y) * log_sigmoid(-f[i]);
    t.d1[i] = y - k * p;
    t.d2[i] = -k * p * (1.0 - p);
    t.d3[i] = -k * p * (1.0 - p) * (1.0 - 2.0 * p);
  }
  return t;
}

}  // namespace

BinomialData aggregate_labels(const PointMatrix& inputs, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(inputs.rows()) != labels.size())
    throw ContractError("label count must equal input count");
  std::map<std::vector<double>, Eigen::Index> seen;
  std::vector<Eigen::Index> first_row;
  std::vector<double> succ, trials;
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y != 0 && y != 1) throw ContractError("labels must be 0 or 1");
    std::vector<double> key(static_cast<std::size_t>(inputs.cols()));
    for (Eigen::Index c = 0; c < inputs.cols(); ++c) key[static_cast<std::size_t>(c)] = inputs(i, c);
    auto [it, inserted] = seen.emplace(std::move(key), static_cast<Eigen::Index>(first_row.size()));
    if (inserted) {
      first_row.push_back(i);
      succ.push_back(0.0);
      trials.push_back(0.0);
    }
    succ[static_cast<std::size_t>(it->second)] += y;
    trials[static_cast<std::size_t>(it->second)] += 1.0;
  }
  BinomialData d;
  const auto m = static_cast<Eigen::Index>(first_row.size());
  d.inputs.resize(m, inputs.cols());
  d.successes = Eigen::Map<Eigen::VectorXd>(succ.data(), m);
  d.trials = Eigen::Map<Eigen::VectorXd>(trials.data(), m);
  for (Eigen::Index r = 0; r < m; ++r) d.inputs.row(r) = inputs.row(first_row[static_cast<std::size_t>(r)]);
  return d;
}

LaplacePosterior laplace_mode(const Eigen::MatrixXd& K, const BinomialData& data) {
  const Eigen::Index n = K.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  LikelihoodTerms t = binomial_terms(f, data);
  double psi = t.log_lik;
  LaplacePosterior post;
  Eigen::LLT<Eigen::MatrixXd> llt;

  auto factor = [&](const Eigen::VectorXd& sw) {
    Eigen::MatrixXd B = sw.asDiagonal() * K * sw.asDiagonal();
    B += I;
    llt.compute(B);
    return llt.info() == Eigen::Success;
  };

  for (int it = 0; it < 200; ++it) {
    post.newton_iterations = it + 1;
    const Eigen::VectorXd w = -t.d2;
    const Eigen::VectorXd sw = w.cwiseSqrt();
    if (!factor(sw)) throw FitError("Laplace: I + sW K sW not positive definite");
    const Eigen::VectorXd b = w.cwiseProduct(f) + t.d1;
    const Eigen::VectorXd c = llt.matrixL().solve(sw.cwiseProduct(K * b));
    const Eigen::VectorXd a_new = b - sw.cwiseProduct(llt.matrixU().solve(c));

    // Damped step: the objective is concave but a full Newton step can overshoot.
    double step = 1.0;
    Eigen::VectorXd a_try, f_try;
    LikelihoodTerms t_try;
    double psi_try = -std::numeric_limits<double>::infinity();
    for (int ls = 0; ls < 30; ++ls) {
      a_try = a + step * (a_new - a);
      f_try = K * a_try;
      t_try = binomial_terms(f_try, data);
      psi_try = -0.5 * a_try.dot(f_try) + t_try.log_lik;
      if (psi_try >= psi - 1e-12 * (1.0 + std::abs(psi))) break;
      step *= 0.5;
    }
    const double df = (f_try - f).lpNorm<Eigen::Infinity>();
    const double dpsi = psi_try - psi;
    a = a_try;
    f = f_try;
    t = std::move(t_try);
    psi = psi_try;
    if (df < 1e-10 || (std::abs(dpsi) < 1e-15 * (1.0 + std::abs(psi)) && df < 1e-7)) break;
  }

  post.mode = f;
  post.dlog_lik = t.d1;
  post.sqrt_w = (-t.d2).cwiseSqrt();
  if (!factor(post.sqrt_w)) throw FitError("Laplace: I + sW K sW not positive definite");
  post.chol_b = llt.matrixL();
  const double logdet = post.chol_b.diagonal().array().log().sum();
  post.log_marginal = -0.5 * t.d1.dot(f) + t.log_lik - logdet;
  return post;
}

double laplace_log_marginal(const KernelWorkspace& ws, const BinomialData& data, const KernelParams& params,
                            double jitter_relative, Eigen::VectorXd* gradient) {
  const Eigen::MatrixXd K_raw = ws.gram(params);
  const double jitter = jitter_relative * params.alpha2;
  Eigen::MatrixXd K = K_raw;
  K.diagonal().array() += jitter;

  LaplacePosterior post;
  try {
    post = laplace_mode(K, data);
  } catch (const FitError&) {
    return -std::numeric_limits<double>::infinity();
  }
  if (!std::isfinite(post.log_marginal)) return post.log_marginal;
  if (!gradient) return post.log_marginal;

  // Explicit term plus the implicit dependence of the mode on the hyperparameters.
  const auto L = post.chol_b.triangularView<Eigen::Lower>();
  const Eigen::VectorXd& sw = post.sqrt_w;
  const Eigen::MatrixXd M = L.solve(Eigen::MatrixXd(sw.asDiagonal()));  // L^-1 sW
  const Eigen::MatrixXd Z = M.transpose() * M;                          // sW B^-1 sW
  const Eigen::MatrixXd C = M * K;
  LikelihoodTerms t = binomial_terms(post.mode, data);
  // d(-1/2 log|K^-1 + W|)/df = 1/2 diag((K^-1 + W)^-1) * d3, since dW/df = -d3.
  const Eigen::VectorXd s2 =
      0.5 * (K.diagonal() - C.colwise().squaredNorm().transpose()).cwiseProduct(t.d3);
  const Eigen::VectorXd& a = post.dlog_lik;

  gradient->resize(params.n_params());
  for (int k = 0; k < params.n_params(); ++k) {
    const Eigen::MatrixXd dK = k == 0 ? K : ws.gram_derivative(params, K_raw, k);
    const double s1 = 0.5 * a.dot(dK * a) - 0.5 * Z.cwiseProduct(dK).sum();
    const Eigen::VectorXd b = dK * a;
    const Eigen::VectorXd s3 = b - K * (Z * b);
    (*gradient)[k] = s1 + s2.dot(s3);
  }
  return post.log_marginal;
}

double laplace_log_posterior(const KernelWorkspace& ws, const BinomialData& data, const KernelParams& params,
                             const HyperPriors& priors, double jitter_relative, Eigen::VectorXd* gradient) {
  double v = laplace_log_marginal(ws, data, params, jitter_relative, gradient);
  if (!std::isfinite(v)) return v;
  v += priors.log_density(params);
  if (gradient) *gradient += priors.log_density_gradient(params);
  return v;
}

ClassifierEmulator ClassifierEmulator::fit(const PointMatrix& inputs, const std::vector<int>& labels,
                                           int n_continuous, const HyperPriors& priors,
                                           const FitSettings& settings) {
  if (inputs.rows() < 2) throw ContractError("fit_classifier needs at least 2 observations");
  BinomialData data = aggregate_labels(inputs, labels);
  const int n_binary = static_cast<int>(inputs.cols()) - n_continuous;
  const KernelWorkspace ws(data.inputs, n_continuous);
  const auto objective = negated_with_jitter(
      [&](const KernelParams& p, double rel, Eigen::VectorXd* g) {
        return laplace_log_posterior(ws, data, p, priors, rel, g);
      },
      n_continuous, settings.jitter);
  const auto best = multi_start_minimize(objective, restart_points(priors, n_continuous, n_binary, settings, {}),
                                         settings.minimize);
  ClassifierEmulator em = condition(std::move(data), KernelParams::from_log(best.theta, n_continuous), settings.jitter);
  em.log_posterior_ = -best.value;
  return em;
}

ClassifierEmulator ClassifierEmulator::condition(BinomialData data, KernelParams params, const JitterPolicy& jitter) {
  params.validate();
  if (data.inputs.rows() != data.successes.size() || data.trials.size() != data.successes.size())
    throw ContractError("classifier data sizes disagree");
  if (data.inputs.cols() != params.n_params() - 1) throw ContractError("classifier kernel dimension mismatch");
  ClassifierEmulator em;
  em.params_ = std::move(params);
  em.data_ = std::move(data);
  const Eigen::MatrixXd K_raw = gram(em.params_, em.data_.inputs);
  for (double rel = jitter.initial_relative; rel <= jitter.max_relative * (1 + 1e-12); rel *= 10.0) {
    em.jitter_ = rel * em.params_.alpha2;
    Eigen::MatrixXd K = K_raw;
    K.diagonal().array() += em.jitter_;
    try {
      em.post_ = laplace_mode(K, em.data_);
      if (std::isfinite(em.post_.log_marginal)) {
        em.log_posterior_ = em.post_.log_marginal;
        return em;
      }
    } catch (const FitError&) {
    }
  }
  throw FitError("classifier posterior could not be factorized at the jitter cap");
}

Prediction ClassifierEmulator::predict_logit(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  Eigen::VectorXd m, v;
  predict_logit(PointMatrix(x), m, v);
  return {m[0], v[0]};
}

void ClassifierEmulator::predict_logit(const PointMatrix& x, Eigen::VectorXd& mean,
                                       Eigen::VectorXd& variance) const {
  const Eigen::Index m = x.rows();
  mean.resize(m);
  variance.resize(m);
  const auto L = post_.chol_b.triangularView<Eigen::Lower>();
  for (Eigen::Index start = 0; start < m; start += kPredictBlock) {
    const Eigen::Index len = std::min(kPredictBlock, m - start);
    const Eigen::MatrixXd ks = cross_covariance(params_, data_.inputs, x.middleRows(start, len));
    mean.segment(start, len) = ks.transpose() * post_.dlog_lik;
    const Eigen::MatrixXd v = L.solve(post_.sqrt_w.asDiagonal() * ks);
    variance.segment(start, len) =
        (params_.alpha2 - v.colwise().squaredNorm().transpose().array()).cwiseMax(0.0).matrix();
  }
}

}  // namespace hmlse
