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

#include "hmlse/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>

#include "hmlse/errors.hpp"
#include "hmlse/random.hpp"

namespace hmlse {

CoverageReport interval_coverage(const HetGpEmulator& em, const PointMatrix& inputs, const Eigen::VectorXd& responses,
                                 double k_sd, double nominal) {
  if (inputs.rows() == 0) throw ContractError("interval_coverage needs validation points");
  if (inputs.rows() != responses.size()) throw ContractError("one response per validation input expected");
  if (!(k_sd > 0.0)) throw ContractError("k_sd must be positive");
  Eigen::VectorXd mean, var, noise;
  em.predict_mean(inputs, mean, var);
  em.noise_variance(inputs, noise);
  CoverageReport r;
  r.n_validation = static_cast<int>(inputs.rows());
  r.nominal = nominal;
  for (Eigen::Index i = 0; i < inputs.rows(); ++i)
    if (std::abs(responses[i] - mean[i]) <= k_sd * std::sqrt(var[i] + noise[i])) ++r.n_within;
  r.fraction = static_cast<double>(r.n_within) / r.n_validation;
  return r;
}

double rps_binary(const Eigen::VectorXd& probs, const std::vector<int>& outcomes) {
  if (static_cast<std::size_t>(probs.size()) != outcomes.size())
    throw ContractError("rps_binary: probabilities and outcomes differ in length");
  if (outcomes.empty()) throw ContractError("rps_binary needs at least one outcome");
  double s = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    const int y = outcomes[static_cast<std::size_t>(i)];
    if (!(p >= 0.0 && p <= 1.0)) throw ContractError("rps_binary: probability outside [0,1]");
    if (y != 0 && y != 1) throw ContractError("rps_binary: outcomes must be 0 or 1");
    s += (p - y) * (p - y);
  }
  return s / static_cast<double>(outcomes.size());
}

namespace {

// Gauss-Hermite rule for weight exp(-x^2) from the Jacobi matrix eigenproblem.
struct HermiteRule {
  Eigen::VectorXd nodes, weights;
  explicit HermiteRule(int n) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(k / 2.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    nodes = es.eigenvalues();
    weights = std::sqrt(M_PI) * es.eigenvectors().row(0).transpose().array().square();
  }
};

const HermiteRule& hermite() {
  static const HermiteRule rule(100);
  return rule;
}

}  // namespace

double predictive_probability(const Prediction& pred) {
  if (!(pred.variance >= 0.0) || std::isnan(pred.mean)) throw ContractError("predictive_probability: bad input");
  if (pred.variance == 0.0) return inverse_logit(pred.mean);
  const auto& gh = hermite();
  const double scale = std::sqrt(2.0 * pred.variance);
  double s = 0.0;
  for (Eigen::Index k = 0; k < gh.nodes.size(); ++k) s += gh.weights[k] * inverse_logit(pred.mean + scale * gh.nodes[k]);
  return std::clamp(s / std::sqrt(M_PI), 0.0, 1.0);
}

Eigen::VectorXd predictive_probabilities(const ClassifierEmulator& em, const PointMatrix& inputs) {
  Eigen::VectorXd mean, var;
  em.predict_logit(inputs, mean, var);
  Eigen::VectorXd p(inputs.rows());
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = predictive_probability({mean[i], var[i]});
  return p;
}

double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ContractError("empirical_quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw ContractError("quantile level outside [0,1]");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

RpsReference rps_reference(const ClassifierEmulator& em, const PointMatrix& inputs, int n_samples,
                           std::uint64_t seed) {
  if (n_samples < 1) throw ContractError("rps_reference needs n_samples >= 1");
  if (inputs.rows() == 0) throw ContractError("rps_reference needs validation inputs");
  Eigen::VectorXd mean, var;
  em.predict_logit(inputs, mean, var);
  Eigen::VectorXd probs(inputs.rows());
  for (Eigen::Index i = 0; i < probs.size(); ++i) probs[i] = predictive_probability({mean[i], var[i]});

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> scores(static_cast<std::size_t>(n_samples));
  std::vector<int> y(static_cast<std::size_t>(inputs.rows()));
  for (auto& score : scores) {
    for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
      const double f = mean[i] + std::sqrt(var[i]) * normal(rng);
      y[static_cast<std::size_t>(i)] = unif(rng) < inverse_logit(f) ? 1 : 0;
    }
    score = rps_binary(probs, y);
  }
  RpsReference ref;
  ref.n_samples = n_samples;
  ref.quantile_95 = empirical_quantile(scores, 0.95);
  for (double s : scores) ref.mean += s;
  ref.mean /= n_samples;
  return ref;
}

RpsReport rps_report(const ClassifierEmulator& em, const PointMatrix& inputs, const std::vector<int>& outcomes,
                     int n_samples, std::uint64_t seed) {
  RpsReport r;
  r.observed_score = rps_binary(predictive_probabilities(em, inputs), outcomes);
  r.reference_quantile_95 = rps_reference(em, inputs, n_samples, seed).quantile_95;
  r.pass = r.observed_score < r.reference_quantile_95;
  return r;
}

int cells_along(const DesignSpace& space, int var, int resolution) {
  return space.variables()[static_cast<std::size_t>(var)].kind == VariableKind::binary ? 2 : resolution;
}

int cell_of(const DesignSpace& space, int var, double u, int resolution) {
  if (space.variables()[static_cast<std::size_t>(var)].kind == VariableKind::binary) return u != 0.0 ? 1 : 0;
  return std::clamp(static_cast<int>(std::floor(u * resolution)), 0, resolution - 1);
}

std::vector<ProjectionGrid> projection_grids(const DesignSpace& space, const PointMatrix& candidates,
                                             const CandidateStatuses& status, int resolution) {
  if (candidates.rows() == 0) throw ContractError("projection_grids needs at least one candidate");
  if (candidates.rows() != status.size()) throw ContractError("status and candidate counts differ");
  if (resolution < 1) throw ContractError("grid resolution must be positive");
  const int d = space.dimension();
  std::vector<ProjectionGrid> grids;
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      ProjectionGrid g;
      g.var_i = i;
      g.var_j = j;
      g.cells_i = cells_along(space, i, resolution);
      g.cells_j = cells_along(space, j, resolution);
      const auto n_cells = static_cast<std::size_t>(g.cells_i * g.cells_j);
      g.count.assign(n_cells, 0);
      g.nroy.assign(n_cells, 0);
      g.min_impl.assign(n_cells, std::numeric_limits<double>::infinity());
      for (Eigen::Index r = 0; r < candidates.rows(); ++r) {
        const auto c = static_cast<std::size_t>(cell_of(space, i, candidates(r, i), resolution) * g.cells_j +
                                                cell_of(space, j, candidates(r, j), resolution));
        ++g.count[c];
        if (status.state[static_cast<std::size_t>(r)] != CandidateState::ruled_out) ++g.nroy[c];
        g.min_impl[c] = std::min(g.min_impl[c], status.impl_max[r]);
      }
      g.depth_log10.assign(n_cells, std::numeric_limits<double>::quiet_NaN());
      for (std::size_t c = 0; c < n_cells; ++c) {
        if (g.count[c] == 0) {
          g.min_impl[c] = std::numeric_limits<double>::quiet_NaN();
          continue;
        }
        g.min_impl[c] = std::clamp(g.min_impl[c], -kImplausibilityCutoff, kImplausibilityCutoff);
        const double prop = static_cast<double>(g.nroy[c]) / static_cast<double>(g.count[c]);
        g.depth_log10[c] = prop > 0.0 ? std::max(kDepthFloorLog10, std::log10(prop)) : kDepthFloorLog10;
      }
      grids.push_back(std::move(g));
    }
  }
  return grids;
}

std::vector<NroyHistogram> nroy_histograms(const DesignSpace& space, const PointMatrix& candidates,
                                           const CandidateStatuses& status, int bins) {
  if (candidates.rows() != status.size()) throw ContractError("status and candidate counts differ");
  if (bins < 1) throw ContractError("histogram needs at least one bin");
  std::vector<NroyHistogram> out;
  for (int v = 0; v < space.dimension(); ++v) {
    const auto& spec = space.variables()[static_cast<std::size_t>(v)];
    NroyHistogram h;
    h.var = v;
    const int nb = cells_along(space, v, bins);
    for (int b = 0; b <= nb; ++b) {
      if (spec.kind == VariableKind::binary)
        h.edges.push_back(b - 0.5);
      else
        h.edges.push_back(spec.lower + (spec.upper - spec.lower) * b / nb);
    }
    h.count.assign(static_cast<std::size_t>(nb), 0);
    h.nroy.assign(static_cast<std::size_t>(nb), 0);
    for (Eigen::Index r = 0; r < candidates.rows(); ++r) {
      const auto b = static_cast<std::size_t>(cell_of(space, v, candidates(r, v), bins));
      ++h.count[b];
      if (status.state[static_cast<std::size_t>(r)] != CandidateState::ruled_out) ++h.nroy[b];
    }
    std::vector<double> prop(static_cast<std::size_t>(nb), 0.0);
    for (std::size_t b = 0; b < prop.size(); ++b)
      if (h.count[b] > 0) prop[b] = static_cast<double>(h.nroy[b]) / static_cast<double>(h.count[b]);
    h.scale = *std::max_element(prop.begin(), prop.end());
    for (double p : prop) h.relative.push_back(h.scale > 0.0 ? p / h.scale : 0.0);
    out.push_back(std::move(h));
  }
  return out;
}

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_grids_csv(std::ostream& out, const DesignSpace& space, const std::vector<ProjectionGrid>& grids) {
  const auto& vars = space.variables();
  out << "var_i,var_j,cell_i,cell_j,min_impl,depth_log10,count\n";
  for (const auto& g : grids)
    for (int ci = 0; ci < g.cells_i; ++ci)
      for (int cj = 0; cj < g.cells_j; ++cj) {
        const auto c = static_cast<std::size_t>(ci * g.cells_j + cj);
        out << vars[static_cast<std::size_t>(g.var_i)].name << ',' << vars[static_cast<std::size_t>(g.var_j)].name
            << ',' << ci << ',' << cj << ',' << num(g.min_impl[c]) << ',' << num(g.depth_log10[c]) << ','
            << g.count[c] << '\n';
      }
}

void write_histograms_csv(std::ostream& out, const DesignSpace& space, const std::vector<NroyHistogram>& hists) {
  const auto& vars = space.variables();
  out << "var,bin,lower,upper,count,nroy,relative,absolute\n";
  for (const auto& h : hists)
    for (std::size_t b = 0; b < h.count.size(); ++b)
      out << vars[static_cast<std::size_t>(h.var)].name << ',' << b << ',' << num(h.edges[b]) << ','
          << num(h.edges[b + 1]) << ',' << h.count[b] << ',' << h.nroy[b] << ',' << num(h.relative[b]) << ','
          << num(h.relative[b] * h.scale) << '\n';
}

}  // namespace hmlse
