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

#include "hmlse/optimize.hpp"

#include <cmath>
#include <limits>

namespace hmlse {

namespace {

// Gradient with components that push against an active bound removed.
Eigen::VectorXd projected_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                   const MinimizeSettings& s) {
  Eigen::VectorXd pg = g;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] <= s.lower_bound && g[i] > 0.0) pg[i] = 0.0;
    if (x[i] >= s.upper_bound && g[i] < 0.0) pg[i] = 0.0;
  }
  return pg;
}

}  // namespace

MinimizeResult minimize_bfgs(const Objective& f, Eigen::VectorXd x0, const MinimizeSettings& s) {
  const Eigen::Index n = x0.size();
  auto clamp = [&](Eigen::VectorXd v) { return v.cwiseMax(s.lower_bound).cwiseMin(s.upper_bound).eval(); };

  MinimizeResult res;
  res.x = clamp(std::move(x0));
  Eigen::VectorXd g(n);
  res.value = f(res.x, g);
  res.evaluations = 1;
  if (!std::isfinite(res.value)) return res;

  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);  // inverse Hessian estimate
  Eigen::VectorXd g_new(n);
  for (res.iterations = 0; res.iterations < s.max_iterations; ++res.iterations) {
    const Eigen::VectorXd pg = projected_gradient(res.x, g, s);
    if (pg.lpNorm<Eigen::Infinity>() < s.gradient_tolerance) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd dir = -H * pg;
    if (dir.dot(pg) >= 0.0) {
      H.setIdentity();
      dir = -pg;
    }
    // Cap the first trial step so log-parameters move at most 2 units.
    const double max_step = dir.lpNorm<Eigen::Infinity>();
    double step = max_step > 2.0 ? 2.0 / max_step : 1.0;

    Eigen::VectorXd x_new;
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      x_new = clamp(res.x + step * dir);
      f_new = f(x_new, g_new);
      ++res.evaluations;
      if (std::isfinite(f_new) && f_new <= res.value + 1e-4 * pg.dot(x_new - res.x)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // A failed search from a steepest-descent direction means no progress is possible.
      if (H.isIdentity()) {
        res.converged = pg.lpNorm<Eigen::Infinity>() < 1e3 * s.gradient_tolerance;
        break;
      }
      H.setIdentity();
      continue;
    }

    const Eigen::VectorXd sk = x_new - res.x;
    const Eigen::VectorXd yk = g_new - g;
    const double decrease = res.value - f_new;
    res.x = x_new;
    g = g_new;
    const double f_old = res.value;
    res.value = f_new;
    if (decrease <= s.relative_tolerance * (1.0 + std::abs(f_old))) {
      res.converged = true;
      ++res.iterations;
      break;
    }
    const double sy = sk.dot(yk);
    if (sy > 1e-12 * sk.norm() * yk.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
      H = (I - rho * sk * yk.transpose()) * H * (I - rho * yk * sk.transpose()) + rho * sk * sk.transpose();
    }
  }
  return res;
}

}  // namespace hmlse
