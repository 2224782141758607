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

#include <functional>

#include <Eigen/Dense>

namespace hmlse {

/// Objective returning f(x) and writing df/dx into the second argument.
/// Returning a non-finite value marks x infeasible.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct MinimizeSettings {
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;
  double relative_tolerance = 1e-11;
  double lower_bound = -9.0;  // box applied to every coordinate
  double upper_bound = 6.0;
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Quasi-Newton (BFGS) minimization with a projected backtracking line
/// search inside a coordinate box.
MinimizeResult minimize_bfgs(const Objective& f, Eigen::VectorXd x0, const MinimizeSettings& settings);

}  // namespace hmlse
