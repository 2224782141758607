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

#include <stdexcept>
#include <string>
#include <vector>

namespace hmlse {

/// Precondition violated by the caller.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A native input value lies outside its variable's range.
class RangeError : public std::out_of_range {
 public:
  RangeError(const std::string& variable, double value)
      : std::out_of_range("value " + std::to_string(value) + " out of range for variable '" +
                          variable + "'"),
        variable_(variable) {}
  const std::string& variable() const noexcept { return variable_; }

 private:
  std::string variable_;
};

/// Emulator fitting failed. Carries the best parameters seen so far
/// (log-scale hyperparameter vector) for diagnosis.
class FitError : public std::runtime_error {
 public:
  FitError(const std::string& what, std::vector<double> best_log_params = {},
           double best_objective = 0.0)
      : std::runtime_error(what),
        best_log_params_(std::move(best_log_params)),
        best_objective_(best_objective) {}
  const std::vector<double>& best_log_params() const noexcept { return best_log_params_; }
  double best_objective() const noexcept { return best_objective_; }

 private:
  std::vector<double> best_log_params_;
  double best_objective_;
};

class SimulatorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hmlse
