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

#include <cmath>
#include <span>

#include "hmlse/errors.hpp"

namespace hmlse {

/// Predictive mean and variance of a latent quantity (logit probability or
/// mean response).
struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

inline double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ContractError("logit needs p in (0,1)");
  return std::log(p / (1.0 - p));
}

inline double inverse_logit(double f) {
  return f >= 0.0 ? 1.0 / (1.0 + std::exp(-f)) : std::exp(f) / (1.0 + std::exp(f));
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / M_SQRT2); }

/// P(latent < threshold) under the normal predictive. A zero variance gives
/// the 0/1 step (mean exactly at the threshold counts as not below).
inline double prob_below(const Prediction& pred, double threshold) {
  if (std::isnan(pred.mean) || std::isnan(pred.variance) || pred.variance < 0.0)
    throw ContractError("prob_below: invalid prediction");
  if (pred.variance == 0.0) return pred.mean < threshold ? 1.0 : 0.0;
  return normal_cdf((threshold - pred.mean) / std::sqrt(pred.variance));
}

/// Joint probability of independent criteria.
inline double joint_probability(std::span<const double> probs) {
  double p = 1.0;
  for (double q : probs) p *= q;
  return p;
}

}  // namespace hmlse
