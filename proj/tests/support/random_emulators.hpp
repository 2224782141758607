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
#include <random>
#include <vector>

#include "hmlse/matcher.hpp"
#include "hmlse/random.hpp"

namespace hmlse::testing {

inline KernelParams random_params(int nc, int nb, Rng& rng) {
  std::uniform_real_distribution<double> u(0.3, 1.5);
  KernelParams p;
  p.alpha2 = u(rng) * 3.0;
  p.lengthscales.resize(nc);
  for (int i = 0; i < nc; ++i) p.lengthscales[i] = u(rng);
  p.binary_corr = Eigen::VectorXd::Constant(nb, 0.5);
  return p;
}

/// Emulators conditioned on random data, standing in for one wave's fits.
inline std::vector<CriterionEmulator> random_emulators(const DesignSpace& space, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto pts = latin_hypercube(space, 30, seed);
  BinomialData d;
  d.inputs = pack(pts);
  d.trials = Eigen::VectorXd::Constant(30, 2.0);
  d.successes.resize(30);
  for (int i = 0; i < 30; ++i) d.successes[i] = std::floor(3.0 * u(rng) * d.inputs(i, 0));
  auto cls = ClassifierEmulator::condition(d, random_params(space.n_continuous(), space.n_binary(), rng));

  HetGpState s;
  s.inputs = pack(pts);
  s.mean_response.resize(30);
  for (int i = 0; i < 30; ++i) s.mean_response[i] = 3.0 * (s.inputs(i, 1) - 0.5) + 0.3 * (u(rng) - 0.5);
  s.replicates = Eigen::VectorXd::Constant(30, 2.0);
  s.log_noise = Eigen::VectorXd::Constant(30, std::log(0.05));
  s.logvar_targets = Eigen::VectorXd::Zero(30);
  s.logvar_noise = Eigen::VectorXd::Ones(30);
  s.response_mean = 15.0;
  s.response_sd = 4.0;
  s.mean_params = random_params(space.n_continuous(), space.n_binary(), rng);
  s.logvar_params = random_params(space.n_continuous(), space.n_binary(), rng);
  return {cls, HetGpEmulator::condition(s)};
}

}  // namespace hmlse::testing
