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

#include <random>

#include "doctest.h"

#include "hmlse/kernel.hpp"
#include "hmlse/random.hpp"

using namespace hmlse;

namespace {

PointMatrix random_mixed_points(int n, int nc, int nb, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PointMatrix x(n, nc + nb);
  for (int i = 0; i < n; ++i) {
    for (int d = 0; d < nc; ++d) x(i, d) = u(rng);
    for (int j = 0; j < nb; ++j) x(i, nc + j) = u(rng) < 0.5 ? 0.0 : 1.0;
  }
  return x;
}

}  // namespace

TEST_SUITE("kernel") {
  TEST_CASE("unit lengthscale distance and unit binary flip both give exp(-1)") {
    KernelParams p = KernelParams::defaults(2, 1);
    Eigen::RowVectorXd a(3), b(3);
    a << 0.0, 0.0, 0.0;
    b << 1.0, 0.0, 0.0;
    CHECK(std::abs(kernel_eval(p, a, b) - std::exp(-1.0)) < 1e-12);
    b << 0.0, 0.0, 1.0;
    CHECK(std::abs(kernel_eval(p, a, b) - std::exp(-1.0)) < 1e-12);
    p.alpha2 = 2.5;
    CHECK(std::abs(kernel_eval(p, a, a) - 2.5) < 1e-12);
  }

  TEST_CASE("explicit formula on a mixed pair") {
    KernelParams p;
    p.alpha2 = 0.7;
    p.lengthscales = Eigen::Vector2d(0.5, 2.0);
    p.binary_corr = Eigen::Vector2d(0.3, 1.1);
    Eigen::RowVectorXd a(4), b(4);
    a << 0.1, 0.9, 1.0, 0.0;
    b << 0.4, 0.2, 1.0, 1.0;
    const double s = 0.3 * 0.3 / 0.25 + 0.7 * 0.7 / 4.0 + 1.1;
    CHECK(std::abs(kernel_eval(p, a, b) - 0.7 * std::exp(-s)) < 1e-14);
  }

  TEST_CASE("Gram matrix on 50 random mixed points is positive semi-definite") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      Rng rng(seed);
      KernelParams p;
      p.alpha2 = std::uniform_real_distribution<double>(0.1, 5.0)(rng);
      p.lengthscales = (Eigen::VectorXd::Random(7).array() * 0.5 + 1.0).matrix();
      p.binary_corr = Eigen::VectorXd::Constant(1, 0.8);
      const auto x = random_mixed_points(50, 7, 1, seed);
      const Eigen::MatrixXd K = gram(p, x);
      CHECK((K - K.transpose()).cwiseAbs().maxCoeff() < 1e-14);
      const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(K).eigenvalues().minCoeff();
      CHECK(min_eig >= -1e-8 * p.alpha2);
    }
  }

  TEST_CASE("log-parameter round trip and validation") {
    KernelParams p;
    p.alpha2 = 1.7;
    p.lengthscales = Eigen::Vector3d(0.2, 1.0, 3.0);
    p.binary_corr = Eigen::VectorXd::Constant(1, 0.5);
    const auto q = KernelParams::from_log(p.to_log(), 3);
    CHECK(std::abs(q.alpha2 - p.alpha2) < 1e-14);
    CHECK((q.lengthscales - p.lengthscales).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(std::abs(q.binary_corr[0] - 0.5) < 1e-15);
    p.alpha2 = -1.0;
    CHECK_THROWS_AS(p.validate(), ContractError);
  }

  TEST_CASE("workspace Gram matches direct evaluation and its derivatives match finite differences") {
    const auto x = random_mixed_points(12, 3, 1, 8);
    KernelParams p;
    p.alpha2 = 1.3;
    p.lengthscales = Eigen::Vector3d(0.4, 0.9, 1.6);
    p.binary_corr = Eigen::VectorXd::Constant(1, 0.6);
    const KernelWorkspace ws(x, 3);
    const Eigen::MatrixXd K = ws.gram(p);
    CHECK((K - gram(p, x)).cwiseAbs().maxCoeff() < 1e-14);
    const Eigen::VectorXd theta = p.to_log();
    for (int k = 0; k < theta.size(); ++k) {
      Eigen::VectorXd a = theta, b = theta;
      a[k] += 1e-6;
      b[k] -= 1e-6;
      const Eigen::MatrixXd fd =
          (ws.gram(KernelParams::from_log(a, 3)) - ws.gram(KernelParams::from_log(b, 3))) / 2e-6;
      CHECK((ws.gram_derivative(p, K, k) - fd).cwiseAbs().maxCoeff() < 1e-7);
    }
  }
}
