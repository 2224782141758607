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

#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"

#include "hmlse/diagnostics.hpp"
#include "hmlse/errors.hpp"
#include "hmlse/random.hpp"

using namespace hmlse;

namespace {

HetGpEmulator toy_hetgp() {
  Rng rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  const int m = 60, reps = 2;
  PointMatrix x(m * reps, 1);
  Eigen::VectorXd y(m * reps);
  for (int i = 0; i < m; ++i) {
    const double a = (i + u(rng)) / m;
    for (int r = 0; r < reps; ++r) {
      x(i * reps + r, 0) = a;
      y[i * reps + r] = 5.0 + 2.0 * std::sin(3.0 * a) + (0.1 + 0.5 * a) * z(rng);
    }
  }
  HetGpSettings hs;
  hs.fit.seed = 4;
  hs.fit.restarts = 2;
  return HetGpEmulator::fit(x, y, 1, HyperPriors{}, hs);
}

ClassifierEmulator toy_classifier() {
  BinomialData data;
  data.inputs = PointMatrix(8, 1);
  data.inputs << 0.0, 0.15, 0.3, 0.45, 0.6, 0.75, 0.9, 1.0;
  data.successes = (Eigen::VectorXd(8) << 0, 0, 1, 0, 1, 2, 2, 2).finished();
  data.trials = Eigen::VectorXd::Constant(8, 2.0);
  KernelParams p;
  p.alpha2 = 2.0;
  p.lengthscales = Eigen::VectorXd::Constant(1, 0.3);
  p.binary_corr.resize(0);
  return ClassifierEmulator::condition(data, p);
}

PointMatrix uniform_column(int n, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PointMatrix x(n, 1);
  for (int i = 0; i < n; ++i) x(i, 0) = u(rng);
  return x;
}

double sigmoid(double f) { return 1.0 / (1.0 + std::exp(-f)); }

// Trapezoid integral of sigmoid(f) N(f; m, v) over m +- 12 sd.
double numeric_predictive(double m, double v) {
  const double sd = std::sqrt(v);
  const int n = 20000;
  const double a = m - 12.0 * sd, h = 24.0 * sd / n;
  double s = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double f = a + k * h;
    const double w = (k == 0 || k == n) ? 0.5 : 1.0;
    s += w * sigmoid(f) * std::exp(-0.5 * (f - m) * (f - m) / v) / (sd * std::sqrt(2.0 * M_PI));
  }
  return s * h;
}

struct RandomStatus {
  PointMatrix candidates;
  CandidateStatuses status;
};

RandomStatus random_status(const DesignSpace& space, int n, std::uint64_t seed) {
  const auto pts = latin_hypercube(space, n, seed);
  RandomStatus r{pack(pts), CandidateStatuses::all_active(n, 2)};
  Rng rng(seed + 1);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  for (int i = 0; i < n; ++i) {
    const double v = u(rng);
    r.status.impl_max[i] = v;
    r.status.state[static_cast<std::size_t>(i)] =
        v > 3.0 ? CandidateState::ruled_out : (v < -3.0 ? CandidateState::ruled_in : CandidateState::active);
  }
  return r;
}

}  // namespace

TEST_SUITE("diagnostics") {
  TEST_CASE("coverage count matches a point-by-point recount") {
    const auto em = toy_hetgp();
    const auto x = uniform_column(300, 3);
    Rng rng(5);
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::VectorXd y(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) y[i] = 5.0 + 2.0 * std::sin(3.0 * x(i, 0)) + 0.6 * z(rng);
    const auto rep = interval_coverage(em, x, y);
    int within = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const Prediction p = em.predict_mean(x.row(i));
      const double sd = std::sqrt(p.variance + em.noise_variance(x.row(i)));
      if (std::abs(y[i] - p.mean) <= 2.0 * sd) ++within;
    }
    CHECK(rep.n_validation == 300);
    CHECK(rep.n_within == within);
    CHECK(rep.fraction == doctest::Approx(within / 300.0));
    CHECK(rep.nominal == 0.9545);
  }

  TEST_CASE("coverage of data drawn from the emulator is close to nominal") {
    const auto em = toy_hetgp();
    const auto x = uniform_column(10000, 8);
    Eigen::VectorXd mean, var, noise;
    em.predict_mean(x, mean, var);
    em.noise_variance(x, noise);
    Rng rng(9);
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::VectorXd y(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) y[i] = mean[i] + std::sqrt(var[i] + noise[i]) * z(rng);
    const auto rep = interval_coverage(em, x, y);
    CHECK(rep.fraction >= 0.94);
    CHECK(rep.fraction <= 0.97);
  }

  TEST_CASE("ranked probability score values and propriety") {
    CHECK(rps_binary(Eigen::Vector2d(0.2, 0.7), {0, 1}) == doctest::Approx(0.065));
    CHECK(rps_binary(Eigen::Vector2d(1.0, 0.0), {1, 0}) == 0.0);
    CHECK_THROWS_AS(rps_binary(Eigen::Vector2d(0.2, 1.2), {0, 1}), ContractError);
    CHECK_THROWS_AS(rps_binary(Eigen::Vector2d(0.2, 0.3), {0, 2}), ContractError);
    std::vector<int> y(10, 0);
    y[0] = y[4] = y[7] = 1;
    double best = 1e9, best_q = -1.0;
    for (int k = 0; k <= 100; ++k) {
      const double q = k / 100.0;
      const double s = rps_binary(Eigen::VectorXd::Constant(10, q), y);
      if (s < best) best = s, best_q = q;
    }
    CHECK(best_q == doctest::Approx(0.3));
  }

  TEST_CASE("predictive probability matches numeric integration") {
    for (const auto& [m, v] : std::vector<std::pair<double, double>>{{0.0, 1.0}, {1.5, 0.3}, {-2.0, 4.0}, {3.0, 9.0}, {0.4, 1e-4}})
      CHECK(std::abs(predictive_probability({m, v}) - numeric_predictive(m, v)) < 1e-6);
    CHECK(predictive_probability({0.7, 0.0}) == doctest::Approx(sigmoid(0.7)));
  }

  TEST_CASE("empirical quantile interpolates between order statistics") {
    CHECK(empirical_quantile({4, 1, 3, 2}, 0.5) == doctest::Approx(2.5));
    std::vector<double> v;
    for (int i = 20; i >= 1; --i) v.push_back(i);
    CHECK(empirical_quantile(v, 0.95) == doctest::Approx(19.05));
    CHECK(empirical_quantile(v, 0.0) == 1.0);
    CHECK(empirical_quantile(v, 1.0) == 20.0);
    CHECK_THROWS_AS(empirical_quantile({}, 0.5), ContractError);
  }

  TEST_CASE("outcomes drawn from the classifier pass the score test at about the nominal rate") {
    const auto em = toy_classifier();
    const auto x = uniform_column(200, 21);
    Eigen::VectorXd mean, var;
    em.predict_logit(x, mean, var);
    Rng rng(33);
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int passes = 0;
    const int trials = 50;
    for (int t = 0; t < trials; ++t) {
      std::vector<int> y;
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        y.push_back(u(rng) < sigmoid(mean[i] + std::sqrt(var[i]) * z(rng)) ? 1 : 0);
      if (rps_report(em, x, y, 1000, derive_seed(1, {static_cast<std::uint64_t>(t)})).pass) ++passes;
    }
    CHECK(passes >= 40);
  }

  TEST_CASE("projection grids match an independent recount") {
    const auto space = DesignSpace::building();
    const auto r = random_status(space, 4000, 17);
    const auto grids = projection_grids(space, r.candidates, r.status, 20);
    REQUIRE(grids.size() == 28);
    const int d = space.dimension();
    for (const auto& g : grids) {
      REQUIRE(g.var_i < g.var_j);
      std::vector<std::int64_t> count(g.count.size(), 0), nroy(g.count.size(), 0);
      std::vector<double> lo(g.count.size(), 1e300);
      for (Eigen::Index k = 0; k < r.candidates.rows(); ++k) {
        auto cell = [&](int v) {
          const bool bin = space.variables()[static_cast<std::size_t>(v)].kind == VariableKind::binary;
          const double u = r.candidates(k, v);
          return bin ? static_cast<int>(u) : std::min(19, static_cast<int>(u * 20.0));
        };
        const auto c = static_cast<std::size_t>(cell(g.var_i) * g.cells_j + cell(g.var_j));
        ++count[c];
        if (r.status.impl_max[k] <= 3.0) ++nroy[c];
        lo[c] = std::min(lo[c], r.status.impl_max[k]);
      }
      CHECK(count == g.count);
      CHECK(nroy == g.nroy);
      for (std::size_t c = 0; c < count.size(); ++c) {
        if (count[c] == 0) {
          CHECK(std::isnan(g.min_impl[c]));
          continue;
        }
        CHECK(g.min_impl[c] == std::clamp(lo[c], -3.0, 3.0));
        const double prop = static_cast<double>(nroy[c]) / static_cast<double>(count[c]);
        CHECK(g.depth_log10[c] == (prop > 0 ? std::max(-10.0, std::log10(prop)) : -10.0));
      }
    }
    CHECK(d == 8);
  }

  TEST_CASE("histograms match an independent recount") {
    const auto space = DesignSpace::building();
    const auto r = random_status(space, 3000, 23);
    const auto hists = nroy_histograms(space, r.candidates, r.status, 20);
    REQUIRE(hists.size() == 8);
    for (const auto& h : hists) {
      const auto& spec = space.variables()[static_cast<std::size_t>(h.var)];
      const int nb = spec.kind == VariableKind::binary ? 2 : 20;
      REQUIRE(static_cast<int>(h.count.size()) == nb);
      CHECK(h.edges.front() == doctest::Approx(spec.kind == VariableKind::binary ? -0.5 : spec.lower));
      CHECK(h.edges.back() == doctest::Approx(spec.kind == VariableKind::binary ? 1.5 : spec.upper));
      std::int64_t total = 0;
      double max_prop = 0.0;
      for (int b = 0; b < nb; ++b) {
        total += h.count[static_cast<std::size_t>(b)];
        if (h.count[static_cast<std::size_t>(b)] > 0)
          max_prop = std::max(max_prop, static_cast<double>(h.nroy[static_cast<std::size_t>(b)]) /
                                            static_cast<double>(h.count[static_cast<std::size_t>(b)]));
      }
      CHECK(total == 3000);
      CHECK(h.scale == doctest::Approx(max_prop));
      CHECK(*std::max_element(h.relative.begin(), h.relative.end()) == doctest::Approx(1.0));
    }
  }

  TEST_CASE("a two-variable space gives one grid and two histograms") {
    const DesignSpace space({{"a", VariableKind::continuous, 0.0, 2.0}, {"flag", VariableKind::binary}});
    const auto r = random_status(space, 200, 3);
    const auto grids = projection_grids(space, r.candidates, r.status, 10);
    REQUIRE(grids.size() == 1);
    CHECK(grids[0].cells_i == 10);
    CHECK(grids[0].cells_j == 2);
    CHECK(nroy_histograms(space, r.candidates, r.status, 10).size() == 2);
  }

  TEST_CASE("CSV headers and row counts") {
    const DesignSpace space({{"a", VariableKind::continuous, 0.0, 2.0}, {"flag", VariableKind::binary}});
    const auto r = random_status(space, 200, 4);
    std::ostringstream g, h;
    write_grids_csv(g, space, projection_grids(space, r.candidates, r.status, 10));
    write_histograms_csv(h, space, nroy_histograms(space, r.candidates, r.status, 10));
    const std::string gs = g.str(), hs = h.str();
    CHECK(gs.rfind("var_i,var_j,cell_i,cell_j,min_impl,depth_log10,count\n", 0) == 0);
    CHECK(hs.rfind("var,bin,lower,upper,count,nroy,relative,absolute\n", 0) == 0);
    CHECK(std::count(gs.begin(), gs.end(), '\n') == 1 + 20);
    CHECK(std::count(hs.begin(), hs.end(), '\n') == 1 + 12);
  }
}
