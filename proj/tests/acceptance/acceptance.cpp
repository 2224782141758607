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

// Acceptance checks: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "CLI11.hpp"

#include "hmlse/config.hpp"
#include "hmlse/diagnostics.hpp"
#include "hmlse/gp_regression.hpp"
#include "hmlse/kernel.hpp"
#include "hmlse/pipeline.hpp"
#include "hmlse/random.hpp"
#include "hmlse/simulator.hpp"
#include "support/cibse_golden.hpp"
#include "support/oracles.hpp"
#include "support/random_emulators.hpp"

using namespace hmlse;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failed checks with a short reason each.
class Checker {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    if (!ok) ++n_failed_;
  }
  Outcome outcome(const std::string& summary) const {
    if (n_failed_ == 0) return {true, summary};
    std::string d = summary + "; " + std::to_string(n_failed_) + " failed:";
    for (const auto& f : failures_) d += " [" + f + "]";
    return {false, d};
  }

 private:
  std::vector<std::string> failures_;
  int n_failed_ = 0;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s << std::setprecision(digits) << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1 ------------------------------------------------------------------------

Outcome golden_suite(double budget) {
  const auto t0 = std::chrono::steady_clock::now();
  Checker c;
  const auto occ = default_occupancy();
  const auto scenarios = testing::golden_scenarios();
  for (const auto& s : scenarios) {
    const auto a = assess_delta_t(s.delta_t, occ);
    c.require(a.criterion1 == s.c1 && a.criterion2 == s.c2 && a.criterion3 == s.c3 && a.overheated == s.overheated,
              s.name);
  }
  const double t = seconds_since(t0);
  c.require(t < budget, "runtime " + fmt(t) + " s");
  return c.outcome(std::to_string(scenarios.size()) + " scenarios, " + fmt(t, 3) + " s");
}

// 2 ------------------------------------------------------------------------

Outcome kernel_suite(double budget) {
  const auto t0 = std::chrono::steady_clock::now();
  Checker c;
  KernelParams p = KernelParams::defaults(2, 1);
  Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(3), b(3);
  b << 1.0, 0.0, 0.0;
  c.require(std::abs(kernel_eval(p, a, b) - std::exp(-1.0)) < 1e-12, "unit lengthscale distance");
  b << 0.0, 0.0, 1.0;
  c.require(std::abs(kernel_eval(p, a, b) - std::exp(-1.0)) < 1e-12, "unit binary flip");

  double worst = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    PointMatrix x(50, 8);
    for (int i = 0; i < 50; ++i) {
      for (int d = 0; d < 7; ++d) x(i, d) = u(rng);
      x(i, 7) = u(rng) < 0.5 ? 0.0 : 1.0;
    }
    KernelParams q;
    q.alpha2 = 0.1 + 5.0 * u(rng);
    q.lengthscales.resize(7);
    for (int d = 0; d < 7; ++d) q.lengthscales[d] = 0.2 + 2.0 * u(rng);
    q.binary_corr = Eigen::VectorXd::Constant(1, 0.1 + u(rng));
    const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram(q, x)).eigenvalues().minCoeff();
    worst = std::min(worst, min_eig / q.alpha2);
    c.require(min_eig >= -1e-8 * q.alpha2, "PSD, seed " + std::to_string(seed));
  }
  const double t = seconds_since(t0);
  c.require(t < budget, "runtime " + fmt(t) + " s");
  return c.outcome("min eigenvalue / alpha2 = " + fmt(worst) + ", " + fmt(t, 3) + " s");
}

// 3 ------------------------------------------------------------------------

Outcome gp_suite(double budget) {
  const auto t0 = std::chrono::steady_clock::now();
  Checker c;
  const std::vector<double> x{0.05, 0.3, 0.45, 0.7, 0.95};
  const std::vector<double> y{0.2, -0.4, 0.1, 0.9, 0.3};
  const std::vector<double> noise{0.01, 0.02, 0.01, 0.05, 0.03};
  const std::vector<double> xs{0.0, 0.2, 0.5, 0.61, 0.8, 1.0, 1.7};
  KernelParams p;
  p.alpha2 = 1.3;
  p.lengthscales = Eigen::VectorXd::Constant(1, 0.25);
  p.binary_corr.resize(0);
  const auto gp = GpRegression::condition(Eigen::Map<const Eigen::VectorXd>(x.data(), 5),
                                          Eigen::Map<const Eigen::VectorXd>(y.data(), 5),
                                          Eigen::Map<const Eigen::VectorXd>(noise.data(), 5), p);
  const auto ref = testing::closed_form_gp_1d(x, y, noise, 1.3, 0.25, gp.jitter(), xs);
  double worst_pred = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Prediction pr = gp.predict(Eigen::RowVectorXd::Constant(1, xs[i]));
    worst_pred = std::max({worst_pred, std::abs(pr.mean - ref.mean[i]), std::abs(pr.variance - ref.variance[i])});
  }
  c.require(worst_pred < 1e-6, "closed-form predictions, max error " + fmt(worst_pred));

  Rng rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 30;
  PointMatrix xm(n, 4);
  Eigen::VectorXd ym(n), nm(n);
  for (int i = 0; i < n; ++i) {
    for (int d = 0; d < 3; ++d) xm(i, d) = u(rng);
    xm(i, 3) = u(rng) < 0.5 ? 0.0 : 1.0;
    ym[i] = std::sin(4.0 * xm(i, 0)) + xm(i, 1) * xm(i, 3);
    nm[i] = 0.01 + 0.05 * u(rng);
  }
  const KernelWorkspace ws(xm, 3);
  std::uniform_real_distribution<double> th(-1.5, 1.0);
  double worst_grad = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd theta(5);
    for (int k = 0; k < 5; ++k) theta[k] = th(rng);
    auto f = [&](const Eigen::VectorXd& t) {
      return gp_log_marginal(ws, ym, nm, KernelParams::from_log(t, 3), 1e-8, nullptr);
    };
    Eigen::VectorXd g;
    gp_log_marginal(ws, ym, nm, KernelParams::from_log(theta, 3), 1e-8, &g);
    const Eigen::VectorXd fd = testing::central_difference(f, theta);
    worst_grad = std::max(worst_grad, (g - fd).norm() / fd.norm());
  }
  c.require(worst_grad < 1e-4, "gradient, max relative error " + fmt(worst_grad));
  const double t = seconds_since(t0);
  c.require(t < budget, "runtime " + fmt(t) + " s");
  return c.outcome("prediction error " + fmt(worst_pred) + ", gradient relative error " + fmt(worst_grad) + ", " +
                   fmt(t, 3) + " s");
}

// 4 ------------------------------------------------------------------------

Outcome matcher_suite(double budget) {
  const auto t0 = std::chrono::steady_clock::now();
  Checker c;
  Rng rng(1);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  for (int i = 0; i < 10000; ++i) {
    const double I = u(rng);
    const auto s = classify(I);
    c.require((s == CandidateState::ruled_out) == (I > 3.0) && (s == CandidateState::ruled_in) == (I < -3.0),
              "partition at I = " + fmt(I, 17));
  }
  c.require(classify(3.0) == CandidateState::active && classify(-3.0) == CandidateState::active,
            "boundaries stay active");

  std::uniform_int_distribution<int> len(1, 5);
  for (int i = 0; i < 10000; ++i) {
    std::vector<double> v(static_cast<std::size_t>(len(rng)));
    for (auto& x : v) x = u(rng);
    c.require(combine(v) == *std::max_element(v.begin(), v.end()), "maximum combination");
  }

  const auto space = DesignSpace::building();
  WaveState st = initial_state({Criterion::probability("overheat", 0.01), Criterion::mean("energy", 15.0)},
                               make_candidate_set(space, 10000, 3));
  auto prev = st.status.state;
  Eigen::MatrixXd prev_impl = st.status.impl;
  for (int wave = 1; wave <= 6; ++wave) {
    st.emulators = testing::random_emulators(space, static_cast<std::uint64_t>(wave));
    update_candidates(st, wave);
    for (std::size_t i = 0; i < prev.size(); ++i)
      if (prev[i] != CandidateState::active)
        c.require(st.status.state[i] == prev[i] &&
                      st.status.impl.row(static_cast<Eigen::Index>(i)) == prev_impl.row(static_cast<Eigen::Index>(i)),
                  "frozen decision, wave " + std::to_string(wave));
    prev = st.status.state;
    prev_impl = st.status.impl;
  }
  const double t = seconds_since(t0);
  c.require(t < budget, "runtime " + fmt(t) + " s");
  return c.outcome("20 000 property cases, 6 simulated waves, " + fmt(t, 3) + " s");
}

// 5 ------------------------------------------------------------------------

// Probability that a Monte-Carlo estimate lies below its target, from a
// normal approximation; proportions use the Jeffreys-smoothed estimate for
// the standard error so that zero counts keep a positive spread.
double prob_below(double estimate, double se, double target) {
  if (se <= 0.0) return estimate < target ? 1.0 : 0.0;
  return testing::phi_cdf((target - estimate) / se);
}

double oracle_probability(const MonteCarloEstimate& mc, double p_target, double e_target) {
  const double n = mc.replicates;
  const double k = mc.p_overheat * n;
  const double p_smooth = (k + 0.5) / (n + 1.0);
  const double se_p = std::sqrt(p_smooth * (1.0 - p_smooth) / n);
  return prob_below(mc.p_overheat, se_p, p_target) * prob_below(mc.mean_energy, mc.mean_energy_se, e_target);
}

Outcome end_to_end(const RunConfig& config, const fs::path& dir, int oracle_points, int oracle_reps,
                   WaveState& final_state) {
  const auto t0 = std::chrono::steady_clock::now();
  Checker c;
  fs::remove_all(dir);
  std::cout << "  running " << config.max_waves << " waves on " << config.candidates << " candidates ..." << std::endl;
  const RunOutcome run = run_pipeline(config, dir, &std::cout);
  const LoadedRun loaded = load_run(dir);
  final_state = loaded.state;
  const auto& h = run.history;
  c.require(static_cast<int>(h.size()) == config.max_waves, "waves run: " + std::to_string(h.size()));
  std::string sims, nroy, tenable;
  for (std::size_t w = 0; w < h.size(); ++w) {
    sims += (w ? "+" : "") + std::to_string(h[w].simulations);
    nroy += (w ? " > " : "") + fmt(100.0 * h[w].nroy_fraction, 4) + "%";
    tenable += (w ? " < " : "") + fmt(100.0 * h[w].tenable_fraction, 3) + "%";
    if (w == 0) continue;
    c.require(h[w].nroy_fraction <= h[w - 1].nroy_fraction, "(a) NROY fraction rose in wave " + std::to_string(w + 1));
    c.require(h[w].tenable_fraction >= h[w - 1].tenable_fraction,
              "(c) tenable fraction fell in wave " + std::to_string(w + 1));
  }

  // (b) Monte-Carlo oracle at random candidates.
  const auto& cand = final_state.candidates.points;
  Rng pick(derive_seed(config.seed, {99}));
  std::uniform_int_distribution<Eigen::Index> any(0, cand.rows() - 1);
  int qualifying = 0, qualifying_ruled_out = 0;
  std::cout << "  Monte-Carlo oracle at " << oracle_points << " candidates x " << oracle_reps << " replicates ..."
            << std::endl;
  for (int i = 0; i < oracle_points; ++i) {
    const Eigen::Index idx = any(pick);
    const auto x = unpack(config.space, cand.row(idx));
    const auto mc = monte_carlo(x, oracle_reps, derive_seed(config.seed, {99, static_cast<std::uint64_t>(i)}),
                                config.building);
    if (mc.p_overheat < config.p_target && mc.mean_energy < config.energy_target) {
      ++qualifying;
      if (final_state.status.state[static_cast<std::size_t>(idx)] == CandidateState::ruled_out) ++qualifying_ruled_out;
    }
  }
  const double missed = qualifying ? static_cast<double>(qualifying_ruled_out) / qualifying : 0.0;
  c.require(missed < 0.01, "(b) " + std::to_string(qualifying_ruled_out) + " of " + std::to_string(qualifying) +
                               " truly qualifying candidates ruled out");

  // (b) Every ruled-in candidate, checked against the oracle.
  int ruled_in = 0, ruled_in_ok = 0;
  for (Eigen::Index idx = 0; idx < cand.rows(); ++idx) {
    if (final_state.status.state[static_cast<std::size_t>(idx)] != CandidateState::ruled_in) continue;
    ++ruled_in;
    const auto mc = monte_carlo(unpack(config.space, cand.row(idx)), oracle_reps,
                                derive_seed(config.seed, {98, static_cast<std::uint64_t>(idx)}), config.building);
    if (oracle_probability(mc, config.p_target, config.energy_target) >= 0.95) ++ruled_in_ok;
  }
  c.require(ruled_in_ok == ruled_in, "(b) " + std::to_string(ruled_in - ruled_in_ok) + " of " +
                                         std::to_string(ruled_in) + " ruled-in candidates fail the oracle");
  return c.outcome("simulations " + sims + "; NROY " + nroy + "; tenable " + tenable + "; " +
                   std::to_string(qualifying) + " of " + std::to_string(oracle_points) +
                   " oracle candidates qualify, " + std::to_string(qualifying_ruled_out) + " ruled out; " +
                   std::to_string(ruled_in) + " ruled in, " + std::to_string(ruled_in_ok) + " confirmed; " +
                   fmt(seconds_since(t0), 4) + " s");
}

// 6 ------------------------------------------------------------------------

Outcome validation_consistency(const WaveState& state, std::uint64_t seed, double budget) {
  const auto t0 = std::chrono::steady_clock::now();
  Checker c;
  const HetGpEmulator* het = nullptr;
  const ClassifierEmulator* cls = nullptr;
  for (const auto& em : state.emulators) {
    if (const auto* h = std::get_if<HetGpEmulator>(&em)) het = h;
    if (const auto* k = std::get_if<ClassifierEmulator>(&em)) cls = k;
  }
  if (!het || !cls) return {false, "run holds no fitted emulators"};

  const auto& cand = state.candidates.points;
  Rng rng(derive_seed(seed, {97}));
  std::uniform_int_distribution<Eigen::Index> any(0, cand.rows() - 1);
  auto sample_inputs = [&](int n) {
    PointMatrix x(n, cand.cols());
    for (int i = 0; i < n; ++i) x.row(i) = cand.row(any(rng));
    return x;
  };
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  const PointMatrix xv = sample_inputs(10000);
  Eigen::VectorXd mean, var, noise;
  het->predict_mean(xv, mean, var);
  het->noise_variance(xv, noise);
  Eigen::VectorXd yv(xv.rows());
  for (Eigen::Index i = 0; i < xv.rows(); ++i) yv[i] = mean[i] + std::sqrt(var[i] + noise[i]) * z(rng);
  const auto cov = interval_coverage(*het, xv, yv);
  c.require(cov.fraction >= 0.94 && cov.fraction <= 0.97, "coverage " + fmt(cov.fraction));

  const int trials = 50;
  int passes = 0;
  for (int t = 0; t < trials; ++t) {
    const PointMatrix xr = sample_inputs(400);
    Eigen::VectorXd lm, lv;
    cls->predict_logit(xr, lm, lv);
    std::vector<int> y;
    for (Eigen::Index i = 0; i < xr.rows(); ++i) {
      const double f = lm[i] + std::sqrt(lv[i]) * z(rng);
      y.push_back(unif(rng) < 1.0 / (1.0 + std::exp(-f)) ? 1 : 0);
    }
    if (rps_report(*cls, xr, y, 1000, derive_seed(seed, {97, static_cast<std::uint64_t>(t)})).pass) ++passes;
  }
  c.require(passes >= 45, "RPS passed " + std::to_string(passes) + " of " + std::to_string(trials));
  const double t = seconds_since(t0);
  c.require(t < budget, "runtime " + fmt(t) + " s");
  return c.outcome("coverage " + fmt(cov.fraction) + " at n = 10000; RPS below the 95% reference in " +
                   std::to_string(passes) + "/" + std::to_string(trials) + " trials; " + fmt(t, 3) + " s");
}

// 7 ------------------------------------------------------------------------

std::map<std::string, std::string> file_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), root).generic_string();
    if (rel == kLockFile) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    out[rel] = s.str();
  }
  return out;
}

Outcome determinism(const fs::path& config, const fs::path& work) {
  const auto t0 = std::chrono::steady_clock::now();
  Checker c;
  const fs::path a = work / "determinism_a", b = work / "determinism_b";
  fs::remove_all(a);
  fs::remove_all(b);
  std::cout << "  two runs of " << config.filename().string() << " ..." << std::endl;
  cmd_run({config, a, {}, {}, nullptr});
  cmd_run({config, b, {}, {}, nullptr});
  const auto ta = file_tree(a), tb = file_tree(b);
  c.require(ta.size() == tb.size(), "file counts " + std::to_string(ta.size()) + " vs " + std::to_string(tb.size()));
  for (const auto& [name, content] : ta) {
    const auto it = tb.find(name);
    c.require(it != tb.end() && it->second == content, name + " differs");
  }
  c.require(verify_ledger(a).empty(), "ledger verification");
  return c.outcome(std::to_string(ta.size()) + " artifacts compared byte for byte, " + fmt(seconds_since(t0), 4) +
                   " s");
}

// 8 ------------------------------------------------------------------------

Outcome empty_level_set(const fs::path& config, const fs::path& work) {
  const auto t0 = std::chrono::steady_clock::now();
  Checker c;
  const fs::path dir = work / "impossible";
  fs::remove_all(dir);
  const auto out = cmd_run({config, dir, {}, {}, nullptr});
  c.require(out.termination == Termination::level_set_empty,
            std::string("terminated with ") + to_string(out.termination));
  c.require(out.history.size() <= 2, "took " + std::to_string(out.history.size()) + " waves");
  for (const auto& s : out.selections) c.require(!s.found, "a design was selected");
  const json final_entry = RunLedger::open(dir).entries().back();
  c.require(final_entry.at("termination") == "level_set_empty", "ledger final entry");
  return c.outcome(std::string("\"") + kEmptyLevelSetMessage + "\" after " + std::to_string(out.history.size()) +
                   " wave(s), " + fmt(seconds_since(t0), 3) + " s");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::string configs = fs::path(HMLSE_SOURCE_DIR) / "configs";
  std::string work = (fs::temp_directory_path() / "hmlse_acceptance").string();
  int oracle_points = 200, oracle_reps = 10000;
  app.add_option("--configs", configs, "Directory holding full.json, demo.json and impossible.json");
  app.add_option("--work", work, "Scratch directory for run outputs");
  app.add_option("--oracle-points", oracle_points, "Candidates checked against the Monte-Carlo oracle");
  app.add_option("--oracle-replicates", oracle_reps, "Monte-Carlo replicates per oracle candidate");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  const RunConfig full = load_config(fs::path(configs) / "full.json");
  WaveState full_state;
  std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"CIBSE golden suite", [] { return golden_suite(1.0); }},
      {"kernel suite", [] { return kernel_suite(1.0); }},
      {"GP correctness", [] { return gp_suite(10.0); }},
      {"implausibility and classification", [] { return matcher_suite(5.0); }},
      {"end-to-end synthetic reproduction",
       [&] { return end_to_end(full, fs::path(work) / "full", oracle_points, oracle_reps, full_state); }},
      {"validation self-consistency", [&] { return validation_consistency(full_state, full.seed, 120.0); }},
      {"determinism", [&] { return determinism(fs::path(configs) / "demo.json", work); }},
      {"empty level set", [&] { return empty_level_set(fs::path(configs) / "impossible.json", work); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << "criterion " << i + 1 << ": " << (o.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << " ("
              << o.detail << ")" << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " of 8 criteria failed" : "all 8 criteria passed") << std::endl;
  return failed ? 1 : 0;
}
