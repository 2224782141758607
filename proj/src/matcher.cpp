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

#include "hmlse/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <random>

#include "hmlse/errors.hpp"
#include "hmlse/random.hpp"

namespace hmlse {

Criterion Criterion::probability(std::string name, double p_target, double extra_variance) {
  if (!(p_target > 0.0 && p_target < 1.0)) throw ContractError("probability target must lie in (0,1)");
  return {std::move(name), EmulatorKind::classifier_logit, logit(p_target), extra_variance};
}

Criterion Criterion::mean(std::string name, double target, double extra_variance) {
  if (!std::isfinite(target)) throw ContractError("mean target must be finite");
  return {std::move(name), EmulatorKind::hetgp_mean, target, extra_variance};
}

const char* to_string(CandidateState s) {
  switch (s) {
    case CandidateState::ruled_out: return "ruled_out";
    case CandidateState::active: return "active";
    case CandidateState::ruled_in: return "ruled_in";
  }
  return "?";
}

CandidateState candidate_state_from_string(const std::string& s) {
  if (s == "ruled_out") return CandidateState::ruled_out;
  if (s == "active") return CandidateState::active;
  if (s == "ruled_in") return CandidateState::ruled_in;
  throw ContractError("unknown candidate state '" + s + "'");
}

double implausibility(const Prediction& pred, double threshold) {
  if (std::isnan(pred.mean) || std::isnan(pred.variance) || std::isnan(threshold))
    throw ContractError("implausibility: NaN input");
  if (pred.variance < 0.0) throw ContractError("implausibility: negative variance");
  const double diff = pred.mean - threshold;
  if (pred.variance == 0.0) {
    if (diff == 0.0) return 0.0;
    return diff > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  }
  return diff / std::sqrt(pred.variance);
}

double combine(std::span<const double> impls) {
  if (impls.empty()) throw ContractError("combine needs at least one implausibility");
  return *std::max_element(impls.begin(), impls.end());
}

CandidateState classify(double I) {
  if (std::isnan(I)) throw ContractError("classify: NaN implausibility");
  if (I > kImplausibilityCutoff) return CandidateState::ruled_out;
  if (I < -kImplausibilityCutoff) return CandidateState::ruled_in;
  return CandidateState::active;
}

void predict_latent(const CriterionEmulator& em, const PointMatrix& x, Eigen::VectorXd& mean,
                    Eigen::VectorXd& variance) {
  std::visit(
      [&](const auto& e) {
        if constexpr (std::is_same_v<std::decay_t<decltype(e)>, ClassifierEmulator>)
          e.predict_logit(x, mean, variance);
        else
          e.predict_mean(x, mean, variance);
      },
      em);
}

Prediction predict_latent(const CriterionEmulator& em, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  return std::visit(
      [&](const auto& e) {
        if constexpr (std::is_same_v<std::decay_t<decltype(e)>, ClassifierEmulator>)
          return e.predict_logit(x);
        else
          return e.predict_mean(x);
      },
      em);
}

void evaluate_implausibility(const std::vector<Criterion>& criteria, const std::vector<CriterionEmulator>& emulators,
                             const PointMatrix& x, Eigen::MatrixXd& per_criterion, Eigen::VectorXd& combined) {
  if (criteria.empty() || criteria.size() != emulators.size())
    throw ContractError("need one fitted emulator per criterion");
  const Eigen::Index n = x.rows();
  per_criterion.resize(n, static_cast<Eigen::Index>(criteria.size()));
  Eigen::VectorXd mean, variance;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    predict_latent(emulators[c], x, mean, variance);
    const auto col = static_cast<Eigen::Index>(c);
    for (Eigen::Index i = 0; i < n; ++i)
      per_criterion(i, col) =
          implausibility({mean[i], variance[i] + criteria[c].extra_variance}, criteria[c].threshold);
  }
  combined.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) combined[i] = per_criterion.row(i).maxCoeff();
}

CandidateStatuses CandidateStatuses::all_active(Eigen::Index n, int n_criteria) {
  CandidateStatuses s;
  s.impl = Eigen::MatrixXd::Zero(n, n_criteria);
  s.impl_max = Eigen::VectorXd::Zero(n);
  s.state.assign(static_cast<std::size_t>(n), CandidateState::active);
  s.wave_of_decision.assign(static_cast<std::size_t>(n), kUndecided);
  return s;
}

Eigen::Index CandidateStatuses::count(CandidateState s) const {
  return static_cast<Eigen::Index>(std::count(state.begin(), state.end(), s));
}

WaveSummary summarize(const CandidateStatuses& s, int wave) {
  WaveSummary w;
  w.wave = wave;
  w.candidates = s.size();
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    switch (s.state[static_cast<std::size_t>(i)]) {
      case CandidateState::ruled_out: ++w.ruled_out; break;
      case CandidateState::active: ++w.active; break;
      case CandidateState::ruled_in: ++w.ruled_in; break;
    }
    if (s.impl_max[i] < 0.0) ++w.tenable;
  }
  if (w.candidates > 0) {
    const double n = static_cast<double>(w.candidates);
    w.nroy_fraction = static_cast<double>(w.candidates - w.ruled_out) / n;
    w.tenable_fraction = static_cast<double>(w.tenable) / n;
    w.ruled_in_fraction = static_cast<double>(w.ruled_in) / n;
    w.active_fraction = static_cast<double>(w.active) / n;
  }
  return w;
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::none: return "none";
    case Termination::max_waves: return "max_waves";
    case Termination::converged: return "converged";
    case Termination::resolved: return "resolved";
    case Termination::level_set_empty: return "level_set_empty";
  }
  return "?";
}

namespace {

constexpr Eigen::Index kEvaluationBlock = 1 << 15;

}  // namespace

WaveSummary update_candidates(WaveState& state, int wave) {
  CandidateStatuses& s = state.status;
  const PointMatrix& cand = state.candidates.points;
  if (s.size() != cand.rows()) throw ContractError("status and candidate counts differ");

  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s.state[static_cast<std::size_t>(i)] == CandidateState::active) active.push_back(i);

  PointMatrix block;
  Eigen::MatrixXd per;
  Eigen::VectorXd combined;
  for (std::size_t start = 0; start < active.size(); start += kEvaluationBlock) {
    const auto len = static_cast<Eigen::Index>(std::min<std::size_t>(kEvaluationBlock, active.size() - start));
    block.resize(len, cand.cols());
    for (Eigen::Index r = 0; r < len; ++r) block.row(r) = cand.row(active[start + static_cast<std::size_t>(r)]);
    evaluate_implausibility(state.criteria, state.emulators, block, per, combined);
    for (Eigen::Index r = 0; r < len; ++r) {
      const Eigen::Index i = active[start + static_cast<std::size_t>(r)];
      s.impl.row(i) = per.row(r);
      s.impl_max[i] = combined[r];
      const CandidateState st = classify(combined[r]);
      s.state[static_cast<std::size_t>(i)] = st;
      if (st != CandidateState::active) s.wave_of_decision[static_cast<std::size_t>(i)] = wave;
    }
  }

  // Simulated points: candidates mirror their candidate status, initial-design
  // points are evaluated the same way.
  for (auto& p : state.points) {
    if (p.candidate >= 0) {
      p.state = s.state[static_cast<std::size_t>(p.candidate)];
    } else if (p.state == CandidateState::active) {
      const Eigen::RowVectorXd row = pack(p.point);
      evaluate_implausibility(state.criteria, state.emulators, PointMatrix(row), per, combined);
      p.state = classify(combined[0]);
    }
  }
  return summarize(s, wave);
}

std::vector<Eigen::Index> select_wave_batch(const CandidateStatuses& status, int n, std::uint64_t seed) {
  if (n < 1) throw ContractError("wave batch size must be positive");
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < status.size(); ++i)
    if (status.state[static_cast<std::size_t>(i)] == CandidateState::active) active.push_back(i);
  const std::size_t k = std::min(active.size(), static_cast<std::size_t>(n));
  Rng rng(seed);
  // Partial Fisher-Yates shuffle.
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, active.size() - 1);
    std::swap(active[i], active[pick(rng)]);
  }
  active.resize(k);
  return active;
}

Termination no_active_reason(const CandidateStatuses& status) {
  return status.count(CandidateState::ruled_out) == status.size() ? Termination::level_set_empty
                                                                   : Termination::resolved;
}

namespace {

void warn(const WaveConfig& config, const std::string& msg) {
  if (config.warn)
    config.warn(msg);
  else
    std::cerr << "warning: " << msg << '\n';
}

}  // namespace

std::vector<CriterionEmulator> fit_emulators(const DesignSpace& space, const std::vector<Criterion>& criteria,
                                             const PointMatrix& inputs, const std::vector<SimRecord>& records,
                                             const WaveConfig& config, int wave) {
  if (static_cast<std::size_t>(inputs.rows()) != records.size())
    throw ContractError("one input row per record expected");
  std::vector<CriterionEmulator> out;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    const std::uint64_t seed = derive_seed(config.seed, {kStreamFit, static_cast<std::uint64_t>(wave), c});
    if (criteria[c].kind == EmulatorKind::classifier_logit) {
      std::vector<int> labels;
      labels.reserve(records.size());
      for (const auto& r : records) labels.push_back(r.overheated);
      FitSettings fs = config.classifier_fit;
      fs.seed = seed;
      out.emplace_back(ClassifierEmulator::fit(inputs, labels, space.n_continuous(), config.priors, fs));
    } else {
      Eigen::VectorXd y(static_cast<Eigen::Index>(records.size()));
      for (std::size_t i = 0; i < records.size(); ++i) y[static_cast<Eigen::Index>(i)] = records[i].energy_kwh_m2;
      HetGpSettings hs = config.hetgp_fit;
      hs.fit.seed = seed;
      out.emplace_back(HetGpEmulator::fit(inputs, y, space.n_continuous(), config.priors, hs));
    }
  }
  return out;
}

std::vector<SimRecord> run_jobs(Simulator& simulator, const std::vector<SimJob>& jobs, const WaveConfig& config,
                                int* failed) {
  auto run = [&](const std::vector<SimJob>& batch) {
    auto res = simulator.run_batch(batch);
    if (res.size() != batch.size()) throw SimulatorError("simulator returned a batch of the wrong size");
    return res;
  };
  auto results = run(jobs);
  std::vector<std::size_t> retry;
  for (std::size_t i = 0; i < jobs.size(); ++i)
    if (!results[i]) retry.push_back(i);
  if (!retry.empty()) {
    std::vector<SimJob> again;
    for (std::size_t i : retry) again.push_back(jobs[i]);
    auto second = run(again);
    for (std::size_t k = 0; k < retry.size(); ++k) results[retry[k]] = second[k];
  }
  int n_failed = 0;
  std::vector<SimRecord> out;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (!results[i]) {
      ++n_failed;
      warn(config, "simulation (id " + std::to_string(jobs[i].id) + ", rep " + std::to_string(jobs[i].replicate) +
                       ") failed twice; excluded");
      continue;
    }
    SimRecord r = *results[i];
    r.id = jobs[i].id;
    r.replicate = jobs[i].replicate;
    r.seed = jobs[i].seed;
    out.push_back(r);
  }
  if (failed) *failed = n_failed;
  return out;
}

WaveState initial_state(std::vector<Criterion> criteria, CandidateSet candidates) {
  if (criteria.empty()) throw ContractError("at least one criterion is required");
  WaveState s;
  s.criteria = std::move(criteria);
  s.status = CandidateStatuses::all_active(candidates.points.rows(), static_cast<int>(s.criteria.size()));
  s.candidates = std::move(candidates);
  return s;
}

void run_wave(WaveState& state, const DesignSpace& space, Simulator& simulator, const WaveConfig& config) {
  if (config.replicates < 1 || config.initial_replicates < 1 || config.points_per_wave < 1 ||
      config.initial_per_slice < 1)
    throw ContractError("wave sizes must be positive");
  const int wave = state.wave + 1;

  // New design points.
  std::vector<SimPoint> fresh;
  std::int64_t next_id = state.next_point_id();
  if (wave == 1) {
    const std::uint64_t seed = derive_seed(config.seed, {kStreamInitialDesign});
    const auto design = space.n_binary() > 0 ? sliced_latin_hypercube(space, config.initial_per_slice, seed)
                                             : latin_hypercube(space, config.initial_per_slice, seed);
    for (const auto& p : design) fresh.push_back({next_id++, p, -1, wave, CandidateState::active});
  } else {
    if (state.status.count(CandidateState::active) == 0) {
      state.termination = no_active_reason(state.status);
      return;
    }
    const auto picked = select_wave_batch(state.status, config.points_per_wave,
                                          derive_seed(config.seed, {kStreamWaveBatch, static_cast<std::uint64_t>(wave)}));
    for (Eigen::Index i : picked)
      fresh.push_back({next_id++, unpack(space, state.candidates.points.row(i)), i, wave, CandidateState::active});
  }

  std::vector<SimJob> jobs;
  const int replicates = wave == 1 ? config.initial_replicates : config.replicates;
  for (const auto& p : fresh)
    for (int r = 0; r < replicates; ++r)
      jobs.push_back({p.id, r,
                      derive_seed(config.seed, {kStreamSimulation, static_cast<std::uint64_t>(p.id),
                                                static_cast<std::uint64_t>(r)}),
                      p.point, to_native(space, p.point)});
  int failed = 0;
  const std::vector<SimRecord> fresh_records = run_jobs(simulator, jobs, config, &failed);

  // Training set: earlier data at retained points plus everything new.
  auto retained = [&](CandidateState s) {
    return config.retention == Retention::nroy_only ? s == CandidateState::active : s != CandidateState::ruled_out;
  };
  std::vector<SimRecord> training;
  for (const auto& r : state.records)
    if (retained(state.points[static_cast<std::size_t>(r.id)].state)) training.push_back(r);
  training.insert(training.end(), fresh_records.begin(), fresh_records.end());
  if (training.size() < 2) throw FitError("fewer than two simulations available for fitting");

  const auto point_of = [&](std::int64_t id) -> const InputPoint& {
    const auto base = state.next_point_id();
    return id < base ? state.points[static_cast<std::size_t>(id)].point : fresh[static_cast<std::size_t>(id - base)].point;
  };
  PointMatrix inputs(static_cast<Eigen::Index>(training.size()), space.dimension());
  for (std::size_t i = 0; i < training.size(); ++i)
    inputs.row(static_cast<Eigen::Index>(i)) = pack(point_of(training[i].id));

  auto emulators = fit_emulators(space, state.criteria, inputs, training, config, wave);

  // Commit.
  state.points.insert(state.points.end(), fresh.begin(), fresh.end());
  state.records.insert(state.records.end(), fresh_records.begin(), fresh_records.end());
  state.emulators = std::move(emulators);
  state.wave = wave;
  WaveSummary summary = update_candidates(state, wave);
  summary.simulations = static_cast<int>(fresh_records.size());
  summary.failed_jobs = failed;
  std::vector<std::int64_t> ids;
  for (const auto& r : training) ids.push_back(r.id);
  std::sort(ids.begin(), ids.end());
  summary.training_points = static_cast<int>(std::unique(ids.begin(), ids.end()) - ids.begin());
  state.history.push_back(summary);
  state.termination = check_termination(state, config);
}

Termination check_termination(const WaveState& state, const WaveConfig& config) {
  if (state.wave == 0) return Termination::none;
  if (state.status.count(CandidateState::active) == 0) return no_active_reason(state.status);
  if (state.wave >= config.max_waves) return Termination::max_waves;
  const WaveSummary s = summarize(state.status, state.wave);
  if (s.active_fraction < config.active_epsilon) return Termination::converged;
  return Termination::none;
}

const char* to_string(SelectionPolicy p) {
  switch (p) {
    case SelectionPolicy::tenable: return "tenable";
    case SelectionPolicy::strict: return "strict";
    case SelectionPolicy::ruled_in: return "ruled_in";
  }
  return "?";
}

double policy_bound(SelectionPolicy p) {
  switch (p) {
    case SelectionPolicy::tenable: return 0.0;
    case SelectionPolicy::strict: return -1.0;
    case SelectionPolicy::ruled_in: return -kImplausibilityCutoff;
  }
  return 0.0;
}

SelectionReport final_selection(const WaveState& state, const DesignSpace& space, SelectionPolicy policy,
                                const std::string& preference) {
  SelectionReport rep;
  rep.policy = policy;
  rep.preference = preference;
  const int col = space.index_of(preference);
  const double bound = policy_bound(policy);
  const auto& s = state.status;
  const PointMatrix& cand = state.candidates.points;
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (!(s.impl_max[i] < bound)) continue;
    ++rep.qualifying;
    if (cand(i, col) > best) {
      best = cand(i, col);
      rep.candidate = i;
    }
  }
  if (rep.candidate < 0) return rep;
  rep.found = true;
  rep.native = to_native(space, cand.row(rep.candidate));
  rep.impl_max = s.impl_max[rep.candidate];
  rep.joint_probability = 1.0;
  for (Eigen::Index c = 0; c < s.impl.cols(); ++c) {
    const double I = s.impl(rep.candidate, c);
    rep.impl.push_back(I);
    // P(latent below threshold) = Phi(-I) under the normal predictive.
    const double p = normal_cdf(-I);
    rep.prob_below.push_back(p);
    rep.joint_probability *= p;
  }
  return rep;
}

}  // namespace hmlse
