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

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "hmlse/classifier.hpp"
#include "hmlse/design_space.hpp"
#include "hmlse/hetgp.hpp"
#include "hmlse/prediction.hpp"
#include "hmlse/priors.hpp"
#include "hmlse/simulator.hpp"

namespace hmlse {

// ---------------------------------------------------------------------------
// Implausibility and classification

enum class EmulatorKind { classifier_logit, hetgp_mean };

/// One derived quantity that must fall below its threshold. For event
/// probabilities the threshold is stored on the logit scale.
struct Criterion {
  std::string name;
  EmulatorKind kind = EmulatorKind::hetgp_mean;
  double threshold = 0.0;       // latent units
  double extra_variance = 0.0;  // model-discrepancy variance added to the denominator

  static Criterion probability(std::string name, double p_target, double extra_variance = 0.0);
  static Criterion mean(std::string name, double target, double extra_variance = 0.0);
};

enum class CandidateState : std::int8_t { ruled_out = 0, active = 1, ruled_in = 2 };

const char* to_string(CandidateState s);
CandidateState candidate_state_from_string(const std::string& s);

/// Signed implausibility (mean - T) / sd. Zero variance gives +-inf with the
/// sign of mean - T (0 when mean == T).
double implausibility(const Prediction& pred, double threshold);

/// Maximum over criteria.
double combine(std::span<const double> impls);

/// I > 3 rules out, I < -3 rules in, otherwise active.
CandidateState classify(double I);

inline constexpr double kImplausibilityCutoff = 3.0;
inline constexpr int kUndecided = -1;

// ---------------------------------------------------------------------------
// Emulators per criterion

using CriterionEmulator = std::variant<ClassifierEmulator, HetGpEmulator>;

/// Latent predictions of one fitted emulator at many points.
void predict_latent(const CriterionEmulator& em, const PointMatrix& x, Eigen::VectorXd& mean,
                    Eigen::VectorXd& variance);
Prediction predict_latent(const CriterionEmulator& em, const Eigen::Ref<const Eigen::RowVectorXd>& x);

/// Per-criterion and max-combined implausibility at many points.
void evaluate_implausibility(const std::vector<Criterion>& criteria, const std::vector<CriterionEmulator>& emulators,
                             const PointMatrix& x, Eigen::MatrixXd& per_criterion, Eigen::VectorXd& combined);

// ---------------------------------------------------------------------------
// Candidate bookkeeping

/// Status of every candidate, stored column-wise. `impl` holds the latest
/// per-criterion values; decided candidates keep the values of their
/// decision wave.
struct CandidateStatuses {
  Eigen::MatrixXd impl;                 // n x criteria
  Eigen::VectorXd impl_max;             // n
  std::vector<CandidateState> state;    // n
  std::vector<int> wave_of_decision;    // n, kUndecided while active

  static CandidateStatuses all_active(Eigen::Index n, int n_criteria);
  Eigen::Index size() const { return impl_max.size(); }
  Eigen::Index count(CandidateState s) const;
};

struct WaveSummary {
  int wave = 0;
  Eigen::Index candidates = 0;
  Eigen::Index ruled_out = 0;
  Eigen::Index active = 0;
  Eigen::Index ruled_in = 0;
  Eigen::Index tenable = 0;       // I_max < 0
  double nroy_fraction = 0.0;     // not ruled out
  double tenable_fraction = 0.0;
  double ruled_in_fraction = 0.0;
  double active_fraction = 0.0;
  int simulations = 0;            // records added this wave
  int failed_jobs = 0;            // excluded after a retry
  int training_points = 0;        // unique inputs used for the fits
};

WaveSummary summarize(const CandidateStatuses& s, int wave);

/// A simulated input. `candidate` is its index in the candidate set, or -1
/// for points of the initial design, whose status is tracked here.
struct SimPoint {
  std::int64_t id = 0;
  InputPoint point;
  std::int64_t candidate = -1;
  int wave = 0;
  CandidateState state = CandidateState::active;
};

enum class Retention {
  active_or_ruled_in,  // default: points not ruled out
  nroy_only,           // only points still undecided
};

enum class Termination {
  none,
  max_waves,        // wave budget used
  converged,        // active fraction below epsilon
  resolved,         // every candidate decided, some ruled in
  level_set_empty,  // every candidate ruled out
};

const char* to_string(Termination t);

struct WaveState {
  int wave = 0;                              // last completed wave, 0 before the initial design
  std::vector<Criterion> criteria;
  CandidateSet candidates;
  CandidateStatuses status;
  std::vector<SimPoint> points;
  std::vector<SimRecord> records;
  std::vector<CriterionEmulator> emulators;  // fitted in the last wave
  std::vector<WaveSummary> history;
  Termination termination = Termination::none;

  std::int64_t next_point_id() const { return static_cast<std::int64_t>(points.size()); }
};

/// Re-evaluates active candidates with the current emulators; decided
/// candidates are left untouched. Also refreshes the tracked status of
/// initial-design points. Returns the refreshed summary (not appended).
WaveSummary update_candidates(WaveState& state, int wave);

/// Indices of `n` active candidates drawn uniformly without replacement, in
/// draw order (all of them, shuffled, if fewer than n are active).
std::vector<Eigen::Index> select_wave_batch(const CandidateStatuses& status, int n, std::uint64_t seed);

/// What happens when no candidate is active.
Termination no_active_reason(const CandidateStatuses& status);

// ---------------------------------------------------------------------------
// Wave orchestration

struct WaveConfig {
  std::uint64_t seed = 0;
  int initial_per_slice = 125;
  int initial_replicates = 2;
  int points_per_wave = 250;
  int replicates = 2;
  int max_waves = 3;
  double active_epsilon = 0.0;
  Retention retention = Retention::active_or_ruled_in;
  HyperPriors priors{};
  FitSettings classifier_fit{};
  HetGpSettings hetgp_fit{};
  std::function<void(const std::string&)> warn;  // defaults to stderr
};

/// Fits one emulator per criterion from (point, record) training pairs.
/// Criteria of kind classifier_logit use the overheat flags, hetgp_mean the
/// energies.
std::vector<CriterionEmulator> fit_emulators(const DesignSpace& space, const std::vector<Criterion>& criteria,
                                             const PointMatrix& inputs, const std::vector<SimRecord>& records,
                                             const WaveConfig& config, int wave);

/// Runs jobs, retrying failures once; failures after the retry are dropped
/// with a warning. Returns the successful records in job order.
std::vector<SimRecord> run_jobs(Simulator& simulator, const std::vector<SimJob>& jobs, const WaveConfig& config,
                                int* failed);

/// Builds the empty state over a fixed candidate set.
WaveState initial_state(std::vector<Criterion> criteria, CandidateSet candidates);

/// Runs the next wave: the sliced initial design for wave 1, otherwise a
/// batch of active candidates. Replicates, simulates, refits on the new data
/// plus retained earlier data, and updates candidate statuses. If fitting
/// fails the state is left unchanged and the FitError propagates.
void run_wave(WaveState& state, const DesignSpace& space, Simulator& simulator, const WaveConfig& config);

/// Decides whether the loop stops after the last completed wave.
Termination check_termination(const WaveState& state, const WaveConfig& config);

// ---------------------------------------------------------------------------
// Final selection

enum class SelectionPolicy { tenable, strict, ruled_in };

const char* to_string(SelectionPolicy p);
double policy_bound(SelectionPolicy p);  // 0, -1, -3

struct SelectionReport {
  SelectionPolicy policy = SelectionPolicy::tenable;
  std::string preference;
  bool found = false;
  Eigen::Index qualifying = 0;         // candidates satisfying the policy
  Eigen::Index candidate = -1;
  Eigen::VectorXd native;              // selected design in native units
  double impl_max = 0.0;
  std::vector<double> impl;            // per criterion
  std::vector<double> prob_below;      // per criterion
  double joint_probability = 0.0;
};

/// Among candidates with I_max below the policy bound, picks the one with the
/// largest value of `preference`; ties go to the lowest candidate index.
SelectionReport final_selection(const WaveState& state, const DesignSpace& space, SelectionPolicy policy,
                                const std::string& preference);

}  // namespace hmlse
