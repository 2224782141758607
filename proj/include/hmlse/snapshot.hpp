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

#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hmlse/design_space.hpp"
#include "hmlse/matcher.hpp"

namespace hmlse {

// Per-wave snapshots. A snapshot holds everything except the candidate set
// (regenerated from the seed) and the candidate statuses (a separate CSV), so
// that a run can continue from it bit-identically. Doubles are written in
// shortest round-trip form.

nlohmann::json kernel_params_to_json(const KernelParams& p);
KernelParams kernel_params_from_json(const nlohmann::json& j);

/// Kernel parameters plus the conditioning data, and the SHA-256 of that data.
nlohmann::json emulator_to_json(const CriterionEmulator& em);
CriterionEmulator emulator_from_json(const nlohmann::json& j);
std::string training_hash(const CriterionEmulator& em);

nlohmann::json summary_to_json(const WaveSummary& s);
WaveSummary summary_from_json(const nlohmann::json& j);

nlohmann::json criterion_to_json(const Criterion& c);
Termination termination_from_string(const std::string& s);

/// `candidate_id,I_<criterion>...,I_max,state,wave_of_decision`, one row per
/// candidate. wave_of_decision is empty while active.
void write_status_csv(std::ostream& out, const std::vector<Criterion>& criteria, const CandidateStatuses& s);
CandidateStatuses read_status_csv(std::istream& in, const std::vector<Criterion>& criteria, Eigen::Index n);

/// Snapshot JSON of the state after its last completed wave.
nlohmann::json snapshot_to_json(const WaveState& state);

/// Restores points, records, emulators, history and termination from a
/// snapshot; `state` must already hold criteria, candidates and statuses.
void restore_snapshot(const nlohmann::json& j, const DesignSpace& space, WaveState& state);

/// `id,rep,seed,energy_kwh_m2,overheat`.
void write_records_csv(std::ostream& out, const std::vector<SimRecord>& records);

}  // namespace hmlse
