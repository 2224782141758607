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
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hmlse/config.hpp"
#include "hmlse/diagnostics.hpp"
#include "hmlse/matcher.hpp"

namespace hmlse {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitSimulator = 3,
  kExitFit = 4,
  kExitEmptyLevelSet = 5,
};

inline constexpr const char* kEmptyLevelSetMessage = "no values of x are in the level-set";

// Layout of a run directory.
inline constexpr const char* kLedgerFile = "ledger.jsonl";
inline constexpr const char* kConfigFile = "config.json";
inline constexpr const char* kLockFile = "run.lock";
inline constexpr const char* kSelectionFile = "selection.json";
inline constexpr const char* kSummaryFile = "summary.csv";

/// Relative directory of wave k, e.g. "waves/wave_2".
std::string wave_dir(int wave);

/// Exclusive advisory lock on <dir>/run.lock, released on destruction or
/// process exit. Throws ContractError when another process holds it.
class RunLock {
 public:
  explicit RunLock(const std::filesystem::path& dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  int fd_ = -1;
};

/// Append-only JSON-lines ledger. The first line describes the run (config
/// hash, seed lineage); later lines record waves, selections, validations
/// and reports together with the SHA-256 of every artifact they wrote.
class RunLedger {
 public:
  static RunLedger open(const std::filesystem::path& dir);  // empty if absent
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<nlohmann::json>& entries() const noexcept { return entries_; }
  const nlohmann::json& header() const;
  /// Last completed wave recorded, 0 if none.
  int last_wave() const;
  /// Appends unless an identical entry already exists.
  void append(const nlohmann::json& entry);

 private:
  std::filesystem::path path_;
  std::vector<nlohmann::json> entries_;
};

/// Problems found when checking that every artifact listed in the ledger
/// exists with the recorded hash. Empty when the ledger is complete.
std::vector<std::string> verify_ledger(const std::filesystem::path& dir);

/// Everything a command loads from a run directory.
struct LoadedRun {
  RunConfig config;
  std::string config_hash;
  WaveState state;
};

/// Restores the state after `wave` (the last recorded one when omitted).
LoadedRun load_run(const std::filesystem::path& dir, std::optional<int> wave = {});

struct RunOptions {
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_waves;
  std::ostream* log = nullptr;
};

struct RunOutcome {
  Termination termination = Termination::none;
  std::vector<WaveSummary> history;
  std::vector<SelectionReport> selections;
};

/// Runs waves to termination, resuming from the last recorded wave when the
/// output directory already holds a run with the same configuration hash.
RunOutcome cmd_run(const RunOptions& options);

/// Alternative entry taking a parsed configuration.
RunOutcome run_pipeline(const RunConfig& config, const std::filesystem::path& out, std::ostream* log = nullptr);

struct WaveValidation {
  int wave = 0;
  CoverageReport coverage;
  RpsReport rps;
};

/// Fresh sliced-LHS validation design simulated once per point; coverage of
/// the mean emulator and RPS of the classifier for every recorded wave.
std::vector<WaveValidation> cmd_validate(const std::filesystem::path& state_dir, int n, std::ostream* log = nullptr);

/// Projection grids and histograms of the latest wave under <state>/report.
void cmd_report(const std::filesystem::path& state_dir, std::ostream* log = nullptr);

/// Grids, histograms and a plotting manifest written into `dir`; returns the
/// file names written.
std::vector<std::string> write_nroy_report(const std::filesystem::path& dir, const DesignSpace& space,
                                           const WaveState& state, int resolution, int bins);

nlohmann::json selection_to_json(const SelectionReport& r, const DesignSpace& space,
                                  const std::vector<Criterion>& criteria);

}  // namespace hmlse
