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

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hmlse/simulator.hpp"

namespace hmlse {

/// Environment variable that overrides the configured exchange directory.
inline constexpr const char* kExchangeDirEnv = "HMLSE_EXCHANGE_DIR";

struct ExternalAdapterSettings {
  std::filesystem::path exchange_dir;
  std::chrono::milliseconds timeout{std::chrono::hours(24)};
  std::chrono::milliseconds poll_interval{200};
};

/// File-based protocol for an external simulator farm.
///
/// For each batch the adapter removes any stale `results.csv`, writes
/// `requests.csv` with header `id,rep,seed,x1,...,xD` (native units), and
/// waits for `results.csv` with header `id,rep,energy_kwh_m2,overheat`. The
/// producer should write results under another name and rename it into
/// place. A row whose energy is `nan` or empty marks a failed job. Rows are
/// matched to jobs by (id, rep); missing, duplicate, unknown or malformed
/// rows raise SimulatorError listing every offending row.
class ExternalSimulator final : public Simulator {
 public:
  explicit ExternalSimulator(ExternalAdapterSettings settings);
  std::vector<std::optional<SimRecord>> run_batch(const std::vector<SimJob>& jobs) override;
  const std::filesystem::path& exchange_dir() const noexcept { return settings_.exchange_dir; }

 private:
  ExternalAdapterSettings settings_;
};

/// The configured directory, or the environment override when set.
std::filesystem::path resolve_exchange_dir(const std::filesystem::path& configured);

void write_requests_csv(std::ostream& out, const std::vector<SimJob>& jobs);

/// Parses results and matches them against `jobs`.
std::vector<std::optional<SimRecord>> parse_results_csv(std::istream& in, const std::vector<SimJob>& jobs);

}  // namespace hmlse
