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
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "hmlse/design_space.hpp"
#include "hmlse/external_adapter.hpp"
#include "hmlse/matcher.hpp"
#include "hmlse/simulator.hpp"

namespace hmlse {

/// Everything a run depends on. Loaded from a JSON file; absent keys take
/// the defaults below, unknown keys are rejected.
struct RunConfig {
  std::uint64_t seed = 1;
  DesignSpace space = DesignSpace::building();

  // Criteria: P(overheat) < p_target and E(energy) < energy_target.
  double p_target = 0.01;
  double energy_target = 15.0;
  double extra_variance_overheat = 0.0;  // added to the logit variance
  double extra_variance_energy = 0.0;    // added to the mean-energy variance

  int candidates = 1'000'000;
  int initial_per_slice = 125;
  int initial_replicates = 2;
  int points_per_wave = 250;
  int replicates = 2;
  int max_waves = 3;
  double active_epsilon = 0.0;
  Retention retention = Retention::active_or_ruled_in;

  std::string simulator = "bundled";  // or "external:<dir>"
  double external_timeout_seconds = 86400.0;
  int external_poll_ms = 200;
  BuildingParams building{};

  int restarts = 5;
  int max_outer_iterations = 20;
  double outer_tolerance = 1e-6;
  double jitter_initial = 1e-8;
  double jitter_max = 1e-2;

  std::string preference = "window_size";
  int grid_resolution = 20;
  int histogram_bins = 20;
  int rps_samples = 1000;
};

RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

/// Fully expanded configuration (defaults included).
nlohmann::json to_json(const RunConfig& c);

/// SHA-256 of the expanded configuration without max_waves, so a finished
/// run may be extended by more waves.
std::string config_hash(const RunConfig& c);

std::vector<Criterion> make_criteria(const RunConfig& c);
WaveConfig make_wave_config(const RunConfig& c);
std::unique_ptr<Simulator> make_simulator(const RunConfig& c);

nlohmann::json space_to_json(const DesignSpace& space);
DesignSpace space_from_json(const nlohmann::json& j);

}  // namespace hmlse
