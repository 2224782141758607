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

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "hmlse/design_space.hpp"

namespace hmlse {

inline constexpr int kDaysPerYear = 365;
inline constexpr int kHoursPerDay = 24;
inline constexpr int kHoursPerYear = kDaysPerYear * kHoursPerDay;

// ---------------------------------------------------------------------------
// Weather

/// Constants of the bundled stochastic weather generator.
struct WeatherParams {
  double base_temperature = 12.0;   // annual mean of daily means, deg C
  double seasonal_amplitude = 9.0;
  double phase_day = 105.0;         // sin(2*pi*(d - phase)/365)
  double annual_shift_sd = 1.0;     // per-year offset A ~ N(0, sd)
  double ar_coefficient = 0.7;      // lag-1 coefficient of the daily anomaly
  double innovation_sd = 1.5;
  double diurnal_amplitude = 4.0;   // hourly swing around the daily mean
  double diurnal_peak_hour = 15.0;
  bool noise = true;                // false: deterministic sinusoid, A = 0
};

struct WeatherYear {
  std::vector<double> daily_mean;       // 365, deg C; day index 0 is 1 January
  std::vector<double> hourly;           // 8760, deg C
  std::array<double, 7> burn_in{};      // daily means of the week before day 0
  std::vector<double> solar_fraction;   // 365, clear-sky fraction in [0,1]
  std::vector<double> wind;             // 365, relative wind speed
  double annual_shift = 0.0;
};

WeatherYear sample_weather(std::uint64_t seed, const WeatherParams& params = {});

/// Daily part of a weather year without the hourly series; drawn from the
/// same random stream as sample_weather, so both agree for a given seed.
struct DailyWeather {
  std::array<double, kDaysPerYear> mean{};
  std::array<double, kDaysPerYear> solar_fraction{};
  std::array<double, kDaysPerYear> wind{};
  std::array<double, 7> burn_in{};
  double annual_shift = 0.0;
};
void sample_daily_weather(std::uint64_t seed, const WeatherParams& params, DailyWeather& out);

/// Hourly offsets of the diurnal cycle around the daily mean.
std::array<double, kHoursPerDay> diurnal_offsets(const WeatherParams& params);

// ---------------------------------------------------------------------------
// Adaptive comfort (CIBSE TM52 style)

/// T_rm(d) = 0.2 * T_od(d-1) + 0.8 * T_rm(d-1); out[0] = initial.
std::vector<double> running_mean(const std::vector<double>& daily_outdoor, double initial);

/// Upper comfort limit 0.33 * T_rm + 21.8.
constexpr double max_comfort(double running_mean_temperature) { return 0.33 * running_mean_temperature + 21.8; }

/// Occupied hours 07:00-23:00 (hours 7..22 inclusive) every day.
std::vector<bool> default_occupancy();

struct IndoorSeries {
  std::vector<double> operative;  // 8760 hourly operative temperatures
  std::vector<bool> occupied;     // 8760
};

struct OverheatSettings {
  int summer_first_day = 120;    // 1 May, zero-based, non-leap year
  int summer_last_day = 272;     // 30 September
  double frequency_fraction = 0.03;
  double frequency_delta = 1.0;
  double daily_sum_limit = 6.0;
  double peak_delta = 4.0;
  bool daily_sum_positive_only = false;  // literal reading sums every occupied hour
};

struct OverheatAssessment {
  std::vector<double> delta_t;  // T_op - T_max, hourly
  bool criterion1 = false;      // frequency
  bool criterion2 = false;      // daily severity
  bool criterion3 = false;      // peak
  bool overheated = false;      // two or more broken
  int criteria_broken() const { return int(criterion1) + int(criterion2) + int(criterion3); }
};

/// Applies the three criteria to a precomputed hourly Delta T series.
OverheatAssessment assess_delta_t(std::vector<double> delta_t, const std::vector<bool>& occupied,
                                  const OverheatSettings& settings = {});

/// Computes Delta T from the indoor series and the weather's running mean
/// (initialized from the burn-in week), then applies the criteria.
OverheatAssessment assess_overheating(const IndoorSeries& indoor, const WeatherYear& weather,
                                      const OverheatSettings& settings = {});

// ---------------------------------------------------------------------------
// Simulation records and the simulator seam

struct SimRecord {
  std::int64_t id = 0;         // simulated-point id within the run
  int replicate = 0;
  std::uint64_t seed = 0;
  double energy_kwh_m2 = 0.0;
  int overheated = 0;
};

struct SimJob {
  std::int64_t id = 0;
  int replicate = 0;
  std::uint64_t seed = 0;
  InputPoint point;            // unit scale
  Eigen::VectorXd native;      // native units
};

/// Anything that can turn a batch of jobs into records. A missing entry
/// (nullopt) marks a failed job.
class Simulator {
 public:
  virtual ~Simulator() = default;
  virtual std::vector<std::optional<SimRecord>> run_batch(const std::vector<SimJob>& jobs) = 0;
};

/// Physical constants of the bundled building model.
struct BuildingParams {
  WeatherParams weather{};
  OverheatSettings overheat{};
  double floor_area = 100.0;          // m^2
  double wall_area = 120.0;           // gross, m^2
  double roof_area = 50.0;
  double ground_area = 50.0;
  double max_window_area = 30.0;      // at window_size = 1
  double insulation_conductivity = 0.035;
  double wall_base_resistance = 2.0;  // m^2K/W without added insulation
  double roof_base_resistance = 2.0;
  double ground_base_resistance = 1.0;
  double ground_factor = 0.5;
  double window_u_double = 1.4;
  double window_u_triple = 0.8;
  double infiltration = 6.0;          // W/K
  double opening_leakage = 4.0;       // W/K at full opening
  double heating_base = 13.5;         // degree-day base, deg C
  double emissivity_penalty = 0.15;   // relative heating increase at max emissivity
  double solar_credit = 40.0;         // kWh per m^2 of window in the heating season
  double g_double = 0.6;
  double g_triple = 0.45;
  double internal_gains = 150.0;      // W
  double window_irradiance = 150.0;   // W/m^2 peak on glazing
  double roof_irradiance = 800.0;     // W/m^2 peak on roof
  double roof_absorptance = 0.7;
  double roof_surface_resistance = 0.04;
  double base_ventilation = 80.0;     // W/K
  double purge_ventilation = 350.0;   // W/K at full opening and unit wind
  double overhang_shading = 0.6;
  double glazing_solar_factor = 0.5;
  double thermal_response = 0.25;     // per-hour relaxation toward the driven temperature
};

struct BuildingResult {
  double energy_kwh_m2 = 0.0;
  IndoorSeries indoor;
  OverheatAssessment assessment;
};

/// Runs the bundled model for one eight-variable input and one weather year.
BuildingResult simulate_building(const Eigen::Ref<const Eigen::VectorXd>& native, const WeatherYear& weather,
                                 const BuildingParams& params = {});

/// Energy and overheat flag for one input and weather year in a single pass
/// (no hourly series kept). Agrees with simulate_building.
struct BuildingOutcome {
  double energy_kwh_m2 = 0.0;
  bool criterion1 = false, criterion2 = false, criterion3 = false;
  bool overheated = false;
};
BuildingOutcome simulate_building_fast(const Eigen::Ref<const Eigen::VectorXd>& native, const DailyWeather& weather,
                                       const BuildingParams& params = {});

/// One stochastic replicate: weather drawn from `seed`.
SimRecord simulate(const InputPoint& x, std::uint64_t seed, const BuildingParams& params = {});

class BundledSimulator final : public Simulator {
 public:
  explicit BundledSimulator(BuildingParams params = {}) : params_(std::move(params)) {}
  std::vector<std::optional<SimRecord>> run_batch(const std::vector<SimJob>& jobs) override;
  const BuildingParams& params() const noexcept { return params_; }

 private:
  BuildingParams params_;
};

/// Monte-Carlo estimate of P(overheat) and E(energy) at x.
struct MonteCarloEstimate {
  double p_overheat = 0.0;
  double p_overheat_se = 0.0;
  double mean_energy = 0.0;
  double mean_energy_se = 0.0;
  int replicates = 0;
};
MonteCarloEstimate monte_carlo(const InputPoint& x, int replicates, std::uint64_t seed,
                               const BuildingParams& params = {});

}  // namespace hmlse
