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

#include <algorithm>
#include <cmath>
#include <limits>

#include "hmlse/errors.hpp"
#include "hmlse/random.hpp"
#include "hmlse/simulator.hpp"

namespace hmlse {

namespace {

// Native coordinates of the bundled eight-variable building space.
enum Input { kWall, kRoof, kGround, kWindow, kOverhang, kOpening, kEmissivity, kGlazing, kNumInputs };

constexpr double kHeatingSetpoint = 18.0;

struct SolarTables {
  std::array<double, kHoursPerDay> profile{};
  std::array<double, kDaysPerYear> season{};
  SolarTables() {
    for (int h = 6; h <= 20; ++h) profile[static_cast<std::size_t>(h)] = std::max(0.0, std::sin(M_PI * (h - 6) / 14.0));
    for (int d = 0; d < kDaysPerYear; ++d)
      season[static_cast<std::size_t>(d)] = 0.55 + 0.45 * std::sin(2.0 * M_PI * (d - 80) / kDaysPerYear);
  }
};

const SolarTables& solar() {
  static const SolarTables tables;
  return tables;
}

}  // namespace

namespace {

// Input-dependent constants shared by the full and the single-pass models.
struct Envelope {
  double heating_factor = 0.0;  // kWh per degree-day
  double solar_offset = 0.0;    // kWh
  double window_gain = 0.0;     // W at unit sun
  double roof_gain = 0.0;
  double conductance_base = 0.0;
  double purge = 0.0;           // W/K per unit wind
  double internal_gains = 0.0;
  double response = 0.0;
  std::array<double, kHoursPerDay> sun_gain{};  // W at full daily sun, by hour
};

Envelope envelope(const Eigen::Ref<const Eigen::VectorXd>& x, const BuildingParams& p) {
  if (x.size() != kNumInputs) throw ContractError("bundled simulator expects 8 inputs");
  const double k = p.insulation_conductivity;
  const double u_wall = 1.0 / (p.wall_base_resistance + x[kWall] / k);
  const double u_roof = 1.0 / (p.roof_base_resistance + x[kRoof] / k);
  const double u_ground = 1.0 / (p.ground_base_resistance + x[kGround] / k);
  const bool triple = x[kGlazing] != 0.0;
  const double window_area = p.max_window_area * x[kWindow];
  const double ua = u_wall * (p.wall_area - window_area) + u_roof * p.roof_area +
                    u_ground * p.ground_area * p.ground_factor +
                    (triple ? p.window_u_triple : p.window_u_double) * window_area + p.infiltration +
                    p.opening_leakage * x[kOpening];
  const double emissivity_unit = (x[kEmissivity] - 0.4) / 0.6;
  const double g = triple ? p.g_triple : p.g_double;

  Envelope e;
  e.heating_factor = ua * 24.0 / 1000.0 * (1.0 + p.emissivity_penalty * emissivity_unit);
  e.solar_offset = p.solar_credit * window_area * g * (1.0 - 0.3 * x[kOverhang]);
  e.window_gain = p.window_irradiance * window_area * p.g_double * (1.0 - p.overhang_shading * x[kOverhang]) *
                  (1.0 - p.glazing_solar_factor * (triple ? 1.0 : 0.0));
  e.roof_gain = p.roof_irradiance * p.roof_absorptance * p.roof_area * u_roof * p.roof_surface_resistance *
                (1.2 - 0.5 * x[kEmissivity]);
  e.conductance_base = ua + p.base_ventilation;
  e.purge = p.purge_ventilation * x[kOpening];
  e.internal_gains = p.internal_gains;
  e.response = p.thermal_response;
  const auto& profile = solar().profile;
  for (std::size_t h = 0; h < profile.size(); ++h) e.sun_gain[h] = profile[h] * (e.window_gain + e.roof_gain);
  return e;
}

template <class Daily>
double annual_energy(const Envelope& e, const Daily& daily_mean, const BuildingParams& p) {
  double degree_days = 0.0;
  for (double t : daily_mean) degree_days += std::max(0.0, p.heating_base - t);
  return std::max(0.0, degree_days * e.heating_factor - e.solar_offset) / p.floor_area;
}

// Advances the operative temperature through one day; t_out holds the 24
// outdoor temperatures. A NaN t_op starts at the first driven value.
inline void run_day(const Envelope& e, const double* t_out, double sun_day, double wind, double& t_op,
                    double* operative) {
  const double inv_conductance = 1.0 / (e.conductance_base + e.purge * wind);
  const double internal = e.internal_gains, response = e.response, keep = 1.0 - e.response;
  for (std::size_t h = 0; h < kHoursPerDay; ++h) {
    const double gains = internal + sun_day * e.sun_gain[h];
    const double target = std::max(kHeatingSetpoint, t_out[h] + gains * inv_conductance);
    if (std::isnan(t_op)) t_op = target;
    t_op = keep * t_op + response * target;
    operative[h] = t_op;
  }
}

}  // namespace

BuildingResult simulate_building(const Eigen::Ref<const Eigen::VectorXd>& x, const WeatherYear& weather,
                                 const BuildingParams& p) {
  const Envelope e = envelope(x, p);
  if (weather.hourly.size() != static_cast<std::size_t>(kHoursPerYear) ||
      weather.daily_mean.size() != static_cast<std::size_t>(kDaysPerYear))
    throw ContractError("weather year has wrong length");
  BuildingResult r;
  r.energy_kwh_m2 = annual_energy(e, weather.daily_mean, p);

  r.indoor.operative.resize(kHoursPerYear);
  static const std::vector<bool> occupancy = default_occupancy();
  r.indoor.occupied = occupancy;
  const auto& season = solar().season;
  double t_op = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t d = 0; d < kDaysPerYear; ++d) {
    const std::size_t first = d * kHoursPerDay;
    run_day(e, weather.hourly.data() + first, weather.solar_fraction[d] * season[d], weather.wind[d], t_op,
            r.indoor.operative.data() + first);
  }
  r.assessment = assess_overheating(r.indoor, weather, p.overheat);
  return r;
}

BuildingOutcome simulate_building_fast(const Eigen::Ref<const Eigen::VectorXd>& x, const DailyWeather& w,
                                       const BuildingParams& p) {
  const Envelope e = envelope(x, p);
  const OverheatSettings& s = p.overheat;
  BuildingOutcome out;
  out.energy_kwh_m2 = annual_energy(e, w.mean, p);

  double trm = 0.0;
  for (double t : w.burn_in) trm += t;
  trm /= 7.0;
  const auto diurnal = diurnal_offsets(p.weather);
  const auto& season = solar().season;
  int summer_hours = 0, hot_hours = 0;
  double peak = -std::numeric_limits<double>::infinity();
  double t_op = std::numeric_limits<double>::quiet_NaN();
  std::array<double, kHoursPerDay> t_out{}, hours{};
  for (int d = 0; d < kDaysPerYear; ++d) {
    const auto du = static_cast<std::size_t>(d);
    if (d > 0) trm = 0.2 * w.mean[du - 1] + 0.8 * trm;
    const double tmax = max_comfort(trm);
    for (std::size_t h = 0; h < kHoursPerDay; ++h) t_out[h] = w.mean[du] + diurnal[h];
    run_day(e, t_out.data(), w.solar_fraction[du] * season[du], w.wind[du], t_op, hours.data());
    // Occupied hours 7..22.
    double day_sum = 0.0;
    int hot = 0;
    for (std::size_t h = 7; h < 23; ++h) {
      const double dt = hours[h] - tmax;
      day_sum += s.daily_sum_positive_only ? std::max(dt, 0.0) : dt;
      hot += dt > s.frequency_delta;
      peak = std::max(peak, dt);
    }
    if (day_sum >= s.daily_sum_limit) out.criterion2 = true;
    if (d >= s.summer_first_day && d <= s.summer_last_day) {
      summer_hours += 16;
      hot_hours += hot;
    }
  }
  out.criterion3 = peak > s.peak_delta;
  out.criterion1 = summer_hours > 0 && hot_hours > s.frequency_fraction * summer_hours;
  out.overheated = int(out.criterion1) + int(out.criterion2) + int(out.criterion3) >= 2;
  return out;
}

SimRecord simulate(const InputPoint& x, std::uint64_t seed, const BuildingParams& params) {
  if (x.continuous.size() != 7 || x.binary.size() != 1) throw ContractError("bundled simulator expects 7+1 inputs");
  static const DesignSpace space = DesignSpace::building();
  const Eigen::VectorXd native = to_native(space, x);
  DailyWeather w;
  sample_daily_weather(seed, params.weather, w);
  const BuildingOutcome r = simulate_building_fast(native, w, params);
  SimRecord rec;
  rec.seed = seed;
  rec.energy_kwh_m2 = r.energy_kwh_m2;
  rec.overheated = r.overheated ? 1 : 0;
  return rec;
}

std::vector<std::optional<SimRecord>> BundledSimulator::run_batch(const std::vector<SimJob>& jobs) {
  std::vector<std::optional<SimRecord>> out;
  out.reserve(jobs.size());
  for (const auto& job : jobs) {
    SimRecord r = simulate(job.point, job.seed, params_);
    r.id = job.id;
    r.replicate = job.replicate;
    out.emplace_back(r);
  }
  return out;
}

MonteCarloEstimate monte_carlo(const InputPoint& x, int replicates, std::uint64_t seed, const BuildingParams& params) {
  if (replicates < 2) throw ContractError("monte_carlo needs at least 2 replicates");
  double hits = 0.0, sum = 0.0, sumsq = 0.0;
  for (int r = 0; r < replicates; ++r) {
    const SimRecord rec = simulate(x, derive_seed(seed, {static_cast<std::uint64_t>(r)}), params);
    hits += rec.overheated;
    sum += rec.energy_kwh_m2;
    sumsq += rec.energy_kwh_m2 * rec.energy_kwh_m2;
  }
  MonteCarloEstimate e;
  e.replicates = replicates;
  e.p_overheat = hits / replicates;
  e.p_overheat_se = std::sqrt(e.p_overheat * (1.0 - e.p_overheat) / replicates);
  e.mean_energy = sum / replicates;
  const double var = std::max(0.0, (sumsq - sum * sum / replicates) / (replicates - 1.0));
  e.mean_energy_se = std::sqrt(var / replicates);
  return e;
}

}  // namespace hmlse
