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
#include <random>

#include "hmlse/random.hpp"
#include "hmlse/simulator.hpp"

namespace hmlse {

void sample_daily_weather(std::uint64_t seed, const WeatherParams& p, DailyWeather& w) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  const double stationary_sd = p.innovation_sd / std::sqrt(1.0 - p.ar_coefficient * p.ar_coefficient);
  w.annual_shift = p.noise ? p.annual_shift_sd * normal(rng) : 0.0;
  double anomaly = p.noise ? stationary_sd * normal(rng) : 0.0;
  // sin(2*pi*(day - phase)/365) advanced one day at a time by rotation.
  const double step_angle = 2.0 * M_PI / kDaysPerYear;
  const double cos_step = std::cos(step_angle), sin_step = std::sin(step_angle);
  double s = std::sin(step_angle * (-7 - p.phase_day)), c = std::cos(step_angle * (-7 - p.phase_day));
  auto seasonal = [&] {
    const double value = p.base_temperature + p.seasonal_amplitude * s;
    const double s_next = s * cos_step + c * sin_step;
    c = c * cos_step - s * sin_step;
    s = s_next;
    return value;
  };
  auto step = [&] {
    if (p.noise) anomaly = p.ar_coefficient * anomaly + p.innovation_sd * normal(rng);
  };

  for (int i = 0; i < 7; ++i) {
    w.burn_in[static_cast<std::size_t>(i)] = seasonal() + w.annual_shift + anomaly;
    step();
  }
  for (int d = 0; d < kDaysPerYear; ++d) {
    const auto du = static_cast<std::size_t>(d);
    w.mean[du] = seasonal() + w.annual_shift + anomaly;
    // Warm anomalies tend to be sunnier.
    const double cloud = p.noise ? 0.15 * anomaly / stationary_sd + 0.2 * normal(rng) : 0.0;
    w.solar_fraction[du] = std::clamp(0.6 + cloud, 0.05, 1.0);
    w.wind[du] = p.noise ? 0.5 + unif(rng) : 1.0;
    step();
  }
}

std::array<double, kHoursPerDay> diurnal_offsets(const WeatherParams& p) {
  std::array<double, kHoursPerDay> out{};
  for (int h = 0; h < kHoursPerDay; ++h)
    out[static_cast<std::size_t>(h)] =
        p.diurnal_amplitude * std::sin(2.0 * M_PI * (h - p.diurnal_peak_hour + 6.0) / kHoursPerDay);
  return out;
}

WeatherYear sample_weather(std::uint64_t seed, const WeatherParams& p) {
  DailyWeather daily;
  sample_daily_weather(seed, p, daily);
  WeatherYear w;
  w.daily_mean.assign(daily.mean.begin(), daily.mean.end());
  w.solar_fraction.assign(daily.solar_fraction.begin(), daily.solar_fraction.end());
  w.wind.assign(daily.wind.begin(), daily.wind.end());
  w.burn_in = daily.burn_in;
  w.annual_shift = daily.annual_shift;
  const auto diurnal = diurnal_offsets(p);
  w.hourly.resize(kHoursPerYear);
  for (int d = 0; d < kDaysPerYear; ++d)
    for (int h = 0; h < kHoursPerDay; ++h)
      w.hourly[static_cast<std::size_t>(d * kHoursPerDay + h)] =
          daily.mean[static_cast<std::size_t>(d)] + diurnal[static_cast<std::size_t>(h)];
  return w;
}

}  // namespace hmlse
