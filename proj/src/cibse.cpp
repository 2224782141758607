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

#include <numeric>

#include "hmlse/errors.hpp"
#include "hmlse/simulator.hpp"

namespace hmlse {

std::vector<double> running_mean(const std::vector<double>& daily_outdoor, double initial) {
  std::vector<double> trm(daily_outdoor.size());
  if (trm.empty()) return trm;
  trm[0] = initial;
  for (std::size_t d = 1; d < trm.size(); ++d) trm[d] = 0.2 * daily_outdoor[d - 1] + 0.8 * trm[d - 1];
  return trm;
}

std::vector<bool> default_occupancy() {
  std::vector<bool> mask(kHoursPerYear, false);
  for (int d = 0; d < kDaysPerYear; ++d)
    for (int h = 7; h < 23; ++h) mask[static_cast<std::size_t>(d * kHoursPerDay + h)] = true;
  return mask;
}

OverheatAssessment assess_delta_t(std::vector<double> delta_t, const std::vector<bool>& occupied,
                                  const OverheatSettings& s) {
  if (delta_t.size() != static_cast<std::size_t>(kHoursPerYear) || occupied.size() != delta_t.size())
    throw ContractError("assess_overheating needs 8760 hourly values and an 8760-hour occupancy mask");
  OverheatAssessment a;

  // Criterion 1: share of occupied summer hours with Delta T strictly above 1 K.
  int summer_hours = 0, hot_hours = 0;
  for (int d = s.summer_first_day; d <= s.summer_last_day; ++d)
    for (int h = 0; h < kHoursPerDay; ++h) {
      const auto i = static_cast<std::size_t>(d * kHoursPerDay + h);
      if (!occupied[i]) continue;
      ++summer_hours;
      if (delta_t[i] > s.frequency_delta) ++hot_hours;
    }
  a.criterion1 = summer_hours > 0 && hot_hours > s.frequency_fraction * summer_hours;

  // Criterion 2: any day whose occupied-hour Delta T sums to at least 6.
  // Criterion 3: any occupied hour with Delta T strictly above 4 K.
  for (int d = 0; d < kDaysPerYear && !(a.criterion2 && a.criterion3); ++d) {
    double day_sum = 0.0;
    for (int h = 0; h < kHoursPerDay; ++h) {
      const auto i = static_cast<std::size_t>(d * kHoursPerDay + h);
      if (!occupied[i]) continue;
      const double dt = delta_t[i];
      day_sum += s.daily_sum_positive_only ? std::max(dt, 0.0) : dt;
      if (dt > s.peak_delta) a.criterion3 = true;
    }
    if (day_sum >= s.daily_sum_limit) a.criterion2 = true;
  }

  a.overheated = a.criteria_broken() >= 2;
  a.delta_t = std::move(delta_t);
  return a;
}

OverheatAssessment assess_overheating(const IndoorSeries& indoor, const WeatherYear& weather,
                                      const OverheatSettings& settings) {
  if (indoor.operative.size() != static_cast<std::size_t>(kHoursPerYear) ||
      weather.daily_mean.size() != static_cast<std::size_t>(kDaysPerYear))
    throw ContractError("assess_overheating: inconsistent series lengths");
  const double init = std::accumulate(weather.burn_in.begin(), weather.burn_in.end(), 0.0) / 7.0;
  const auto trm = running_mean(weather.daily_mean, init);
  std::vector<double> dt(kHoursPerYear);
  for (int d = 0; d < kDaysPerYear; ++d) {
    const double tmax = max_comfort(trm[static_cast<std::size_t>(d)]);
    for (int h = 0; h < kHoursPerDay; ++h) {
      const auto i = static_cast<std::size_t>(d * kHoursPerDay + h);
      dt[i] = indoor.operative[i] - tmax;
    }
  }
  return assess_delta_t(std::move(dt), indoor.occupied, settings);
}

}  // namespace hmlse
