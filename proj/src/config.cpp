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

#include "hmlse/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "hmlse/errors.hpp"
#include "hmlse/hash.hpp"

namespace hmlse {

using nlohmann::json;

namespace {

struct DoubleField {
  const char* name;
  double BuildingParams::*member;
};

constexpr DoubleField kBuildingFields[] = {
    {"floor_area", &BuildingParams::floor_area},
    {"wall_area", &BuildingParams::wall_area},
    {"roof_area", &BuildingParams::roof_area},
    {"ground_area", &BuildingParams::ground_area},
    {"max_window_area", &BuildingParams::max_window_area},
    {"insulation_conductivity", &BuildingParams::insulation_conductivity},
    {"wall_base_resistance", &BuildingParams::wall_base_resistance},
    {"roof_base_resistance", &BuildingParams::roof_base_resistance},
    {"ground_base_resistance", &BuildingParams::ground_base_resistance},
    {"ground_factor", &BuildingParams::ground_factor},
    {"window_u_double", &BuildingParams::window_u_double},
    {"window_u_triple", &BuildingParams::window_u_triple},
    {"infiltration", &BuildingParams::infiltration},
    {"opening_leakage", &BuildingParams::opening_leakage},
    {"heating_base", &BuildingParams::heating_base},
    {"emissivity_penalty", &BuildingParams::emissivity_penalty},
    {"solar_credit", &BuildingParams::solar_credit},
    {"g_double", &BuildingParams::g_double},
    {"g_triple", &BuildingParams::g_triple},
    {"internal_gains", &BuildingParams::internal_gains},
    {"window_irradiance", &BuildingParams::window_irradiance},
    {"roof_irradiance", &BuildingParams::roof_irradiance},
    {"roof_absorptance", &BuildingParams::roof_absorptance},
    {"roof_surface_resistance", &BuildingParams::roof_surface_resistance},
    {"base_ventilation", &BuildingParams::base_ventilation},
    {"purge_ventilation", &BuildingParams::purge_ventilation},
    {"overhang_shading", &BuildingParams::overhang_shading},
    {"glazing_solar_factor", &BuildingParams::glazing_solar_factor},
    {"thermal_response", &BuildingParams::thermal_response},
};

struct WeatherField {
  const char* name;
  double WeatherParams::*member;
};

constexpr WeatherField kWeatherFields[] = {
    {"base_temperature", &WeatherParams::base_temperature},
    {"seasonal_amplitude", &WeatherParams::seasonal_amplitude},
    {"phase_day", &WeatherParams::phase_day},
    {"annual_shift_sd", &WeatherParams::annual_shift_sd},
    {"ar_coefficient", &WeatherParams::ar_coefficient},
    {"innovation_sd", &WeatherParams::innovation_sd},
    {"diurnal_amplitude", &WeatherParams::diurnal_amplitude},
    {"diurnal_peak_hour", &WeatherParams::diurnal_peak_hour},
};

// Object wrapper that rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }
  ~Section() = default;

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key);
  }
  const json& at(const std::string& key) { return used_.insert(key), j_.at(key); }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }
  Section sub(const std::string& key) { return Section(at(key), where(key)); }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!used_.count(k)) throw ConfigError("unknown key " + where(k));
  }
  std::string where(const std::string& key = "") const {
    return path_.empty() ? key : (key.empty() ? path_ : path_ + "." + key);
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

const char* to_string(Retention r) { return r == Retention::nroy_only ? "nroy_only" : "active_or_ruled_in"; }

}  // namespace

json space_to_json(const DesignSpace& space) {
  json arr = json::array();
  for (const auto& v : space.variables()) {
    json o{{"name", v.name}, {"kind", v.kind == VariableKind::binary ? "binary" : "continuous"}};
    if (v.kind == VariableKind::continuous) {
      o["lower"] = v.lower;
      o["upper"] = v.upper;
    }
    arr.push_back(o);
  }
  return arr;
}

DesignSpace space_from_json(const json& j) {
  require(j.is_array() && !j.empty(), "design_space must be a nonempty array");
  std::vector<VariableSpec> vars;
  for (std::size_t i = 0; i < j.size(); ++i) {
    Section s(j[i], "design_space[" + std::to_string(i) + "]");
    VariableSpec v;
    std::string kind = "continuous";
    s.get("name", v.name);
    s.get("kind", kind);
    require(!v.name.empty(), s.where("name") + " is required");
    if (kind == "binary") {
      v.kind = VariableKind::binary;
    } else if (kind == "continuous") {
      v.kind = VariableKind::continuous;
      require(s.has("lower") && s.has("upper"), s.where() + " needs lower and upper");
      s.get("lower", v.lower);
      s.get("upper", v.upper);
    } else {
      throw ConfigError(s.where("kind") + " must be 'continuous' or 'binary'");
    }
    s.finish();
    vars.push_back(v);
  }
  try {
    return DesignSpace(std::move(vars));
  } catch (const ContractError& e) {
    throw ConfigError(std::string("design_space: ") + e.what());
  }
}

RunConfig parse_config(const json& j) {
  RunConfig c;
  Section root(j, "");
  root.get("seed", c.seed);
  if (root.has("design_space")) c.space = space_from_json(root.at("design_space"));
  if (root.has("criteria")) {
    auto s = root.sub("criteria");
    s.get("p_target", c.p_target);
    s.get("energy_target", c.energy_target);
    if (s.has("extra_variance")) {
      auto e = s.sub("extra_variance");
      e.get("overheat", c.extra_variance_overheat);
      e.get("energy", c.extra_variance_energy);
      e.finish();
    }
    s.finish();
  }
  root.get("candidates", c.candidates);
  if (root.has("initial")) {
    auto s = root.sub("initial");
    s.get("per_slice", c.initial_per_slice);
    s.get("replicates", c.initial_replicates);
    s.finish();
  }
  if (root.has("waves")) {
    auto s = root.sub("waves");
    s.get("points", c.points_per_wave);
    s.get("replicates", c.replicates);
    s.get("max_waves", c.max_waves);
    s.get("active_epsilon", c.active_epsilon);
    s.finish();
  }
  if (root.has("retain")) {
    std::string r;
    root.get("retain", r);
    if (r == "nroy_only")
      c.retention = Retention::nroy_only;
    else if (r == "active_or_ruled_in")
      c.retention = Retention::active_or_ruled_in;
    else
      throw ConfigError("retain must be 'active_or_ruled_in' or 'nroy_only'");
  }
  root.get("simulator", c.simulator);
  if (root.has("external")) {
    auto s = root.sub("external");
    s.get("timeout_seconds", c.external_timeout_seconds);
    s.get("poll_ms", c.external_poll_ms);
    s.finish();
  }
  if (root.has("bundled")) {
    auto s = root.sub("bundled");
    for (const auto& f : kBuildingFields) s.get(f.name, c.building.*f.member);
    if (s.has("weather")) {
      auto w = s.sub("weather");
      for (const auto& f : kWeatherFields) w.get(f.name, c.building.weather.*f.member);
      w.get("noise", c.building.weather.noise);
      w.finish();
    }
    if (s.has("overheat")) {
      auto o = s.sub("overheat");
      auto& oh = c.building.overheat;
      o.get("summer_first_day", oh.summer_first_day);
      o.get("summer_last_day", oh.summer_last_day);
      o.get("frequency_fraction", oh.frequency_fraction);
      o.get("frequency_delta", oh.frequency_delta);
      o.get("daily_sum_limit", oh.daily_sum_limit);
      o.get("peak_delta", oh.peak_delta);
      o.get("daily_sum_positive_only", oh.daily_sum_positive_only);
      o.finish();
    }
    s.finish();
  }
  if (root.has("emulator")) {
    auto s = root.sub("emulator");
    s.get("restarts", c.restarts);
    s.get("max_outer_iterations", c.max_outer_iterations);
    s.get("tolerance", c.outer_tolerance);
    s.get("jitter_initial", c.jitter_initial);
    s.get("jitter_max", c.jitter_max);
    s.finish();
  }
  if (root.has("selection")) {
    auto s = root.sub("selection");
    s.get("preference", c.preference);
    s.finish();
  }
  if (root.has("diagnostics")) {
    auto s = root.sub("diagnostics");
    s.get("grid_resolution", c.grid_resolution);
    s.get("histogram_bins", c.histogram_bins);
    s.get("rps_samples", c.rps_samples);
    s.finish();
  }
  root.finish();

  require(c.p_target > 0.0 && c.p_target < 1.0, "criteria.p_target must lie in (0,1)");
  require(std::isfinite(c.energy_target), "criteria.energy_target must be finite");
  require(c.extra_variance_overheat >= 0.0 && c.extra_variance_energy >= 0.0, "extra variances must be >= 0");
  require(c.candidates > 0 && c.initial_per_slice > 0 && c.initial_replicates > 0 && c.points_per_wave > 0 &&
              c.replicates > 0 && c.max_waves > 0,
          "all counts must be positive");
  require(c.active_epsilon >= 0.0 && c.active_epsilon < 1.0, "waves.active_epsilon must lie in [0,1)");
  require(c.restarts > 0 && c.max_outer_iterations > 0 && c.outer_tolerance > 0.0, "emulator settings must be positive");
  require(c.jitter_initial > 0.0 && c.jitter_max >= c.jitter_initial, "need 0 < jitter_initial <= jitter_max");
  require(c.grid_resolution > 0 && c.histogram_bins > 0 && c.rps_samples > 0, "diagnostic sizes must be positive");
  require(c.external_timeout_seconds > 0.0 && c.external_poll_ms > 0, "external timing must be positive");
  require(c.simulator == "bundled" || c.simulator.rfind("external:", 0) == 0,
          "simulator must be 'bundled' or 'external:<dir>'");
  if (c.simulator == "bundled")
    require(c.space.n_continuous() == 7 && c.space.n_binary() == 1,
            "the bundled simulator needs the 7 continuous + 1 binary building space");
  try {
    c.space.index_of(c.preference);
  } catch (const ContractError&) {
    throw ConfigError("selection.preference names no design variable: '" + c.preference + "'");
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

json to_json(const RunConfig& c) {
  json bundled;
  for (const auto& f : kBuildingFields) bundled[f.name] = c.building.*f.member;
  json weather;
  for (const auto& f : kWeatherFields) weather[f.name] = c.building.weather.*f.member;
  weather["noise"] = c.building.weather.noise;
  bundled["weather"] = weather;
  const auto& oh = c.building.overheat;
  bundled["overheat"] = {{"summer_first_day", oh.summer_first_day},
                         {"summer_last_day", oh.summer_last_day},
                         {"frequency_fraction", oh.frequency_fraction},
                         {"frequency_delta", oh.frequency_delta},
                         {"daily_sum_limit", oh.daily_sum_limit},
                         {"peak_delta", oh.peak_delta},
                         {"daily_sum_positive_only", oh.daily_sum_positive_only}};
  return json{
      {"seed", c.seed},
      {"design_space", space_to_json(c.space)},
      {"criteria",
       {{"p_target", c.p_target},
        {"energy_target", c.energy_target},
        {"extra_variance", {{"overheat", c.extra_variance_overheat}, {"energy", c.extra_variance_energy}}}}},
      {"candidates", c.candidates},
      {"initial", {{"per_slice", c.initial_per_slice}, {"replicates", c.initial_replicates}}},
      {"waves",
       {{"points", c.points_per_wave},
        {"replicates", c.replicates},
        {"max_waves", c.max_waves},
        {"active_epsilon", c.active_epsilon}}},
      {"retain", to_string(c.retention)},
      {"simulator", c.simulator},
      {"external", {{"timeout_seconds", c.external_timeout_seconds}, {"poll_ms", c.external_poll_ms}}},
      {"bundled", bundled},
      {"emulator",
       {{"restarts", c.restarts},
        {"max_outer_iterations", c.max_outer_iterations},
        {"tolerance", c.outer_tolerance},
        {"jitter_initial", c.jitter_initial},
        {"jitter_max", c.jitter_max}}},
      {"selection", {{"preference", c.preference}}},
      {"diagnostics",
       {{"grid_resolution", c.grid_resolution}, {"histogram_bins", c.histogram_bins}, {"rps_samples", c.rps_samples}}},
  };
}

std::string config_hash(const RunConfig& c) {
  json j = to_json(c);
  j["waves"].erase("max_waves");
  return sha256_hex(j.dump());
}

std::vector<Criterion> make_criteria(const RunConfig& c) {
  return {Criterion::probability("overheat", c.p_target, c.extra_variance_overheat),
          Criterion::mean("energy", c.energy_target, c.extra_variance_energy)};
}

WaveConfig make_wave_config(const RunConfig& c) {
  WaveConfig w;
  w.seed = c.seed;
  w.initial_per_slice = c.initial_per_slice;
  w.initial_replicates = c.initial_replicates;
  w.points_per_wave = c.points_per_wave;
  w.replicates = c.replicates;
  w.max_waves = c.max_waves;
  w.active_epsilon = c.active_epsilon;
  w.retention = c.retention;
  FitSettings fit;
  fit.restarts = c.restarts;
  fit.jitter = {c.jitter_initial, c.jitter_max};
  w.classifier_fit = fit;
  w.hetgp_fit.fit = fit;
  w.hetgp_fit.max_outer_iterations = c.max_outer_iterations;
  w.hetgp_fit.tolerance = c.outer_tolerance;
  return w;
}

std::unique_ptr<Simulator> make_simulator(const RunConfig& c) {
  if (c.simulator == "bundled") return std::make_unique<BundledSimulator>(c.building);
  ExternalAdapterSettings s;
  s.exchange_dir = c.simulator.substr(std::string("external:").size());
  s.timeout = std::chrono::milliseconds(static_cast<long long>(c.external_timeout_seconds * 1000.0));
  s.poll_interval = std::chrono::milliseconds(c.external_poll_ms);
  return std::make_unique<ExternalSimulator>(std::move(s));
}

}  // namespace hmlse
