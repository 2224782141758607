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

#include "hmlse/snapshot.hpp"

#include <charconv>
#include <cstring>
#include <sstream>

#include "hmlse/errors.hpp"
#include "hmlse/hash.hpp"

namespace hmlse {

using nlohmann::json;

namespace {

json vec_to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json mat_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec_to_json(m.row(i).transpose()));
  return rows;
}

Eigen::MatrixXd mat_from_json(const json& j, Eigen::Index cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Eigen::VectorXd r = vec_from_json(j[i]);
    if (r.size() != cols) throw ContractError("snapshot matrix row has the wrong length");
    m.row(static_cast<Eigen::Index>(i)) = r.transpose();
  }
  return m;
}

json training_data(const CriterionEmulator& em) {
  if (const auto* c = std::get_if<ClassifierEmulator>(&em)) {
    const auto& d = c->data();
    return {{"inputs", mat_to_json(d.inputs)}, {"successes", vec_to_json(d.successes)}, {"trials", vec_to_json(d.trials)}};
  }
  const auto& s = std::get<HetGpEmulator>(em).state();
  return {{"inputs", mat_to_json(s.inputs)},
          {"mean_response", vec_to_json(s.mean_response)},
          {"replicates", vec_to_json(s.replicates)},
          {"log_noise", vec_to_json(s.log_noise)},
          {"logvar_targets", vec_to_json(s.logvar_targets)},
          {"logvar_noise", vec_to_json(s.logvar_noise)}};
}

void append_double(std::string& out, double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, r.ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ContractError("status CSV: bad number '" + std::string(s) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> f;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    f.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) return f;
    start = comma + 1;
  }
}

}  // namespace

json kernel_params_to_json(const KernelParams& p) {
  return {{"alpha2", p.alpha2}, {"lengthscales", vec_to_json(p.lengthscales)}, {"binary_corr", vec_to_json(p.binary_corr)}};
}

KernelParams kernel_params_from_json(const json& j) {
  KernelParams p;
  p.alpha2 = j.at("alpha2").get<double>();
  p.lengthscales = vec_from_json(j.at("lengthscales"));
  p.binary_corr = vec_from_json(j.at("binary_corr"));
  p.validate();
  return p;
}

std::string training_hash(const CriterionEmulator& em) { return sha256_hex(training_data(em).dump()); }

json emulator_to_json(const CriterionEmulator& em) {
  json j;
  if (const auto* c = std::get_if<ClassifierEmulator>(&em)) {
    j["type"] = "classifier";
    j["params"] = kernel_params_to_json(c->params());
    j["jitter"] = c->jitter();
    j["log_marginal"] = c->posterior().log_marginal;
  } else {
    const auto& h = std::get<HetGpEmulator>(em);
    const auto& s = h.state();
    j["type"] = "hetgp";
    j["mean_params"] = kernel_params_to_json(s.mean_params);
    j["logvar_params"] = kernel_params_to_json(s.logvar_params);
    j["standardization"] = {{"mean", s.response_mean}, {"sd", s.response_sd}, {"logvar_offset", s.logvar_offset}};
    j["outer_iterations"] = h.outer_iterations();
    j["log_posterior"] = h.log_posterior();
  }
  j["data"] = training_data(em);
  j["training_sha256"] = sha256_hex(j["data"].dump());
  return j;
}

CriterionEmulator emulator_from_json(const json& j) {
  const json& d = j.at("data");
  if (sha256_hex(d.dump()) != j.at("training_sha256").get<std::string>())
    throw ContractError("snapshot training data does not match its hash");
  const std::string type = j.at("type").get<std::string>();
  if (type == "classifier") {
    KernelParams p = kernel_params_from_json(j.at("params"));
    BinomialData data;
    data.inputs = mat_from_json(d.at("inputs"), p.n_params() - 1);
    data.successes = vec_from_json(d.at("successes"));
    data.trials = vec_from_json(d.at("trials"));
    return ClassifierEmulator::condition(std::move(data), std::move(p));
  }
  if (type != "hetgp") throw ContractError("unknown emulator type '" + type + "'");
  HetGpState s;
  s.mean_params = kernel_params_from_json(j.at("mean_params"));
  s.logvar_params = kernel_params_from_json(j.at("logvar_params"));
  const json& st = j.at("standardization");
  s.response_mean = st.at("mean").get<double>();
  s.response_sd = st.at("sd").get<double>();
  s.logvar_offset = st.at("logvar_offset").get<double>();
  s.inputs = mat_from_json(d.at("inputs"), s.mean_params.n_params() - 1);
  s.mean_response = vec_from_json(d.at("mean_response"));
  s.replicates = vec_from_json(d.at("replicates"));
  s.log_noise = vec_from_json(d.at("log_noise"));
  s.logvar_targets = vec_from_json(d.at("logvar_targets"));
  s.logvar_noise = vec_from_json(d.at("logvar_noise"));
  return HetGpEmulator::condition(std::move(s));
}

json summary_to_json(const WaveSummary& s) {
  return {{"wave", s.wave},
          {"candidates", s.candidates},
          {"ruled_out", s.ruled_out},
          {"active", s.active},
          {"ruled_in", s.ruled_in},
          {"tenable", s.tenable},
          {"nroy_fraction", s.nroy_fraction},
          {"tenable_fraction", s.tenable_fraction},
          {"ruled_in_fraction", s.ruled_in_fraction},
          {"active_fraction", s.active_fraction},
          {"simulations", s.simulations},
          {"failed_jobs", s.failed_jobs},
          {"training_points", s.training_points}};
}

WaveSummary summary_from_json(const json& j) {
  WaveSummary s;
  s.wave = j.at("wave").get<int>();
  s.candidates = j.at("candidates").get<Eigen::Index>();
  s.ruled_out = j.at("ruled_out").get<Eigen::Index>();
  s.active = j.at("active").get<Eigen::Index>();
  s.ruled_in = j.at("ruled_in").get<Eigen::Index>();
  s.tenable = j.at("tenable").get<Eigen::Index>();
  s.nroy_fraction = j.at("nroy_fraction").get<double>();
  s.tenable_fraction = j.at("tenable_fraction").get<double>();
  s.ruled_in_fraction = j.at("ruled_in_fraction").get<double>();
  s.active_fraction = j.at("active_fraction").get<double>();
  s.simulations = j.at("simulations").get<int>();
  s.failed_jobs = j.at("failed_jobs").get<int>();
  s.training_points = j.at("training_points").get<int>();
  return s;
}

json criterion_to_json(const Criterion& c) {
  return {{"name", c.name},
          {"kind", c.kind == EmulatorKind::classifier_logit ? "classifier_logit" : "hetgp_mean"},
          {"threshold", c.threshold},
          {"extra_variance", c.extra_variance}};
}

Termination termination_from_string(const std::string& s) {
  for (Termination t : {Termination::none, Termination::max_waves, Termination::converged, Termination::resolved,
                        Termination::level_set_empty})
    if (s == to_string(t)) return t;
  throw ContractError("unknown termination '" + s + "'");
}

void write_status_csv(std::ostream& out, const std::vector<Criterion>& criteria, const CandidateStatuses& s) {
  std::string buf = "candidate_id";
  for (const auto& c : criteria) buf += ",I_" + c.name;
  buf += ",I_max,state,wave_of_decision\n";
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    buf += std::to_string(i);
    for (Eigen::Index c = 0; c < s.impl.cols(); ++c) {
      buf += ',';
      append_double(buf, s.impl(i, c));
    }
    buf += ',';
    append_double(buf, s.impl_max[i]);
    buf += ',';
    buf += to_string(s.state[static_cast<std::size_t>(i)]);
    buf += ',';
    const int w = s.wave_of_decision[static_cast<std::size_t>(i)];
    if (w != kUndecided) buf += std::to_string(w);
    buf += '\n';
    if (buf.size() > (1u << 20)) {
      out << buf;
      buf.clear();
    }
  }
  out << buf;
}

CandidateStatuses read_status_csv(std::istream& in, const std::vector<Criterion>& criteria, Eigen::Index n) {
  const int nc = static_cast<int>(criteria.size());
  std::string line;
  std::string expected = "candidate_id";
  for (const auto& c : criteria) expected += ",I_" + c.name;
  expected += ",I_max,state,wave_of_decision";
  if (!std::getline(in, line) || line != expected) throw ContractError("status CSV: unexpected header");
  CandidateStatuses s = CandidateStatuses::all_active(n, nc);
  Eigen::Index i = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (static_cast<int>(f.size()) != nc + 4 || i >= n || parse_double(f[0]) != static_cast<double>(i))
      throw ContractError("status CSV: bad row " + std::to_string(i));
    for (int c = 0; c < nc; ++c) s.impl(i, c) = parse_double(f[static_cast<std::size_t>(1 + c)]);
    s.impl_max[i] = parse_double(f[static_cast<std::size_t>(nc + 1)]);
    s.state[static_cast<std::size_t>(i)] = candidate_state_from_string(std::string(f[static_cast<std::size_t>(nc + 2)]));
    const auto w = f[static_cast<std::size_t>(nc + 3)];
    s.wave_of_decision[static_cast<std::size_t>(i)] = w.empty() ? kUndecided : static_cast<int>(parse_double(w));
    ++i;
  }
  if (i != n) throw ContractError("status CSV: expected " + std::to_string(n) + " rows");
  return s;
}

json snapshot_to_json(const WaveState& state) {
  json j;
  j["wave"] = state.wave;
  j["termination"] = to_string(state.termination);
  j["criteria"] = json::array();
  for (const auto& c : state.criteria) j["criteria"].push_back(criterion_to_json(c));
  j["points"] = json::array();
  for (const auto& p : state.points)
    j["points"].push_back({{"id", p.id},
                           {"candidate", p.candidate},
                           {"wave", p.wave},
                           {"state", to_string(p.state)},
                           {"unit", vec_to_json(pack(p.point).transpose())}});
  j["records"] = json::array();
  for (const auto& r : state.records)
    j["records"].push_back({{"id", r.id},
                            {"rep", r.replicate},
                            {"seed", r.seed},
                            {"energy_kwh_m2", r.energy_kwh_m2},
                            {"overheat", r.overheated}});
  j["emulators"] = json::array();
  for (const auto& e : state.emulators) j["emulators"].push_back(emulator_to_json(e));
  j["history"] = json::array();
  for (const auto& h : state.history) j["history"].push_back(summary_to_json(h));
  return j;
}

void restore_snapshot(const json& j, const DesignSpace& space, WaveState& state) {
  const json& crit = j.at("criteria");
  if (crit.size() != state.criteria.size()) throw ContractError("snapshot criteria differ from the configuration");
  for (std::size_t c = 0; c < crit.size(); ++c)
    if (crit[c] != criterion_to_json(state.criteria[c]))
      throw ContractError("snapshot criterion '" + state.criteria[c].name + "' differs from the configuration");

  state.wave = j.at("wave").get<int>();
  state.termination = termination_from_string(j.at("termination").get<std::string>());
  state.points.clear();
  for (const auto& p : j.at("points")) {
    SimPoint sp;
    sp.id = p.at("id").get<std::int64_t>();
    sp.candidate = p.at("candidate").get<std::int64_t>();
    sp.wave = p.at("wave").get<int>();
    sp.state = candidate_state_from_string(p.at("state").get<std::string>());
    const Eigen::VectorXd u = vec_from_json(p.at("unit"));
    if (u.size() != space.dimension()) throw ContractError("snapshot point has the wrong dimension");
    sp.point = unpack(space, u.transpose());
    if (sp.id != static_cast<std::int64_t>(state.points.size())) throw ContractError("snapshot point ids not dense");
    state.points.push_back(std::move(sp));
  }
  state.records.clear();
  for (const auto& r : j.at("records")) {
    SimRecord rec;
    rec.id = r.at("id").get<std::int64_t>();
    rec.replicate = r.at("rep").get<int>();
    rec.seed = r.at("seed").get<std::uint64_t>();
    rec.energy_kwh_m2 = r.at("energy_kwh_m2").get<double>();
    rec.overheated = r.at("overheat").get<int>();
    state.records.push_back(rec);
  }
  state.emulators.clear();
  for (const auto& e : j.at("emulators")) state.emulators.push_back(emulator_from_json(e));
  if (state.emulators.size() != state.criteria.size()) throw ContractError("snapshot needs one emulator per criterion");
  state.history.clear();
  for (const auto& h : j.at("history")) state.history.push_back(summary_from_json(h));
}

void write_records_csv(std::ostream& out, const std::vector<SimRecord>& records) {
  std::string buf = "id,rep,seed,energy_kwh_m2,overheat\n";
  for (const auto& r : records) {
    buf += std::to_string(r.id) + ',' + std::to_string(r.replicate) + ',' + std::to_string(r.seed) + ',';
    append_double(buf, r.energy_kwh_m2);
    buf += ',' + std::to_string(r.overheated) + '\n';
  }
  out << buf;
}

}  // namespace hmlse
