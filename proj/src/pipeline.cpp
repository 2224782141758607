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

#include "hmlse/pipeline.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <charconv>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "hmlse/errors.hpp"
#include "hmlse/hash.hpp"
#include "hmlse/random.hpp"
#include "hmlse/snapshot.hpp"

namespace hmlse {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ContractError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes via a temporary and rename; returns the ledger artifact entry.
json write_artifact(const fs::path& root, const std::string& rel, const std::string& content) {
  const fs::path target = root / rel;
  fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out.flush()) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, target);
  return {{"path", rel}, {"sha256", sha256_hex(content)}};
}

json artifact_of(const fs::path& root, const std::string& rel) {
  return {{"path", rel}, {"sha256", sha256_file(root / rel)}};
}

std::string num(double v) {
  char buf[32];
  return std::string(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
}

std::string percent(double f) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << 100.0 * f << '%';
  return s.str();
}

void say(std::ostream* log, const std::string& msg) {
  if (log) *log << msg << std::endl;
}

json seed_lineage(std::uint64_t seed) {
  return {{"master", seed},
          {"candidates", derive_seed(seed, {kStreamCandidates})},
          {"initial_design", derive_seed(seed, {kStreamInitialDesign})},
          {"wave_batch", "derive(master, [3, wave])"},
          {"simulation", "derive(master, [4, point_id, replicate])"},
          {"fit", "derive(master, [5, wave, criterion])"},
          {"validation", "derive(master, [6, ...])"}};
}

CandidateSet candidates_for(const RunConfig& c) {
  return make_candidate_set(c.space, c.candidates, derive_seed(c.seed, {kStreamCandidates}));
}

json read_snapshot(const fs::path& dir, int wave) {
  const fs::path p = dir / wave_dir(wave) / "snapshot.json";
  if (!fs::exists(p)) throw ContractError("missing snapshot " + p.string());
  return json::parse(read_file(p));
}

WaveState restore(const fs::path& dir, const RunConfig& config, int wave) {
  WaveState state = initial_state(make_criteria(config), candidates_for(config));
  if (wave == 0) return state;
  const fs::path csv = dir / wave_dir(wave) / "candidates.csv";
  std::ifstream in(csv);
  if (!in) throw ContractError("missing candidate statuses " + csv.string());
  state.status = read_status_csv(in, state.criteria, state.candidates.points.rows());
  restore_snapshot(read_snapshot(dir, wave), config.space, state);
  return state;
}

std::string summary_csv(const std::vector<WaveSummary>& history) {
  std::string s =
      "wave,candidates,ruled_out,active,ruled_in,tenable,nroy_fraction,tenable_fraction,ruled_in_fraction,"
      "active_fraction,simulations,failed_jobs,training_points\n";
  for (const auto& h : history)
    s += std::to_string(h.wave) + ',' + std::to_string(h.candidates) + ',' + std::to_string(h.ruled_out) + ',' +
         std::to_string(h.active) + ',' + std::to_string(h.ruled_in) + ',' + std::to_string(h.tenable) + ',' +
         num(h.nroy_fraction) + ',' + num(h.tenable_fraction) + ',' + num(h.ruled_in_fraction) + ',' +
         num(h.active_fraction) + ',' + std::to_string(h.simulations) + ',' + std::to_string(h.failed_jobs) + ',' +
         std::to_string(h.training_points) + '\n';
  return s;
}

json write_wave(const fs::path& out, const RunConfig& config, const WaveState& state) {
  const int wave = state.wave;
  const std::string dir = wave_dir(wave);
  json artifacts = json::array();

  std::vector<Job> design;
  std::vector<SimRecord> records;
  for (const auto& p : state.points)
    if (p.wave == wave)
      for (int r = 0; r < (wave == 1 ? config.initial_replicates : config.replicates); ++r)
        design.push_back({p.point, static_cast<int>(p.id), r});
  for (const auto& r : state.records)
    if (state.points[static_cast<std::size_t>(r.id)].wave == wave) records.push_back(r);
  std::ostringstream d, s, c;
  write_design_csv(d, config.space, design);
  write_records_csv(s, records);
  write_status_csv(c, state.criteria, state.status);
  artifacts.push_back(write_artifact(out, dir + "/design.csv", d.str()));
  artifacts.push_back(write_artifact(out, dir + "/simulations.csv", s.str()));
  artifacts.push_back(write_artifact(out, dir + "/candidates.csv", c.str()));
  artifacts.push_back(write_artifact(out, dir + "/snapshot.json", snapshot_to_json(state).dump(1) + "\n"));
  for (const auto& f : write_nroy_report(out / dir, config.space, state, config.grid_resolution, config.histogram_bins))
    artifacts.push_back(artifact_of(out, dir + "/" + f));

  json hashes = json::array();
  for (const auto& e : state.emulators) hashes.push_back(training_hash(e));
  return {{"type", "wave"},
          {"wave", wave},
          {"summary", summary_to_json(state.history.back())},
          {"termination", to_string(state.termination)},
          {"training_sha256", hashes},
          {"artifacts", artifacts}};
}

void log_wave(std::ostream* log, const WaveSummary& h) {
  say(log, "wave " + std::to_string(h.wave) + ": " + std::to_string(h.simulations) + " simulations, " +
               std::to_string(h.training_points) + " training points; ruled out " + percent(1.0 - h.nroy_fraction) +
               ", active " + percent(h.active_fraction) + ", ruled in " + percent(h.ruled_in_fraction) +
               ", tenable " + percent(h.tenable_fraction));
}

}  // namespace

std::string wave_dir(int wave) { return "waves/wave_" + std::to_string(wave); }

// ---------------------------------------------------------------------------

RunLock::RunLock(const fs::path& dir) {
  fs::create_directories(dir);
  const std::string p = (dir / kLockFile).string();
  fd_ = ::open(p.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw ContractError("cannot open lock file " + p);
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw ContractError("another process is using " + dir.string());
  }
}

RunLock::~RunLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

RunLedger RunLedger::open(const fs::path& dir) {
  RunLedger l;
  l.path_ = dir / kLedgerFile;
  std::ifstream in(l.path_);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) l.entries_.push_back(json::parse(line));
  return l;
}

const json& RunLedger::header() const {
  if (entries_.empty() || entries_.front().value("type", "") != "run") throw ContractError("ledger has no run header");
  return entries_.front();
}

int RunLedger::last_wave() const {
  int w = 0;
  for (const auto& e : entries_)
    if (e.value("type", "") == "wave") w = e.at("wave").get<int>();
  return w;
}

void RunLedger::append(const json& entry) {
  for (const auto& e : entries_)
    if (e == entry) return;
  std::ofstream out(path_, std::ios::app);
  out << entry.dump() << '\n';
  if (!out.flush()) throw std::runtime_error("cannot append to " + path_.string());
  entries_.push_back(entry);
}

std::vector<std::string> verify_ledger(const fs::path& dir) {
  std::vector<std::string> problems;
  const RunLedger ledger = RunLedger::open(dir);
  if (ledger.empty()) return {"no ledger in " + dir.string()};
  for (const auto& e : ledger.entries()) {
    if (!e.contains("artifacts")) continue;
    for (const auto& a : e.at("artifacts")) {
      const fs::path p = dir / a.at("path").get<std::string>();
      if (!fs::exists(p))
        problems.push_back("missing " + p.string());
      else if (sha256_file(p) != a.at("sha256").get<std::string>())
        problems.push_back("hash mismatch " + p.string());
    }
  }
  return problems;
}

LoadedRun load_run(const fs::path& dir, std::optional<int> wave) {
  const RunLedger ledger = RunLedger::open(dir);
  if (ledger.empty()) throw ContractError("no run in " + dir.string());
  LoadedRun r;
  r.config = parse_config(json::parse(read_file(dir / kConfigFile)));
  r.config_hash = config_hash(r.config);
  if (r.config_hash != ledger.header().at("config_hash").get<std::string>())
    throw ConfigError("config.json does not match the ledger's config hash");
  const int w = wave.value_or(ledger.last_wave());
  if (w < 1 || w > ledger.last_wave()) throw ContractError("no completed wave snapshot in " + dir.string());
  r.state = restore(dir, r.config, w);
  return r;
}

// ---------------------------------------------------------------------------

RunOutcome run_pipeline(const RunConfig& config, const fs::path& out, std::ostream* log) {
  RunLock lock(out);
  RunLedger ledger = RunLedger::open(out);
  const std::string hash = config_hash(config);
  WaveConfig wc = make_wave_config(config);
  wc.warn = [log](const std::string& m) { (log ? *log : std::cerr) << "warning: " << m << std::endl; };

  WaveState state;
  if (ledger.empty()) {
    write_artifact(out, kConfigFile, to_json(config).dump(2) + "\n");
    ledger.append({{"type", "run"},
                   {"config_hash", hash},
                   {"seed_lineage", seed_lineage(config.seed)},
                   {"artifacts", json::array({artifact_of(out, kConfigFile)})}});
    state = initial_state(make_criteria(config), candidates_for(config));
    say(log, "initial design: " + std::to_string(config.space.n_slices()) + " equal slices of " +
                 std::to_string(config.initial_per_slice) + " points");
  } else {
    if (ledger.header().at("config_hash").get<std::string>() != hash)
      throw ConfigError("output directory holds a run with a different configuration (hash mismatch)");
    state = restore(out, config, ledger.last_wave());
    if (state.wave > 0) say(log, "resuming after wave " + std::to_string(state.wave));
  }

  const auto sim = make_simulator(config);
  state.termination = check_termination(state, wc);
  while (state.termination == Termination::none) {
    const int before = state.wave;
    run_wave(state, config.space, *sim, wc);
    if (state.wave == before) break;
    ledger.append(write_wave(out, config, state));
    log_wave(log, state.history.back());
  }

  RunOutcome outcome;
  outcome.termination = state.termination;
  outcome.history = state.history;
  json selections = json::array();
  for (SelectionPolicy p : {SelectionPolicy::tenable, SelectionPolicy::strict, SelectionPolicy::ruled_in}) {
    outcome.selections.push_back(final_selection(state, config.space, p, config.preference));
    selections.push_back(selection_to_json(outcome.selections.back(), config.space, state.criteria));
  }
  json artifacts = json::array();
  artifacts.push_back(write_artifact(out, kSelectionFile, selections.dump(2) + "\n"));
  artifacts.push_back(write_artifact(out, kSummaryFile, summary_csv(state.history)));
  ledger.append({{"type", "final"},
                 {"wave", state.wave},
                 {"termination", to_string(state.termination)},
                 {"artifacts", artifacts}});
  say(log, std::string("terminated: ") + to_string(state.termination) + " after wave " + std::to_string(state.wave));
  return outcome;
}

RunOutcome cmd_run(const RunOptions& options) {
  RunConfig config = load_config(options.config);
  if (options.seed) config.seed = *options.seed;
  if (options.max_waves) {
    if (*options.max_waves < 1) throw ConfigError("--max-waves must be positive");
    config.max_waves = *options.max_waves;
  }
  return run_pipeline(config, options.out, options.log);
}

// ---------------------------------------------------------------------------

std::vector<WaveValidation> cmd_validate(const fs::path& dir, int n, std::ostream* log) {
  if (n < 1) throw ContractError("validation needs n >= 1");
  RunLock lock(dir);
  RunLedger ledger = RunLedger::open(dir);
  if (ledger.empty() || ledger.last_wave() < 1) throw ContractError("no completed wave snapshot in " + dir.string());
  const RunConfig config = parse_config(json::parse(read_file(dir / kConfigFile)));
  const DesignSpace& space = config.space;
  const std::uint64_t seed = config.seed;

  const std::uint64_t design_seed = derive_seed(seed, {kStreamValidation, 0});
  const auto points = n % space.n_slices() == 0 ? sliced_latin_hypercube(space, n / space.n_slices(), design_seed)
                                                : latin_hypercube(space, n, design_seed);
  std::vector<SimJob> jobs;
  for (std::size_t i = 0; i < points.size(); ++i)
    jobs.push_back({static_cast<std::int64_t>(i), 0, derive_seed(seed, {kStreamValidation, 1, i}), points[i],
                    to_native(space, points[i])});
  WaveConfig wc = make_wave_config(config);
  wc.warn = [log](const std::string& m) { (log ? *log : std::cerr) << "warning: " << m << std::endl; };
  const auto sim = make_simulator(config);
  const auto records = run_jobs(*sim, jobs, wc, nullptr);
  if (records.empty()) throw SimulatorError("every validation simulation failed");

  PointMatrix x(static_cast<Eigen::Index>(records.size()), space.dimension());
  Eigen::VectorXd energy(x.rows());
  std::vector<int> overheat;
  for (std::size_t i = 0; i < records.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = pack(points[static_cast<std::size_t>(records[i].id)]);
    energy[static_cast<Eigen::Index>(i)] = records[i].energy_kwh_m2;
    overheat.push_back(records[i].overheated);
  }

  std::vector<WaveValidation> out;
  json reports = json::array();
  for (int w = 1; w <= ledger.last_wave(); ++w) {
    const json snap = read_snapshot(dir, w);
    WaveValidation v;
    v.wave = w;
    for (const auto& e : snap.at("emulators")) {
      const CriterionEmulator em = emulator_from_json(e);
      if (const auto* h = std::get_if<HetGpEmulator>(&em))
        v.coverage = interval_coverage(*h, x, energy);
      else
        v.rps = rps_report(std::get<ClassifierEmulator>(em), x, overheat, config.rps_samples,
                           derive_seed(seed, {kStreamValidation, 2, static_cast<std::uint64_t>(w)}));
    }
    reports.push_back({{"wave", w},
                       {"coverage",
                        {{"n_validation", v.coverage.n_validation},
                         {"n_within", v.coverage.n_within},
                         {"fraction", v.coverage.fraction},
                         {"nominal", v.coverage.nominal}}},
                       {"rps",
                        {{"observed", v.rps.observed_score},
                         {"reference_quantile_95", v.rps.reference_quantile_95},
                         {"pass", v.rps.pass}}}});
    say(log, "wave " + std::to_string(w) + ": 2-sd coverage " + percent(v.coverage.fraction) + " (nominal " +
                 percent(v.coverage.nominal) + "), RPS " + num(v.rps.observed_score) + " vs 95% reference " +
                 num(v.rps.reference_quantile_95) + (v.rps.pass ? " (pass)" : " (fail)"));
    out.push_back(v);
  }

  const std::string sub = "validation/n" + std::to_string(n);
  std::vector<Job> design;
  for (std::size_t i = 0; i < points.size(); ++i) design.push_back({points[i], static_cast<int>(i), 0});
  std::ostringstream d, s;
  write_design_csv(d, space, design);
  write_records_csv(s, records);
  json artifacts = json::array();
  artifacts.push_back(write_artifact(dir, sub + "/design.csv", d.str()));
  artifacts.push_back(write_artifact(dir, sub + "/simulations.csv", s.str()));
  artifacts.push_back(write_artifact(dir, sub + "/report.json", reports.dump(2) + "\n"));
  ledger.append({{"type", "validate"}, {"n", n}, {"artifacts", artifacts}});
  return out;
}

void cmd_report(const fs::path& dir, std::ostream* log) {
  RunLock lock(dir);
  const LoadedRun run = load_run(dir);
  json artifacts = json::array();
  for (const auto& f :
       write_nroy_report(dir / "report", run.config.space, run.state, run.config.grid_resolution, run.config.histogram_bins))
    artifacts.push_back(artifact_of(dir, "report/" + f));
  RunLedger ledger = RunLedger::open(dir);
  ledger.append({{"type", "report"}, {"wave", run.state.wave}, {"artifacts", artifacts}});
  say(log, "report for wave " + std::to_string(run.state.wave) + " written to " + (dir / "report").string());
}

std::vector<std::string> write_nroy_report(const fs::path& dir, const DesignSpace& space, const WaveState& state,
                                           int resolution, int bins) {
  const auto grids = projection_grids(space, state.candidates.points, state.status, resolution);
  const auto hists = nroy_histograms(space, state.candidates.points, state.status, bins);
  std::ostringstream g, h;
  write_grids_csv(g, space, grids);
  write_histograms_csv(h, space, hists);

  json names = json::array();
  for (const auto& v : space.variables()) names.push_back(v.name);
  json pairs = json::array();
  for (const auto& gr : grids)
    pairs.push_back({{"var_i", space.variables()[static_cast<std::size_t>(gr.var_i)].name},
                     {"var_j", space.variables()[static_cast<std::size_t>(gr.var_j)].name},
                     {"cells_i", gr.cells_i},
                     {"cells_j", gr.cells_j}});
  const json manifest{
      {"wave", state.wave},
      {"variables", names},
      {"grids",
       {{"file", "grids.csv"},
        {"columns", {"var_i", "var_j", "cell_i", "cell_j", "min_impl", "depth_log10", "count"}},
        {"missing", "NA"},
        {"resolution", resolution},
        {"min_impl_range", {-3, 3}},
        {"depth_log10_floor", kDepthFloorLog10},
        {"pairs", pairs}}},
      {"histograms",
       {{"file", "histograms.csv"},
        {"columns", {"var", "bin", "lower", "upper", "count", "nroy", "relative", "absolute"}},
        {"bins", bins}}},
  };
  write_artifact(dir, "grids.csv", g.str());
  write_artifact(dir, "histograms.csv", h.str());
  write_artifact(dir, "manifest.json", manifest.dump(2) + "\n");
  return {"grids.csv", "histograms.csv", "manifest.json"};
}

json selection_to_json(const SelectionReport& r, const DesignSpace& space, const std::vector<Criterion>& criteria) {
  json j{{"policy", to_string(r.policy)},
         {"bound", policy_bound(r.policy)},
         {"preference", r.preference},
         {"found", r.found},
         {"qualifying", r.qualifying}};
  if (!r.found) {
    j["message"] = "no qualifying design";
    return j;
  }
  json design;
  for (int i = 0; i < space.dimension(); ++i) design[space.variables()[static_cast<std::size_t>(i)].name] = r.native[i];
  json impl, prob;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    impl[criteria[c].name] = r.impl[c];
    prob[criteria[c].name] = r.prob_below[c];
  }
  j["candidate"] = r.candidate;
  j["design"] = design;
  j["impl_max"] = r.impl_max;
  j["impl"] = impl;
  j["prob_below"] = prob;
  j["joint_probability"] = r.joint_probability;
  return j;
}

}  // namespace hmlse
