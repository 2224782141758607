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

#include "hmlse/external_adapter.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "hmlse/errors.hpp"

namespace hmlse {

namespace fs = std::filesystem;

namespace {

constexpr const char* kResultsHeader = "id,rep,energy_kwh_m2,overheat";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_int(const std::string& s, long long& out) {
  char* end = nullptr;
  out = std::strtoll(s.c_str(), &end, 10);
  return !s.empty() && end == s.c_str() + s.size();
}

bool parse_double(const std::string& s, double& out) {
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return !s.empty() && end == s.c_str() + s.size();
}

std::string job_name(long long id, long long rep) {
  return "(id " + std::to_string(id) + ", rep " + std::to_string(rep) + ")";
}

}  // namespace

fs::path resolve_exchange_dir(const fs::path& configured) {
  if (const char* env = std::getenv(kExchangeDirEnv); env && *env) return fs::path(env);
  return configured;
}

void write_requests_csv(std::ostream& out, const std::vector<SimJob>& jobs) {
  const Eigen::Index dim = jobs.empty() ? 0 : jobs.front().native.size();
  out << "id,rep,seed";
  for (Eigen::Index d = 0; d < dim; ++d) out << ",x" << d + 1;
  out << '\n';
  char buf[32];
  for (const auto& j : jobs) {
    if (j.native.size() != dim) throw ContractError("jobs in one batch must share a dimension");
    out << j.id << ',' << j.replicate << ',' << j.seed;
    for (Eigen::Index d = 0; d < dim; ++d) {
      std::snprintf(buf, sizeof buf, "%.17g", j.native[d]);
      out << ',' << buf;
    }
    out << '\n';
  }
}

std::vector<std::optional<SimRecord>> parse_results_csv(std::istream& in, const std::vector<SimJob>& jobs) {
  std::map<std::pair<long long, long long>, std::size_t> index;
  for (std::size_t i = 0; i < jobs.size(); ++i) index[{jobs[i].id, jobs[i].replicate}] = i;

  std::vector<std::optional<SimRecord>> out(jobs.size());
  std::vector<char> seen(jobs.size(), 0);
  std::vector<std::string> problems;

  std::string line;
  if (!std::getline(in, line) || trim(line) != kResultsHeader)
    throw SimulatorError(std::string("results.csv: header must be '") + kResultsHeader + "'");
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    const std::string where = "line " + std::to_string(line_no);
    long long id = 0, rep = 0;
    if (f.size() != 4 || !parse_int(trim(f[0]), id) || !parse_int(trim(f[1]), rep)) {
      problems.push_back(where + ": malformed row '" + line + "'");
      continue;
    }
    const auto it = index.find({id, rep});
    if (it == index.end()) {
      problems.push_back(where + ": unknown job " + job_name(id, rep));
      continue;
    }
    if (seen[it->second]) {
      problems.push_back(where + ": duplicate row for " + job_name(id, rep));
      continue;
    }
    seen[it->second] = 1;
    const std::string energy = trim(f[2]), flag = trim(f[3]);
    double e = 0.0;
    if (energy.empty() || energy == "nan" || energy == "NaN") continue;  // reported failure
    long long oh = 0;
    if (!parse_double(energy, e) || !std::isfinite(e) || !parse_int(flag, oh) || (oh != 0 && oh != 1)) {
      problems.push_back(where + ": malformed values for " + job_name(id, rep));
      continue;
    }
    const SimJob& job = jobs[it->second];
    out[it->second] = SimRecord{job.id, job.replicate, job.seed, e, static_cast<int>(oh)};
  }
  for (std::size_t i = 0; i < jobs.size(); ++i)
    if (!seen[i]) problems.push_back("missing row for " + job_name(jobs[i].id, jobs[i].replicate));
  if (!problems.empty()) {
    std::string msg = "results.csv: " + std::to_string(problems.size()) + " problem(s)";
    for (const auto& p : problems) msg += "\n  " + p;
    throw SimulatorError(msg);
  }
  return out;
}

ExternalSimulator::ExternalSimulator(ExternalAdapterSettings settings) : settings_(std::move(settings)) {
  settings_.exchange_dir = resolve_exchange_dir(settings_.exchange_dir);
  if (settings_.exchange_dir.empty()) throw ContractError("external simulator needs an exchange directory");
}

std::vector<std::optional<SimRecord>> ExternalSimulator::run_batch(const std::vector<SimJob>& jobs) {
  if (jobs.empty()) return {};
  fs::create_directories(settings_.exchange_dir);
  const fs::path requests = settings_.exchange_dir / "requests.csv";
  const fs::path results = settings_.exchange_dir / "results.csv";
  fs::remove(results);
  {
    const fs::path tmp = settings_.exchange_dir / "requests.csv.tmp";
    std::ofstream out(tmp);
    write_requests_csv(out, jobs);
    out.close();
    if (!out) throw SimulatorError("cannot write " + tmp.string());
    fs::rename(tmp, requests);
  }

  const auto deadline = std::chrono::steady_clock::now() + settings_.timeout;
  while (!fs::exists(results)) {
    if (std::chrono::steady_clock::now() >= deadline)
      throw SimulatorError("timed out waiting for " + results.string());
    std::this_thread::sleep_for(settings_.poll_interval);
  }
  std::ifstream in(results);
  if (!in) throw SimulatorError("cannot read " + results.string());
  return parse_results_csv(in, jobs);
}

}  // namespace hmlse
