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

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "doctest.h"

#include "hmlse/errors.hpp"
#include "hmlse/pipeline.hpp"

using namespace hmlse;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

RunConfig small_config(int max_waves) {
  return parse_config(json{{"seed", 11},
                           {"candidates", 4000},
                           {"initial", {{"per_slice", 12}, {"replicates", 2}}},
                           {"waves", {{"points", 12}, {"replicates", 2}, {"max_waves", max_waves}}},
                           {"emulator", {{"restarts", 2}}},
                           {"diagnostics", {{"rps_samples", 200}}}});
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("hmlse_pipeline_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Relative path -> content for every regular file except the ones named.
std::map<std::string, std::string> tree(const fs::path& root, const std::vector<std::string>& skip = {}) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const std::string rel = fs::relative(e.path(), root).generic_string();
    if (rel == kLockFile || std::find(skip.begin(), skip.end(), rel) != skip.end()) continue;
    out[rel] = slurp(e.path());
  }
  return out;
}

// Keeps the ledger lines up to and including the entry of `wave`.
void truncate_ledger_after(const fs::path& dir, int wave) {
  std::ifstream in(dir / kLedgerFile);
  std::string line, kept;
  while (std::getline(in, line)) {
    kept += line + "\n";
    const json e = json::parse(line);
    if (e.value("type", "") == "wave" && e.at("wave").get<int>() == wave) break;
  }
  in.close();
  std::ofstream(dir / kLedgerFile, std::ios::trunc) << kept;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("identical configurations give byte-identical run directories") {
    const auto a = fresh_dir("det_a"), b = fresh_dir("det_b");
    const auto ra = run_pipeline(small_config(2), a);
    const auto rb = run_pipeline(small_config(2), b);
    CHECK(ra.history.size() == rb.history.size());
    CHECK(tree(a) == tree(b));
    CHECK(verify_ledger(a).empty());
    CHECK(fs::exists(a / "waves/wave_1/snapshot.json"));
    CHECK(fs::exists(a / kSelectionFile));
    CHECK(fs::exists(a / kSummaryFile));

    std::ofstream(a / "waves/wave_1/design.csv", std::ios::app) << "tampered\n";
    CHECK_FALSE(verify_ledger(a).empty());
    fs::remove_all(a);
    fs::remove_all(b);
  }

  TEST_CASE("resume after an interrupted wave reproduces the uninterrupted run") {
    const auto full = fresh_dir("full"), cut = fresh_dir("cut"), ext = fresh_dir("ext");
    run_pipeline(small_config(2), full);
    run_pipeline(small_config(2), cut);

    // Interrupt: the second wave never reached the ledger.
    truncate_ledger_after(cut, 1);
    fs::remove_all(cut / wave_dir(2));
    fs::remove(cut / kSelectionFile);
    fs::remove(cut / kSummaryFile);
    run_pipeline(small_config(2), cut);
    CHECK(tree(cut) == tree(full));
    CHECK(verify_ledger(cut).empty());

    // Extension: one wave now, a second later.
    run_pipeline(small_config(1), ext);
    run_pipeline(small_config(2), ext);
    // The budget is recorded in config.json and in the wave-1 termination.
    const std::vector<std::string> skip{kLedgerFile, kConfigFile, "waves/wave_1/snapshot.json"};
    CHECK(tree(ext, skip) == tree(full, skip));
    json s1 = json::parse(slurp(ext / "waves/wave_1/snapshot.json"));
    json s2 = json::parse(slurp(full / "waves/wave_1/snapshot.json"));
    CHECK(s1.at("termination") == "max_waves");
    s1.erase("termination");
    s2.erase("termination");
    CHECK(s1 == s2);
    CHECK(load_run(ext).state.wave == 2);

    auto other = small_config(2);
    other.seed = 12;
    CHECK_THROWS_AS(run_pipeline(other, ext), ConfigError);
    fs::remove_all(full);
    fs::remove_all(cut);
    fs::remove_all(ext);
  }

  TEST_CASE("validation reports every wave and repeats exactly") {
    const auto dir = fresh_dir("validate");
    run_pipeline(small_config(2), dir);
    CHECK_THROWS_AS(cmd_validate(dir, 0), ContractError);
    const auto v1 = cmd_validate(dir, 40);
    const std::string report = slurp(dir / "validation/n40/report.json");
    const auto v2 = cmd_validate(dir, 40);
    REQUIRE(v1.size() == 2);
    CHECK(v1[1].coverage.n_validation == 40);
    CHECK(v1[0].coverage.fraction == v2[0].coverage.fraction);
    CHECK(v1[1].rps.observed_score == v2[1].rps.observed_score);
    CHECK(slurp(dir / "validation/n40/report.json") == report);
    const auto odd = cmd_validate(dir, 7);
    CHECK(odd[0].coverage.n_validation == 7);
    CHECK(verify_ledger(dir).empty());
    fs::remove_all(dir);
  }

  TEST_CASE("report writes 28 grids and 8 histograms and is idempotent") {
    const auto dir = fresh_dir("report");
    run_pipeline(small_config(1), dir);
    cmd_report(dir);
    const auto first = tree(dir / "report");
    cmd_report(dir);
    CHECK(tree(dir / "report") == first);
    const json manifest = json::parse(first.at("manifest.json"));
    CHECK(manifest.at("grids").at("pairs").size() == 28);
    CHECK(manifest.at("variables").size() == 8);
    const std::string& grids = first.at("grids.csv");
    CHECK(grids.rfind("var_i,var_j,cell_i,cell_j,min_impl,depth_log10,count\n", 0) == 0);
    fs::remove_all(dir);
  }

  TEST_CASE("unattainable targets end with an empty level set") {
    const auto dir = fresh_dir("empty");
    auto c = small_config(3);
    c.p_target = 1e-9;
    c.energy_target = 0.001;
    const auto out = run_pipeline(c, dir);
    CHECK(out.termination == Termination::level_set_empty);
    CHECK(out.history.size() <= 2);
    for (const auto& s : out.selections) CHECK_FALSE(s.found);
    fs::remove_all(dir);
  }

  TEST_CASE("a second process cannot take the run lock") {
    const auto dir = fresh_dir("lock");
    fs::create_directories(dir);
    RunLock held(dir);
    const pid_t pid = ::fork();
    if (pid == 0) {
      try {
        RunLock again(dir);
        ::_exit(0);
      } catch (const ContractError&) {
        ::_exit(7);
      }
    }
    int status = 0;
    ::waitpid(pid, &status, 0);
    CHECK(WEXITSTATUS(status) == 7);
    fs::remove_all(dir);
  }
}
