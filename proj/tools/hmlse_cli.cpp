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

// Command-line entry point: run, validate, report.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "hmlse/errors.hpp"
#include "hmlse/pipeline.hpp"

namespace {

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const hmlse::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return hmlse::kExitConfig;
  } catch (const hmlse::SimulatorError& e) {
    std::cerr << "simulator failure: " << e.what() << '\n';
    return hmlse::kExitSimulator;
  } catch (const hmlse::FitError& e) {
    std::cerr << "emulator fit failure: " << e.what() << '\n';
    return hmlse::kExitFit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return hmlse::kExitFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Level-set estimation of building designs by iterative history matching"};
  app.require_subcommand(1);

  std::string config, out, state;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_waves;
  int n_validation = 400;

  auto* run = app.add_subcommand("run", "Run waves to termination (resumes an existing output directory)");
  run->add_option("--config", config, "Configuration file (JSON)")->required();
  run->add_option("--out", out, "Output directory")->required();
  run->add_option("--seed", seed, "Override the master seed");
  run->add_option("--max-waves", max_waves, "Override the wave budget");

  auto* validate = app.add_subcommand("validate", "Out-of-sample coverage and RPS for every wave's emulators");
  validate->add_option("--state", state, "Run directory")->required();
  validate->add_option("--n", n_validation, "Number of validation simulations")->required();

  auto* report = app.add_subcommand("report", "Minimum-implausibility grids and NROY histograms of the latest wave");
  report->add_option("--state", state, "Run directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (*run)
    return guarded([&] {
      const auto outcome = hmlse::cmd_run({config, out, seed, max_waves, &std::cout});
      for (const auto& s : outcome.selections) {
        std::cout << "selection (" << hmlse::to_string(s.policy) << ", I < " << hmlse::policy_bound(s.policy) << "): ";
        if (!s.found) {
          std::cout << "no qualifying design\n";
          continue;
        }
        std::cout << "candidate " << s.candidate << ", I = " << s.impl_max << ", joint probability "
                  << s.joint_probability << '\n';
      }
      if (outcome.termination == hmlse::Termination::level_set_empty) {
        std::cout << hmlse::kEmptyLevelSetMessage << '\n';
        return static_cast<int>(hmlse::kExitEmptyLevelSet);
      }
      return static_cast<int>(hmlse::kExitOk);
    });
  if (*validate)
    return guarded([&] {
      hmlse::cmd_validate(state, n_validation, &std::cout);
      return static_cast<int>(hmlse::kExitOk);
    });
  return guarded([&] {
    hmlse::cmd_report(state, &std::cout);
    return static_cast<int>(hmlse::kExitOk);
  });
}
