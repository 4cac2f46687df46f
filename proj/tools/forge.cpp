// Copyright 2026 The Forge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// forge run <config> [--check] [--seed N] [--out DIR]
// forge validate <config>
// forge spectra --spin S
//
// Exit codes: 0 ok, 1 failed checks (--check), 2 invalid config, 3 runtime error.

#include <cmath>
#include <iomanip>
#include <iostream>

#include "CLI11.hpp"
#include "forge/experiment.hpp"

namespace {

constexpr int kFailedChecks = 1;
constexpr int kBadConfig = 2;
constexpr int kRuntime = 3;

int cmd_run(const std::string& path, bool check, const std::optional<std::uint64_t>& seed,
            const std::optional<std::string>& out) {
  forge::ExperimentConfig cfg;
  try {
    cfg = forge::load_config(path);
  } catch (const forge::ConfigError& e) {
    std::cerr << path << ": invalid config\n" << e.report().to_string();
    return kBadConfig;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return kBadConfig;
  }
  forge::RunOptions opts;
  opts.check = check;
  opts.seed = seed;
  opts.output_dir = out;
  try {
    const auto result = forge::run_experiment(cfg, opts, std::cout);
    const int code = result.exit_code(check);
    if (code != 0) std::cerr << "one or more checks failed\n";
    return code == 0 ? 0 : kFailedChecks;
  } catch (const forge::ConfigError& e) {
    std::cerr << path << ": invalid config\n" << e.report().to_string();
    return kBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
}

int cmd_validate(const std::string& path) {
  const auto report = forge::validate_config_file(path);
  if (report.ok()) {
    std::cout << path << ": valid\n";
    return 0;
  }
  std::cerr << path << ": invalid config\n" << report.to_string();
  return kBadConfig;
}

int cmd_spectra(double spin) {
  if (!(spin > 0.0) || std::abs(2.0 * spin - std::round(2.0 * spin)) > 1e-12) {
    std::cerr << "--spin must be a positive multiple of 1/2\n";
    return kBadConfig;
  }
  const auto rows = forge::spin_spectra(spin);
  std::cout << std::setprecision(12) << "operator,eigenvalue,multiplicity,expected_multiplicity,error\n";
  for (const auto& r : rows) {
    std::cout << r.operator_name << ',' << r.value << ',' << r.multiplicity << ',' << r.expected_multiplicity << ','
              << r.error << '\n';
  }
  const bool ok = forge::spectra_match(rows);
  std::cout << (ok ? "spectra match closed forms\n" : "spectra MISMATCH\n");
  return ok ? 0 : kFailedChecks;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"forge: noise-averaged generators for controlled spin systems"};
  app.require_subcommand(1);

  std::string run_path;
  bool check = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", run_path, "Config file (JSON)")->required();
  run->add_flag("--check", check, "Exit nonzero if any check fails");
  run->add_option("--seed", seed, "Override the master seed");
  run->add_option("--out", out, "Override the output directory");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Validate a config without running it");
  validate->add_option("config", validate_path, "Config file (JSON)")->required();

  double spin = 0.5;
  auto* spectra = app.add_subcommand("spectra", "Check super-operator spectra for spin S");
  spectra->add_option("--spin", spin, "Spin quantum number")->required();

  CLI11_PARSE(app, argc, argv);

  if (*run) return cmd_run(run_path, check, seed, out);
  if (*validate) return cmd_validate(validate_path);
  if (*spectra) return cmd_spectra(spin);
  return kBadConfig;
}
