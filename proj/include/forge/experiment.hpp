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

#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "forge/generators.hpp"
#include "forge/linalg.hpp"
#include "json.hpp"

namespace forge {

struct ValidationIssue {
  std::string path;  // e.g. "sim.eps"; "" for document-level problems
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool ok() const { return issues.empty(); }
  std::string to_string() const;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(ValidationReport report);
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 1;
  std::string output_dir;
  nlohmann::json raw;
};

/// Parses and fully validates a config document. Syntax errors are reported
/// with line and column.
ValidationReport validate_config_text(const std::string& text);
ValidationReport validate_config_file(const std::string& path);

/// Throws ConfigError if validation fails.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

struct CheckResult {
  std::string name;
  bool passed = false;
  bool informational = false;  // reported but never fails a run
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

nlohmann::json check_to_json(const CheckResult& c);

struct RunOptions {
  bool check = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
};

struct RunResult {
  std::vector<CheckResult> checks;
  std::vector<std::string> files;
  bool all_passed() const;
  /// 0 unless check mode is on and some non-informational check failed.
  int exit_code(bool check_mode) const;
};

/// Runs the configured experiment, writing <experiment>.csv (and per-case
/// files), summary.json and run.log into the output directory.
RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options, std::ostream& console);

/// Structural checks on a generator: unitality, trace preservation on random
/// states, optionally complete positivity of exp(L s) for s in {0.1, 1, 5}
/// and negativity of the dissipative part as a quadratic form.
std::vector<CheckResult> structural_checks(const std::string& label, const LindbladParts& parts,
                                           bool check_cp, std::uint64_t seed = 17);

struct SpectrumRow {
  std::string operator_name;  // "ad_z", "casimir_xyz", "planar_xy"
  double value = 0.0;
  int multiplicity = 0;
  int expected_multiplicity = 0;
  double error = 0.0;  // distance to the closed-form value
};

/// Spectra of ad(S_z), sum_xyz ad(S_i)^2 and sum_xy ad(S_i)^2 grouped at 1e-8
/// and matched against the closed forms {m - m'}, {j (j+1)} and
/// {j (j+1) - m^2 : |m| <= j <= 2S}.
std::vector<SpectrumRow> spin_spectra(double spin);
bool spectra_match(const std::vector<SpectrumRow>& rows, double tol = 1e-9);

}  // namespace forge
