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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "forge/experiment.hpp"

using namespace forge;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool has_issue(const ValidationReport& r, const std::string& path, const std::string& text) {
  for (const auto& i : r.issues) {
    if (i.path == path && i.message.find(text) != std::string::npos) return true;
  }
  return false;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  return p;
}

RunResult run_into(const std::string& config_file, const fs::path& out) {
  const auto cfg = load_config(std::string(FORGE_SOURCE_DIR) + "/configs/" + config_file);
  RunOptions opt;
  opt.check = true;
  opt.output_dir = out.string();
  std::ostringstream console;
  return run_experiment(cfg, opt, console);
}

const char* kWhite = R"({
  "experiment": "custom",
  "noise": {"kind": "white", "sigma": 1.0},
  "control": {"kind": "none"},
  "system": {"spin": 0.5, "noise_operators": ["z"]},
  "sim": {"eps": 0.1, "dt": 1.0, "n_traj": 10, "s_max": 0.2, "n_out": 3},
  "params": {"regime": "white"}
})";

}  // namespace

TEST_CASE("syntax errors carry line and column") {
  const auto r = validate_config_text("{\n  \"experiment\": \"spectra\",\n  oops\n}");
  REQUIRE_FALSE(r.ok());
  CHECK(r.to_string().find("line 3") != std::string::npos);
  CHECK(r.to_string().find("column") != std::string::npos);
}

TEST_CASE("field errors are reported by path") {
  CHECK(validate_config_text(kWhite).ok());
  std::string bad = kWhite;
  bad.replace(bad.find("\"eps\": 0.1"), 10, "\"eps\": 1.5");
  CHECK(has_issue(validate_config_text(bad), "sim.eps", "eps out of (0,1)"));

  std::string unknown = kWhite;
  unknown.replace(unknown.find("\"sigma\""), 7, "\"sigmaa\"");
  CHECK_FALSE(validate_config_text(unknown).ok());

  const auto missing = validate_config_text(R"({"experiment": "warp-drive"})");
  CHECK(has_issue(missing, "experiment", ""));

  CHECK_THROWS_AS(parse_config_text(bad), ConfigError);
}

TEST_CASE("a tabulated correlation with a negative spectrum is rejected with its frequency") {
  std::string values = "[";
  for (int k = 0; k < 64; ++k) values += std::string(k ? "," : "") + (k < 16 ? "1" : "0");
  values += "]";
  const std::string text = std::string(R"({
    "experiment": "gamma-of-t",
    "noise": {"kind": "tabulated", "values": )") + values + R"(, "dt": 0.1},
    "params": {"t_max": 5.0, "n_points": 10}
  })";
  const auto r = validate_config_text(text);
  REQUIRE_FALSE(r.ok());
  CHECK(has_issue(r, "noise", "negative at omega = "));
}

TEST_CASE("every shipped config validates") {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(fs::path(FORGE_SOURCE_DIR) / "configs")) {
    if (entry.path().extension() != ".json") continue;
    ++count;
    const auto r = validate_config_file(entry.path().string());
    INFO(entry.path().string(), ": ", r.to_string());
    CHECK(r.ok());
  }
  CHECK(count >= 8);
}

TEST_CASE("exit codes and check serialization") {
  RunResult r;
  r.checks.push_back({"a", true, false, 1.0, 2.0, ""});
  r.checks.push_back({"b", false, true, 3.0, 2.0, "info only"});
  CHECK(r.all_passed());
  CHECK(r.exit_code(true) == 0);
  r.checks.push_back({"c", false, false, 3.0, 2.0, ""});
  CHECK_FALSE(r.all_passed());
  CHECK(r.exit_code(true) == 1);
  CHECK(r.exit_code(false) == 0);
  const auto j = check_to_json(r.checks[1]);
  CHECK(j["name"] == "b");
  CHECK(j["informational"] == true);
  CHECK(j["detail"] == "info only");
}

TEST_CASE("spin spectra match the closed forms") {
  for (double spin : {0.5, 1.0, 1.5, 2.0, 2.5}) {
    const auto rows = spin_spectra(spin);
    CHECK(spectra_match(rows));
    const int d = static_cast<int>(2 * spin + 1);
    int total = 0;
    for (const auto& row : rows) {
      if (row.operator_name == "ad_z") total += row.multiplicity;
    }
    CHECK(total == d * d);
  }
}

TEST_CASE("spectra experiment writes its outputs") {
  const auto out = fresh_dir("forge_test_spectra");
  const auto r = run_into("spectra.json", out);
  CHECK(r.all_passed());
  CHECK(fs::exists(out / "spectra.csv"));
  CHECK(fs::exists(out / "summary.json"));
  CHECK(fs::exists(out / "run.log"));
  const auto summary = nlohmann::json::parse(read_file(out / "summary.json"));
  CHECK(summary["checks"].size() == r.checks.size());
  const std::string csv = read_file(out / "spectra.csv");
  CHECK(csv.find(',') < csv.find('\n'));
  fs::remove_all(out);
}

TEST_CASE("Monte Carlo runs are reproducible across reruns and thread counts") {
  const auto a = fresh_dir("forge_test_custom_a");
  const auto b = fresh_dir("forge_test_custom_b");
  setenv("FORGE_THREADS", "1", 1);
  const auto ra = run_into("custom_white.json", a);
  setenv("FORGE_THREADS", "3", 1);
  const auto rb = run_into("custom_white.json", b);
  unsetenv("FORGE_THREADS");
  CHECK(ra.all_passed());
  CHECK(rb.all_passed());
  const std::string csv = read_file(a / "custom.csv");
  CHECK_FALSE(csv.empty());
  CHECK(csv == read_file(b / "custom.csv"));
  // Decimal point regardless of the global locale.
  CHECK(csv.find("0.1") != std::string::npos);
  fs::remove_all(a);
  fs::remove_all(b);
}
