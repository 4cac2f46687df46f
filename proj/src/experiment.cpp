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

#include "forge/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <boost/math/tools/minima.hpp>

#include "forge/control.hpp"
#include "forge/montecarlo.hpp"
#include "forge/noise.hpp"

namespace forge {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

using std::numbers::pi;

const std::set<std::string> kExperiments{"gamma-of-t", "rates-vs-omega", "fig-compare", "spectra",
                                         "iso12",      "oscillator",     "custom"};

const std::map<std::string, std::set<std::string>> kParams{
    {"gamma-of-t", {"t_max", "n_points", "expect_negative_gamma"}},
    {"rates-vs-omega", {"omega_tau", "n_max", "n_harmonics"}},
    {"fig-compare", {}},
    {"spectra", {"spins"}},
    {"iso12", {"omega_tau", "n_harmonics"}},
    {"oscillator", {"kind", "n_fock", "omega_c_tau", "correlation"}},
    {"custom", {"regime", "t", "monte_carlo", "max_step", "n_harmonics"}},
};

struct FieldError : std::runtime_error {
  FieldError(std::string p, const std::string& message) : std::runtime_error(message), path(std::move(p)) {}
  std::string path;
};

std::string join(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }

const json& empty_object() {
  static const json e = json::object();
  return e;
}

const json& section(const json& root, const std::string& key) {
  if (!root.contains(key)) return empty_object();
  const json& s = root.at(key);
  if (!s.is_object()) throw FieldError(key, "must be an object");
  return s;
}

double number(const json& obj, const std::string& base, const std::string& key, std::optional<double> def) {
  if (!obj.contains(key)) {
    if (def) return *def;
    throw FieldError(join(base, key), "required field is missing");
  }
  const json& v = obj.at(key);
  if (!v.is_number()) throw FieldError(join(base, key), "must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw FieldError(join(base, key), "must be finite");
  return x;
}

double positive(const json& obj, const std::string& base, const std::string& key, std::optional<double> def) {
  const double x = number(obj, base, key, def);
  if (!(x > 0.0)) throw FieldError(join(base, key), "must be positive");
  return x;
}

long integer(const json& obj, const std::string& base, const std::string& key, std::optional<long> def) {
  if (!obj.contains(key)) {
    if (def) return *def;
    throw FieldError(join(base, key), "required field is missing");
  }
  const json& v = obj.at(key);
  if (!v.is_number_integer()) throw FieldError(join(base, key), "must be an integer");
  return v.get<long>();
}

std::string text(const json& obj, const std::string& base, const std::string& key, std::optional<std::string> def) {
  if (!obj.contains(key)) {
    if (def) return *def;
    throw FieldError(join(base, key), "required field is missing");
  }
  const json& v = obj.at(key);
  if (!v.is_string()) throw FieldError(join(base, key), "must be a string");
  return v.get<std::string>();
}

bool flag(const json& obj, const std::string& base, const std::string& key, bool def) {
  if (!obj.contains(key)) return def;
  if (!obj.at(key).is_boolean()) throw FieldError(join(base, key), "must be true or false");
  return obj.at(key).get<bool>();
}

std::vector<double> number_list(const json& obj, const std::string& base, const std::string& key,
                                std::vector<double> def) {
  if (!obj.contains(key)) return def;
  const json& v = obj.at(key);
  if (!v.is_array() || v.empty()) throw FieldError(join(base, key), "must be a non-empty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw FieldError(join(base, key) + "[" + std::to_string(i) + "]", "must be a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

void reject_unknown(const json& obj, const std::string& base, const std::set<std::string>& allowed) {
  for (const auto& [k, v] : obj.items()) {
    if (!allowed.count(k)) throw FieldError(join(base, k), "unknown field");
  }
}

// --- system, noise, control, sim -------------------------------------------

struct SystemSetup {
  double spin = 0.5;
  Index dim = 2;
  std::vector<HermitianOperator> ops;
  std::vector<std::string> op_names;
  Matrix rho0;
};

HermitianOperator spin_axis(const SpinOperators& s, const std::string& axis, const std::string& path) {
  if (axis == "x") return s.x;
  if (axis == "y") return s.y;
  if (axis == "z") return s.z;
  throw FieldError(path, "axis must be one of x, y, z");
}

SystemSetup build_system(const json& root, const json* ops_override = nullptr,
                         const std::string& ops_path = "system.noise_operators") {
  const json& sys = section(root, "system");
  reject_unknown(sys, "system", {"spin", "noise_operators", "initial_state"});
  SystemSetup out;
  out.spin = positive(sys, "system", "spin", 0.5);
  const double twice = 2.0 * out.spin;
  if (std::abs(twice - std::round(twice)) > 1e-12) throw FieldError("system.spin", "must be a multiple of 1/2");
  const auto s = spin_operators(out.spin);
  out.dim = s.z.dim();
  const json* list = ops_override;
  std::string path = ops_path;
  if (!list && sys.contains("noise_operators")) list = &sys.at("noise_operators");
  if (list) {
    if (!list->is_array() || list->empty()) throw FieldError(path, "must be a non-empty array of axes");
    for (std::size_t i = 0; i < list->size(); ++i) {
      const std::string p = path + "[" + std::to_string(i) + "]";
      if (!(*list)[i].is_string()) throw FieldError(p, "must be one of x, y, z");
      out.op_names.push_back((*list)[i].get<std::string>());
      out.ops.push_back(spin_axis(s, out.op_names.back(), p));
    }
  } else {
    out.op_names = {"z"};
    out.ops = {s.z};
  }
  const std::string init = text(sys, "system", "initial_state", std::string("plus"));
  if (init == "plus") {
    out.rho0 = plus_state(out.dim);
  } else if (init == "mixed") {
    out.rho0 = Matrix::Identity(out.dim, out.dim) / static_cast<double>(out.dim);
  } else if (init == "up") {
    out.rho0 = Matrix::Zero(out.dim, out.dim);
    out.rho0(0, 0) = 1.0;
  } else {
    throw FieldError("system.initial_state", "must be one of plus, mixed, up");
  }
  return out;
}

struct NoiseDefaults {
  std::string kind = "ou";
  double tau = 20.0;
  double omega0 = 0.0;
};

NoiseModel build_noise(const json& root, int channels, const NoiseDefaults& def = {}) {
  const json& n = section(root, "noise");
  reject_unknown(n, "noise", {"kind", "sigma", "tau", "omega0", "values", "dt"});
  const std::string kind_name = text(n, "noise", "kind", def.kind);
  NoiseKind kind;
  try {
    kind = noise_kind_from_string(kind_name);
  } catch (const std::exception&) {
    throw FieldError("noise.kind", "must be one of ou, damped-cosine, white, tabulated");
  }
  const double sigma = positive(n, "noise", "sigma", 1.0);
  std::optional<NoiseModel> model;
  try {
    switch (kind) {
      case NoiseKind::ou: model = NoiseModel::ou(sigma, positive(n, "noise", "tau", def.tau), channels); break;
      case NoiseKind::damped_cosine:
        model = NoiseModel::damped_cosine(sigma, positive(n, "noise", "tau", def.tau),
                                          number(n, "noise", "omega0", def.omega0), channels);
        break;
      case NoiseKind::white: model = NoiseModel::white(sigma, channels); break;
      case NoiseKind::tabulated: {
        const auto values = number_list(n, "noise", "values", {});
        if (values.size() < 4) throw FieldError("noise.values", "need at least 4 tabulated values");
        std::optional<double> tau;
        if (n.contains("tau")) tau = positive(n, "noise", "tau", std::nullopt);
        model = NoiseModel::tabulated(values, positive(n, "noise", "dt", std::nullopt), channels, tau);
        break;
      }
    }
  } catch (const FieldError&) {
    throw;
  } catch (const std::exception& e) {
    throw FieldError("noise", e.what());
  }
  if (const auto bad = find_negative_spectrum(*model)) {
    std::ostringstream msg;
    msg << "spectral density is negative at omega = " << *bad << " (J~ = " << model->spectral_density(*bad)
        << ")";
    throw FieldError("noise", msg.str());
  }
  return *model;
}

double correlation_time(const NoiseModel& model, double dt) {
  return model.kind() == NoiseKind::white ? dt : model.tau();
}

ControlSchedule build_control(const json& ctl, const std::string& base, Index dim, double tau) {
  reject_unknown(ctl, base, {"kind", "omega_c_tau", "axis"});
  const std::string kind_name = text(ctl, base, "kind", std::string("none"));
  ControlKind kind;
  try {
    kind = control_kind_from_string(kind_name);
  } catch (const std::exception&) {
    throw FieldError(join(base, "kind"), "must be one of none, constant, bangbang-pi, bangbang-iso12");
  }
  if (kind == ControlKind::none) return ControlSchedule::none(dim);
  if (kind == ControlKind::custom_piecewise) {
    throw FieldError(join(base, "kind"), "custom-piecewise schedules are not configurable from files");
  }
  const double omega = positive(ctl, base, "omega_c_tau", std::nullopt) / tau;
  const auto s = spin_operators(0.5 * static_cast<double>(dim - 1));
  switch (kind) {
    case ControlKind::constant: {
      const auto axis = spin_axis(s, text(ctl, base, "axis", std::string("z")), join(base, "axis"));
      return ControlSchedule::constant(axis * omega, omega);
    }
    case ControlKind::bangbang_pi: return ControlSchedule::bangbang_pi(dim, omega);
    default: return ControlSchedule::bangbang_iso12(dim, omega);
  }
}

SimConfig build_sim(const json& root, const NoiseModel& noise, const ControlSchedule& control,
                    const SystemSetup& sys, std::uint64_t seed) {
  const json& s = section(root, "sim");
  reject_unknown(s, "sim", {"eps", "dt", "n_traj", "s_max", "n_out", "threads"});
  SimConfig c;
  c.eps = number(s, "sim", "eps", 0.15);
  if (!(c.eps > 0.0 && c.eps < 1.0)) throw FieldError("sim.eps", "eps out of (0,1)");
  c.dt = positive(s, "sim", "dt", 1.0);
  const long n_traj = integer(s, "sim", "n_traj", 500);
  if (n_traj < 1) throw FieldError("sim.n_traj", "must be >= 1");
  c.n_traj = static_cast<std::size_t>(n_traj);
  c.s_max = positive(s, "sim", "s_max", 2.0);
  const long n_out = integer(s, "sim", "n_out", 21);
  if (n_out < 2) throw FieldError("sim.n_out", "must be >= 2");
  c.n_out = static_cast<int>(n_out);
  c.threads = static_cast<int>(integer(s, "sim", "threads", 0));
  c.seed = seed;
  c.noise = noise;
  c.control = control;
  c.ops = sys.ops;
  c.rho0 = sys.rho0;
  if (noise.kind() == NoiseKind::ou && noise.tau() / c.dt < 10.0 - 1e-12) {
    throw FieldError("sim.dt", "tau/dt must be >= 10");
  }
  if (control.periodic() && control.omega_c() * c.dt > 0.3 + 1e-12) {
    throw FieldError("sim.dt", "omega_c * dt must be <= 0.3");
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    if (colon != std::string::npos && msg.find(' ') > colon) {
      throw FieldError(msg.substr(0, colon), msg.substr(colon + 2));
    }
    throw FieldError("sim", msg);
  }
  return c;
}

// --- output helpers --------------------------------------------------------

class Csv {
 public:
  Csv(const fs::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out_.imbue(std::locale::classic());
    out_ << std::setprecision(17);
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }

  template <typename... Ts>
  void row(const Ts&... values) {
    bool first = true;
    ((out_ << (first ? "" : ",") << values, first = false), ...);
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

struct Context {
  const ExperimentConfig& config;
  const json& params;
  fs::path out;
  std::ostream& console;
  std::ofstream log;
  RunResult result;

  void note(const std::string& line) {
    log << line << '\n';
    console << line << '\n';
  }
  void add(CheckResult c) {
    std::ostringstream line;
    line << (c.informational ? "[info] " : (c.passed ? "[pass] " : "[FAIL] ")) << c.name << " value=" << c.value
         << " threshold=" << c.threshold;
    if (!c.detail.empty()) line << " (" << c.detail << ")";
    note(line.str());
    result.checks.push_back(std::move(c));
  }
  void add_all(std::vector<CheckResult> cs) {
    for (auto& c : cs) add(std::move(c));
  }
  fs::path file(const std::string& name) {
    result.files.push_back((out / name).string());
    return out / name;
  }
  void write_json(const std::string& name, const json& j) {
    std::ofstream f(file(name));
    f << j.dump(2) << '\n';
  }
};

CheckResult make_check(std::string name, bool passed, double value, double threshold, std::string detail = {}) {
  CheckResult c;
  c.name = std::move(name);
  c.passed = passed;
  c.value = value;
  c.threshold = threshold;
  c.detail = std::move(detail);
  return c;
}

CheckResult make_info(std::string name, bool flag_value, double value, std::string detail = {}) {
  CheckResult c = make_check(std::move(name), flag_value, value, 0.0, std::move(detail));
  c.informational = true;
  return c;
}

std::vector<double> decay_rates(const SuperOperator& l, double tol = 1e-9) {
  std::vector<double> rates;
  for (const auto& g : group_spectrum(superop_spectrum(l), tol)) {
    const double r = -g.value.real();
    if (r > tol) rates.push_back(r);
  }
  std::sort(rates.begin(), rates.end());
  rates.erase(std::unique(rates.begin(), rates.end(),
                          [tol](double a, double b) { return std::abs(a - b) <= tol * std::max(1.0, b); }),
              rates.end());
  return rates;
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// --- experiments -----------------------------------------------------------

double gamma_closed_form(const NoiseModel& m, double t) {
  const double a = 1.0 / m.tau();
  const double s2 = m.sigma() * m.sigma();
  if (m.kind() == NoiseKind::ou) return 2.0 * s2 * m.tau() * (1.0 - std::exp(-a * t));
  const double w = m.omega0();
  return 2.0 * s2 * (a + std::exp(-a * t) * (w * std::sin(w * t) - a * std::cos(w * t))) / (a * a + w * w);
}

void run_gamma_of_t(Context& ctx) {
  const json& root = ctx.config.raw;
  const NoiseModel model = build_noise(root, 1, {"damped-cosine", 1.0, 4.0});
  if (model.kind() == NoiseKind::white) throw FieldError("noise.kind", "gamma-of-t needs coloured noise");
  const double tau = model.tau();
  const double t_max = positive(ctx.params, "params", "t_max", 10.0 * tau);
  const long n_points = integer(ctx.params, "params", "n_points", 501);
  const double eps = number(section(root, "sim"), "sim", "eps", 0.15);
  const TimeScale ts{tau, eps};
  const bool closed = model.kind() == NoiseKind::ou || model.kind() == NoiseKind::damped_cosine;

  Csv csv(ctx.file("gamma_of_t.csv"), {"t", "s", "gamma", "gamma_closed"});
  double worst = 0.0;
  std::size_t best = 0;
  std::vector<double> ts_grid;
  std::vector<double> gs;
  for (long k = 0; k < n_points; ++k) {
    const double t = t_max * static_cast<double>(k) / static_cast<double>(n_points - 1);
    const double g = gamma_of_t(model, t);
    ts_grid.push_back(t);
    gs.push_back(g);
    if (g < gs[best]) best = gs.size() - 1;
    if (closed) {
      const double c = gamma_closed_form(model, t);
      worst = std::max(worst, std::abs(g - c));
      csv.row(t, ts.s_of_t(t), g, c);
    } else {
      csv.row(t, ts.s_of_t(t), g, "");
    }
  }
  double t_min = ts_grid[best];
  double g_min = gs[best];
  if (best > 0 && best + 1 < ts_grid.size()) {
    const auto [tm, gm] = boost::math::tools::brent_find_minima(
        [&](double t) { return gamma_of_t(model, t); }, ts_grid[best - 1], ts_grid[best + 1], 40);
    if (gm < g_min) {
      t_min = tm;
      g_min = gm;
    }
  }
  if (closed) ctx.add(make_check("gamma_closed_form", worst < 1e-8, worst, 1e-8));
  const bool negative = g_min < 0.0;
  std::ostringstream where;
  where << "minimum at t=" << t_min;
  ctx.add(make_info("gamma_negative", negative, g_min, where.str()));
  if (ctx.params.contains("expect_negative_gamma")) {
    const bool expected = flag(ctx.params, "params", "expect_negative_gamma", false);
    ctx.add(make_check("gamma_sign_as_expected", negative == expected, g_min, 0.0, where.str()));
  }

  const auto h0 = spin_operators(0.5).z;
  const double short_min = min_choi_eigenvalue(superop_exp(commutative_generator(model, h0, t_min)));
  const double long_min = min_choi_eigenvalue(superop_exp(commutative_generator(model, h0, 50.0 * tau)));
  if (negative) ctx.add(make_check("short_time_generator_not_cp", short_min < -1e-9, short_min, -1e-9));
  ctx.add(make_check("long_time_generator_cp", long_min >= -1e-9, long_min, -1e-9));
}

void run_rates_vs_omega(Context& ctx) {
  const json& root = ctx.config.raw;
  const NoiseModel model = build_noise(root, 1, {"ou", 1.0, 0.0});
  if (model.kind() == NoiseKind::white) throw FieldError("noise.kind", "rates-vs-omega needs coloured noise");
  std::vector<double> grid;
  if (ctx.params.contains("omega_tau") && ctx.params.at("omega_tau").is_object()) {
    const json& g = ctx.params.at("omega_tau");
    const double lo = positive(g, "params.omega_tau", "min", std::nullopt);
    const double hi = positive(g, "params.omega_tau", "max", std::nullopt);
    const long count = integer(g, "params.omega_tau", "count", 31);
    if (!(hi > lo) || count < 2) throw FieldError("params.omega_tau", "need max > min and count >= 2");
    for (long k = 0; k < count; ++k) grid.push_back(lo + (hi - lo) * static_cast<double>(k) / (count - 1));
  } else {
    grid = number_list(ctx.params, "params", "omega_tau", {});
    if (grid.empty()) {
      for (int k = 0; k <= 30; ++k) grid.push_back(0.5 + 7.5 * k / 30.0);
    }
  }
  const int n_max = static_cast<int>(integer(ctx.params, "params", "n_max", 200));
  const int n_harm = static_cast<int>(integer(ctx.params, "params", "n_harmonics", 41));
  const double tau = model.tau();
  const double j0 = model.spectral_density(0.0);
  const auto s = spin_operators(0.5);

  Csv csv(ctx.file("rates_vs_omega.csv"),
          {"omega_tau", "gamma_bb", "bb_decay", "constant_decay_1", "constant_decay_2"});
  std::vector<double> bb;
  double worst_gen = 0.0;
  double worst_const = 0.0;
  bool bb_lowest = true;
  for (double wt : grid) {
    const double w = wt / tau;
    const double gb = bb_dephasing_rate(model, w, n_max).value();
    bb.push_back(gb);

    const auto bb_sched = ControlSchedule::bangbang_pi(2, w);
    const auto bb_gen = coarse_grained_lindbladian(fourier_data(bb_sched, {s.z}, n_harm), model);
    const double gen_rate = dephasing_rate_of(bb_gen.total, s.z);
    const double partial = bb_dephasing_rate(model, w, (n_harm - 1) / 2).partial;
    worst_gen = std::max(worst_gen, rel_diff(gen_rate, partial));
    const auto bb_decay = decay_rates(bb_gen.total);

    const auto c_sched = ControlSchedule::constant(s.z * w, w);
    const auto c_gen = coarse_grained_lindbladian(fourier_data(c_sched, {s.x}), model);
    const auto c_decay = decay_rates(c_gen.total);
    const double jw = model.spectral_density(w);
    if (c_decay.size() != 2) {
      worst_const = std::numeric_limits<double>::infinity();
      csv.row(wt, gb / j0, bb_decay.empty() ? 0.0 : bb_decay.front() / j0, "", "");
      continue;
    }
    worst_const = std::max({worst_const, rel_diff(c_decay[0], jw / 4.0), rel_diff(c_decay[1], jw / 2.0)});
    const double bbd = bb_decay.empty() ? 0.0 : bb_decay.front();
    if (!(bbd < c_decay[0])) bb_lowest = false;
    csv.row(wt, gb / j0, bbd / j0, c_decay[0] / j0, c_decay[1] / j0);
  }
  bool decreasing = true;
  for (std::size_t k = 1; k < bb.size(); ++k) decreasing = decreasing && bb[k] < bb[k - 1];
  ctx.add(make_check("bb_rate_strictly_decreasing", decreasing, bb.back() / j0, 0.0));
  const double at8 = bb_dephasing_rate(model, 8.0 / tau, n_max).value() / j0;
  ctx.add(make_check("bb_rate_small_at_omega_tau_8", at8 < 0.05, at8, 0.05));
  ctx.add(make_check("bb_formula_matches_generator", worst_gen < 1e-8, worst_gen, 1e-8));
  ctx.add(make_check("constant_control_rates", worst_const < 1e-9, worst_const, 1e-9,
                     "decay rates J~(w)/4 and J~(w)/2"));
  ctx.add(make_info("bb_lowest_curve", bb_lowest, bb_lowest ? 1.0 : 0.0,
                    "bang-bang decay below both constant-control decay rates at every grid point"));
}

json default_cases() {
  return json::array({{{"name", "none"}, {"control", {{"kind", "none"}}}, {"noise_operators", {"z"}}},
                      {{"name", "constant"},
                       {"control", {{"kind", "constant"}, {"omega_c_tau", pi / 2.0}, {"axis", "z"}}},
                       {"noise_operators", {"x"}}},
                      {{"name", "bangbang"},
                       {"control", {{"kind", "bangbang-pi"}, {"omega_c_tau", pi / 2.0}}},
                       {"noise_operators", {"z"}}}});
}

struct CaseSetup {
  std::string name;
  SystemSetup system;
  NoiseModel noise = NoiseModel::ou(1.0, 1.0);
  ControlSchedule control = ControlSchedule::none(2);
  SimConfig sim;
};

std::vector<CaseSetup> build_cases(const json& root, std::uint64_t seed) {
  const json cases = root.contains("cases") ? root.at("cases") : default_cases();
  if (!cases.is_array() || cases.empty()) throw FieldError("cases", "must be a non-empty array");
  std::vector<CaseSetup> out;
  std::set<std::string> names;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const std::string base = "cases[" + std::to_string(i) + "]";
    const json& c = cases[i];
    if (!c.is_object()) throw FieldError(base, "must be an object");
    reject_unknown(c, base, {"name", "control", "noise_operators"});
    CaseSetup cs;
    cs.name = text(c, base, "name", std::nullopt);
    if (cs.name.empty() || cs.name.find_first_not_of("abcdefghijklmnopqrstuvwxyz0123456789_-") != std::string::npos) {
      throw FieldError(join(base, "name"), "must be a non-empty lowercase identifier");
    }
    if (!names.insert(cs.name).second) throw FieldError(join(base, "name"), "duplicate case name");
    cs.system = build_system(root, c.contains("noise_operators") ? &c.at("noise_operators") : nullptr,
                             join(base, "noise_operators"));
    cs.noise = build_noise(root, static_cast<int>(cs.system.ops.size()));
    const double tau = correlation_time(cs.noise, number(section(root, "sim"), "sim", "dt", 1.0));
    cs.control = build_control(c.contains("control") ? c.at("control") : empty_object(), join(base, "control"),
                               cs.system.dim, tau);
    cs.sim = build_sim(root, cs.noise, cs.control, cs.system, seed);
    out.push_back(std::move(cs));
  }
  return out;
}

LindbladParts lab_generator(const SimConfig& sim) {
  const NoiseModel eff = sim.effective_noise();
  if (eff.kind() == NoiseKind::white) return white_noise_generator(eff, sim.control, sim.ops, 0.0);
  return coarse_grained_lindbladian(fourier_data(sim.control, sim.ops), eff);
}

void run_fig_compare(Context& ctx) {
  const auto cases = build_cases(ctx.config.raw, ctx.config.seed);
  std::map<std::string, JackknifeEstimate> rates;
  std::map<ControlKind, std::string> by_kind;
  for (const auto& cs : cases) {
    ctx.note("case " + cs.name + ": " + std::to_string(cs.sim.n_traj) + " trajectories, " +
             std::to_string(cs.sim.total_steps()) + " steps");
    const EnsembleResult res = run_ensemble(cs.sim);
    const TimeScale ts = cs.sim.time_scale();
    const LindbladParts coarse = ts.to_coarse(lab_generator(cs.sim));
    StatePath pred = evolve_generator(coarse.total, cs.sim.rho0, res.s);
    pred.times = res.t;
    const CompareReport rep = compare(res, pred);

    Csv csv(ctx.file("fig_compare_" + cs.name + ".csv"),
            {"s", "t", "purity", "purity_se", "bloch_lognorm", "bloch_se", "log_purity_mc", "log_purity_mc_se",
             "log_purity_lindblad"});
    for (std::size_t j = 0; j < res.s.size(); ++j) {
      const double lp = std::log((pred.states[j] * pred.states[j]).trace().real());
      csv.row(res.s[j], res.t[j], res.purity[j], res.purity_se[j], res.bloch_lognorm[j], res.bloch_se[j],
              res.log_purity_unbiased[j], res.log_purity_se[j], lp);
    }
    json sidecar;
    sidecar["sim"] = sim_config_to_json(cs.sim);
    sidecar["generator"] = parts_to_json(coarse, {{"regime", "coarse-grained"},
                                                  {"eps", cs.sim.eps},
                                                  {"omega_c_tau", cs.control.omega_c() * cs.noise.tau()},
                                                  {"noise_kind", to_string(cs.noise.kind())},
                                                  {"time", "coarse"}});
    ctx.write_json("fig_compare_" + cs.name + ".json", sidecar);

    std::ostringstream detail;
    detail << "max |gap| " << rep.max_abs_log_purity_gap << ", chi2/pt " << rep.chi2_per_point;
    ctx.add(make_check("log_purity_within_3se[" + cs.name + "]", rep.max_abs_log_purity_z <= 3.0,
                       rep.max_abs_log_purity_z, 3.0, detail.str()));
    ctx.add_all(structural_checks(cs.name, coarse, true));
    by_kind.emplace(cs.control.kind(), cs.name);
    if (cs.control.kind() == ControlKind::none || cs.control.kind() == ControlKind::bangbang_pi) {
      rates[cs.name] = fit_decay_rate(res);
      std::ostringstream line;
      line << "fitted decay rate [" << cs.name << "] = " << rates[cs.name].value << " +- " << rates[cs.name].se;
      ctx.note(line.str());
    }
  }
  if (by_kind.count(ControlKind::none) && by_kind.count(ControlKind::bangbang_pi)) {
    const auto& a = rates[by_kind[ControlKind::none]];
    const auto& b = rates[by_kind[ControlKind::bangbang_pi]];
    const double z = (a.value - b.value) / std::sqrt(a.se * a.se + b.se * b.se);
    ctx.add(make_check("bangbang_rate_below_none", z > 3.0, z, 3.0, "separation in standard errors"));
  }
}

void run_spectra(Context& ctx) {
  std::vector<double> spins = number_list(ctx.params, "params", "spins", {});
  if (spins.empty()) spins = {positive(section(ctx.config.raw, "system"), "system", "spin", 0.5)};
  Csv csv(ctx.file("spectra.csv"),
          {"spin", "operator", "eigenvalue", "multiplicity", "expected_multiplicity", "error"});
  for (double sp : spins) {
    const auto rows = spin_spectra(sp);
    double worst = 0.0;
    for (const auto& r : rows) {
      csv.row(sp, r.operator_name, r.value, r.multiplicity, r.expected_multiplicity, r.error);
      worst = std::max(worst, r.error);
    }
    std::ostringstream name;
    name << "spectra_match[S=" << sp << "]";
    ctx.add(make_check(name.str(), spectra_match(rows), worst, 1e-9, "eigenvalues and multiplicities"));
  }
}

void run_iso12(Context& ctx) {
  const json& root = ctx.config.raw;
  const NoiseModel model = build_noise(root, 3, {"ou", 1.0, 0.0});
  if (model.kind() == NoiseKind::white) throw FieldError("noise.kind", "iso12 needs coloured noise");
  const auto grid = number_list(ctx.params, "params", "omega_tau", {1.0, 2.0, 4.0});
  const int n_harm = static_cast<int>(integer(ctx.params, "params", "n_harmonics", 200));
  const auto s = spin_operators(0.5);
  const std::vector<HermitianOperator> ops{s.x, s.y, s.z};
  Csv csv(ctx.file("iso12.csv"),
          {"omega_tau", "gamma_formula", "gamma_x", "gamma_y", "gamma_z", "hamiltonian_norm"});
  for (double wt : grid) {
    if (!(wt > 0.0)) throw FieldError("params.omega_tau", "values must be positive");
    const double w = wt / model.tau();
    const auto sched = ControlSchedule::bangbang_iso12(2, w);
    const auto fourier = fourier_data(sched, ops, n_harm);
    const double formula = iso_dephasing_rate(model, w, n_harm).partial;
    std::array<double, 3> direct{};
    double ham = 0.0;
    double total_norm = 0.0;
    for (std::size_t a = 0; a < 3; ++a) {
      const auto g = coarse_grained_channel(fourier, model, a);
      direct[a] = dephasing_rate_of(g.total, ops[a]);
      ham = std::max(ham, g.hamiltonian.matrix().norm());
      total_norm = std::max(total_norm, g.total.matrix().norm());
    }
    csv.row(wt, formula, direct[0], direct[1], direct[2], ham);
    double agree = 0.0;
    for (double d : direct) agree = std::max(agree, rel_diff(d, formula));
    const double spread = (*std::max_element(direct.begin(), direct.end()) -
                           *std::min_element(direct.begin(), direct.end())) /
                          formula;
    std::ostringstream tag;
    tag << "[omega_tau=" << wt << "]";
    ctx.add(make_check("iso_formula_matches_direct" + tag.str(), agree < 1e-6, agree, 1e-6));
    ctx.add(make_check("iso_rates_isotropic" + tag.str(), spread < 1e-9, spread, 1e-9));
    ctx.add(make_check("iso_hamiltonian_vanishes" + tag.str(), ham <= 1e-12 * total_norm, ham,
                       1e-12 * total_norm));
    const auto full = coarse_grained_lindbladian(fourier, model);
    ctx.add_all(structural_checks("iso12" + tag.str(), full, true));
  }
  const auto eff = is_effective(ControlSchedule::bangbang_iso12(2, 1.0), ops);
  ctx.add(make_check("iso12_effective", eff.effective,
                     *std::max_element(eff.zero_frequency_norms.begin(), eff.zero_frequency_norms.end()), 1e-10));
}

void run_oscillator(Context& ctx) {
  const json& root = ctx.config.raw;
  const NoiseModel model = build_noise(root, 2, {"ou", 1.0, 0.0});
  if (model.kind() == NoiseKind::white) throw FieldError("noise.kind", "oscillator needs coloured noise");
  OscillatorNoise kind;
  try {
    kind = oscillator_noise_from_string(text(ctx.params, "params", "kind", std::string("linear")));
  } catch (const FieldError&) {
    throw;
  } catch (const std::exception&) {
    throw FieldError("params.kind", "must be linear or frequency");
  }
  const long n_fock = integer(ctx.params, "params", "n_fock", 16);
  if (n_fock < 8) throw FieldError("params.n_fock", "must be >= 8");
  const double w = positive(ctx.params, "params", "omega_c_tau", 1.0) / model.tau();
  std::optional<Eigen::Matrix2d> corr;
  if (ctx.params.contains("correlation")) {
    const json& c = ctx.params.at("correlation");
    if (!c.is_array() || c.size() != 2 || !c[0].is_array() || !c[1].is_array() || c[0].size() != 2 ||
        c[1].size() != 2) {
      throw FieldError("params.correlation", "must be a 2x2 array");
    }
    Eigen::Matrix2d m;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        if (!c[i][j].is_number()) throw FieldError("params.correlation", "entries must be numbers");
        m(i, j) = c[i][j].get<double>();
      }
    }
    corr = m;
  }
  OscillatorGenerator g;
  try {
    g = oscillator_generators(kind, n_fock, model, w, corr);
  } catch (const std::invalid_argument& e) {
    throw FieldError("params", e.what());
  }
  const Index block = n_fock / 2;
  const auto ops = oscillator_operators(n_fock);
  ctx.add_all(structural_checks("oscillator", g.parts, false));
  if (kind == OscillatorNoise::linear) {
    const SuperOperator adx = ad(ops.x);
    const SuperOperator adp = ad(ops.p);
    const double comm = restrict_to_block(adx * adp - adp * adx, block).norm();
    const double ham = restrict_to_block(g.parts.hamiltonian, block).norm();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(g.gamma);
    Csv csv(ctx.file("oscillator.csv"), {"quantity", "value"});
    csv.row("gamma_xx", g.gamma(0, 0));
    csv.row("gamma_pp", g.gamma(1, 1));
    csv.row("gamma_xp", g.gamma(0, 1));
    csv.row("j_tilde_omega_c", model.spectral_density(w));
    csv.row("ad_commutator_norm_lower_block", comm);
    csv.row("hamiltonian_norm_lower_block", ham);
    ctx.add(make_check("ad_x_ad_p_commute_lower_block", comm < 1e-8, comm, 1e-8));
    ctx.add(make_check("linear_noise_no_hamiltonian", ham < 1e-10, ham, 1e-10));
    ctx.add(make_check("gamma_psd", es.eigenvalues().minCoeff() >= -1e-12, es.eigenvalues().minCoeff(), -1e-12));
  } else {
    Csv csv(ctx.file("oscillator.csv"), {"n", "m", "dephasing_eigenvalue", "expected"});
    const Index d = n_fock;
    // Rate per unit (m - n)^2 from the |0><1| coherence.
    Matrix e01 = Matrix::Zero(d, d);
    e01(0, 1) = 1.0;
    const double unit = g.dephasing.apply(e01)(0, 1).real();
    double worst = 0.0;
    for (Index n = 0; n < block; ++n) {
      for (Index m = 0; m < block; ++m) {
        Matrix e = Matrix::Zero(d, d);
        e(n, m) = 1.0;
        const Matrix img = g.dephasing.apply(e);
        const Complex lambda = img(n, m);
        const double expected = unit * static_cast<double>((m - n) * (m - n));
        const double off = (img - lambda * e).norm();
        worst = std::max({worst, std::abs(lambda - expected), off});
        csv.row(n, m, lambda.real(), expected);
      }
    }
    const double sum = (g.unitary + g.dephasing + g.parametric - g.parts.total).matrix().norm();
    ctx.add(make_check("dephasing_eigenvalues_quadratic", worst < 1e-9 * std::max(1.0, std::abs(unit)), worst,
                       1e-9));
    ctx.add(make_check("labeled_parts_sum_to_total", sum < 1e-12, sum, 1e-12));
  }
}

void run_custom(Context& ctx) {
  const json& root = ctx.config.raw;
  SystemSetup sys = build_system(root);
  const NoiseModel noise = build_noise(root, static_cast<int>(sys.ops.size()));
  const double dt = number(section(root, "sim"), "sim", "dt", 1.0);
  const double tau = correlation_time(noise, dt);
  const ControlSchedule control = build_control(section(root, "control"), "control", sys.dim, tau);
  Regime regime;
  try {
    regime = regime_from_string(text(ctx.params, "params", "regime", std::string("coarse-grained")));
  } catch (const FieldError&) {
    throw;
  } catch (const std::exception&) {
    throw FieldError("params.regime", "must be one of white, commutative, finite-eps, coarse-grained");
  }
  const bool run_mc = flag(ctx.params, "params", "monte_carlo", false);
  const SimConfig sim = build_sim(root, noise, control, sys, ctx.config.seed);
  const NoiseModel eff = sim.effective_noise();
  const TimeScale ts = sim.time_scale();

  GeneratorSpec spec;
  spec.regime = regime;
  spec.eps = sim.eps;
  spec.noise = eff;
  spec.control = control;
  spec.ops = sys.ops;
  spec.n_harmonics = static_cast<int>(integer(ctx.params, "params", "n_harmonics", 41));
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw FieldError("params.regime", e.what());
  }

  std::vector<double> grid;
  for (int j = 0; j < sim.n_out; ++j) grid.push_back(static_cast<double>(sim.output_steps()[static_cast<std::size_t>(j)]) * dt);
  const double max_step = positive(ctx.params, "params", "max_step", tau / 40.0);
  StatePath path;
  LindbladParts snapshot;
  bool check_cp = false;
  switch (regime) {
    case Regime::coarse_grained:
      snapshot = coarse_grained_lindbladian(fourier_data(control, sys.ops, spec.n_harmonics), eff);
      path = evolve_generator(snapshot.total, sys.rho0, grid);
      check_cp = true;
      break;
    case Regime::white: {
      snapshot = white_noise_generator(eff, control, sys.ops, 0.0);
      check_cp = true;
      if (control.periodic()) {
        path = evolve_generator([&](double t) { return white_noise_generator(eff, control, sys.ops, t).total; },
                                sys.rho0, grid, max_step);
      } else {
        path = evolve_generator(snapshot.total, sys.rho0, grid);
      }
      break;
    }
    case Regime::commutative: {
      const double t = number(ctx.params, "params", "t", 50.0 * tau);
      snapshot = LindbladParts::from(SuperOperator::zero(sys.dim), commutative_generator(eff, sys.ops.front(), t));
      path = evolve_generator([&](double u) { return commutative_generator(eff, sys.ops.front(), u); }, sys.rho0,
                              grid, max_step);
      break;
    }
    case Regime::finite_eps: {
      const FiniteEpsGenerator gen(eff, control, sys.ops);
      snapshot = gen.parts(number(ctx.params, "params", "t", 0.0));
      path = evolve_generator([&](double u) { return gen(u); }, sys.rho0, grid, max_step);
      break;
    }
  }
  ctx.write_json("generator.json",
                 parts_to_json(snapshot, {{"regime", to_string(regime)},
                                          {"eps", sim.eps},
                                          {"omega_c_tau", control.omega_c() * tau},
                                          {"noise_kind", to_string(noise.kind())},
                                          {"time", "lab"}}));
  ctx.add_all(structural_checks(to_string(regime), snapshot, check_cp));

  std::optional<EnsembleResult> res;
  std::optional<CompareReport> rep;
  if (run_mc) {
    res = run_ensemble(sim);
    rep = compare(*res, path);
    ctx.add(make_check("log_purity_within_3se", rep->max_abs_log_purity_z <= 3.0, rep->max_abs_log_purity_z, 3.0));
  }
  Csv csv(ctx.file("custom.csv"), {"s", "t", "purity", "log_purity", "purity_mc", "purity_mc_se"});
  for (std::size_t j = 0; j < path.times.size(); ++j) {
    const double p = (path.states[j] * path.states[j]).trace().real();
    if (res) {
      csv.row(ts.s_of_t(path.times[j]), path.times[j], p, std::log(p), res->purity[j], res->purity_se[j]);
    } else {
      csv.row(ts.s_of_t(path.times[j]), path.times[j], p, std::log(p), "", "");
    }
  }
}

void dispatch(Context& ctx) {
  const std::string& e = ctx.config.experiment;
  if (e == "gamma-of-t") return run_gamma_of_t(ctx);
  if (e == "rates-vs-omega") return run_rates_vs_omega(ctx);
  if (e == "fig-compare") return run_fig_compare(ctx);
  if (e == "spectra") return run_spectra(ctx);
  if (e == "iso12") return run_iso12(ctx);
  if (e == "oscillator") return run_oscillator(ctx);
  if (e == "custom") return run_custom(ctx);
  throw FieldError("experiment", "unknown experiment '" + e + "'");
}

// Builds everything an experiment needs without running it.
void dry_build(const ExperimentConfig& cfg, ValidationReport& report) {
  const json& root = cfg.raw;
  const json& params = root.contains("params") ? root.at("params") : empty_object();
  auto attempt = [&](auto&& fn) {
    try {
      fn();
    } catch (const FieldError& e) {
      report.issues.push_back({e.path, e.what()});
    } catch (const std::exception& e) {
      report.issues.push_back({"", e.what()});
    }
  };
  attempt([&] {
    if (!params.is_object()) throw FieldError("params", "must be an object");
    reject_unknown(params, "params", kParams.at(cfg.experiment));
  });
  if (!report.ok()) return;
  const std::string& e = cfg.experiment;
  if (e == "fig-compare") {
    attempt([&] { build_cases(root, cfg.seed); });
    return;
  }
  if (e == "custom") {
    attempt([&] {
      SystemSetup sys = build_system(root);
      const NoiseModel noise = build_noise(root, static_cast<int>(sys.ops.size()));
      const double dt = number(section(root, "sim"), "sim", "dt", 1.0);
      const ControlSchedule control =
          build_control(section(root, "control"), "control", sys.dim, correlation_time(noise, dt));
      build_sim(root, noise, control, sys, cfg.seed);
      regime_from_string(text(params, "params", "regime", std::string("coarse-grained")));
    });
    return;
  }
  if (e == "spectra") {
    attempt([&] {
      for (double sp : number_list(params, "params", "spins", {0.5})) {
        if (!(sp > 0.0) || std::abs(2.0 * sp - std::round(2.0 * sp)) > 1e-12) {
          throw FieldError("params.spins", "spins must be positive multiples of 1/2");
        }
      }
    });
    return;
  }
  const NoiseDefaults defaults = e == "gamma-of-t" ? NoiseDefaults{"damped-cosine", 1.0, 4.0}
                                                   : NoiseDefaults{"ou", 1.0, 0.0};
  const int channels = e == "iso12" ? 3 : (e == "oscillator" ? 2 : 1);
  attempt([&] {
    const NoiseModel m = build_noise(root, channels, defaults);
    if (m.kind() == NoiseKind::white) throw FieldError("noise.kind", e + " needs coloured noise");
  });
  attempt([&] {
    const json& sim = section(root, "sim");
    if (sim.contains("eps")) {
      const double eps = number(sim, "sim", "eps", std::nullopt);
      if (!(eps > 0.0 && eps < 1.0)) throw FieldError("sim.eps", "eps out of (0,1)");
    }
  });
  if (e == "oscillator") {
    attempt([&] {
      oscillator_noise_from_string(text(params, "params", "kind", std::string("linear")));
      if (integer(params, "params", "n_fock", 16) < 8) throw FieldError("params.n_fock", "must be >= 8");
      positive(params, "params", "omega_c_tau", 1.0);
    });
  }
  if (e == "iso12") {
    attempt([&] {
      for (double wt : number_list(params, "params", "omega_tau", {1.0})) {
        if (!(wt > 0.0)) throw FieldError("params.omega_tau", "values must be positive");
      }
      if (integer(params, "params", "n_harmonics", 200) < 1) throw FieldError("params.n_harmonics", "must be >= 1");
    });
  }
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

std::optional<ExperimentConfig> parse_document(const std::string& content, ValidationReport& report) {
  json doc;
  try {
    doc = json::parse(content);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(content, e.byte);
    std::ostringstream msg;
    msg << "parse error at line " << line << ", column " << col << ": " << e.what();
    report.issues.push_back({"", msg.str()});
    return std::nullopt;
  }
  if (!doc.is_object()) {
    report.issues.push_back({"", "top level must be an object"});
    return std::nullopt;
  }
  ExperimentConfig cfg;
  cfg.raw = doc;
  try {
    reject_unknown(doc, "", {"experiment", "description", "seed", "output", "noise", "control", "system", "sim",
                             "cases", "params"});
    cfg.experiment = text(doc, "", "experiment", std::nullopt);
    if (!kExperiments.count(cfg.experiment)) {
      throw FieldError("experiment", "unknown experiment '" + cfg.experiment +
                                         "' (expected gamma-of-t, rates-vs-omega, fig-compare, spectra, iso12, "
                                         "oscillator or custom)");
    }
    if (doc.contains("seed")) {
      if (!doc.at("seed").is_number_unsigned()) throw FieldError("seed", "must be a non-negative integer");
      cfg.seed = doc.at("seed").get<std::uint64_t>();
    }
    cfg.output_dir = text(doc, "", "output", "out/" + cfg.experiment);
  } catch (const FieldError& e) {
    report.issues.push_back({e.path, e.what()});
    return std::nullopt;
  }
  return cfg;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double dissipator_form_max(const SuperOperator& diss, std::mt19937_64& rng) {
  // max over random Hermitian X of <X, D X> / <X, X>
  std::normal_distribution<double> normal;
  const Index d = diss.dim();
  double worst = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < 100; ++k) {
    Matrix x(d, d);
    for (Index i = 0; i < d; ++i) {
      for (Index j = 0; j < d; ++j) x(i, j) = Complex(normal(rng), normal(rng));
    }
    x = 0.5 * (x + x.adjoint());
    worst = std::max(worst, (x.adjoint() * diss.apply(x)).trace().real() / x.squaredNorm());
  }
  return worst;
}

}  // namespace

std::string ValidationReport::to_string() const {
  if (issues.empty()) return "valid";
  std::ostringstream out;
  for (const auto& i : issues) out << (i.path.empty() ? "<document>" : i.path) << ": " << i.message << '\n';
  return out.str();
}

ConfigError::ConfigError(ValidationReport report)
    : std::runtime_error(report.to_string()), report_(std::move(report)) {}

ValidationReport validate_config_text(const std::string& content) {
  ValidationReport report;
  const auto cfg = parse_document(content, report);
  if (cfg) dry_build(*cfg, report);
  return report;
}

ValidationReport validate_config_file(const std::string& path) {
  std::string content;
  try {
    content = read_file(path);
  } catch (const std::exception& e) {
    ValidationReport r;
    r.issues.push_back({"", e.what()});
    return r;
  }
  return validate_config_text(content);
}

ExperimentConfig parse_config_text(const std::string& content) {
  ValidationReport report;
  auto cfg = parse_document(content, report);
  if (cfg) dry_build(*cfg, report);
  if (!report.ok()) throw ConfigError(report);
  return *cfg;
}

ExperimentConfig load_config(const std::string& path) { return parse_config_text(read_file(path)); }

json check_to_json(const CheckResult& c) {
  json j = {{"name", c.name}, {"passed", c.passed}, {"informational", c.informational}, {"detail", c.detail}};
  j["value"] = std::isfinite(c.value) ? json(c.value) : json(nullptr);
  j["threshold"] = c.threshold;
  return j;
}

bool RunResult::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.informational || c.passed; });
}

int RunResult::exit_code(bool check_mode) const { return check_mode && !all_passed() ? 1 : 0; }

RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options, std::ostream& console) {
  ExperimentConfig cfg = config;
  if (options.seed) cfg.seed = *options.seed;
  if (options.output_dir) cfg.output_dir = *options.output_dir;
  const fs::path out = cfg.output_dir;
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw std::runtime_error("output directory " + out.string() + " is not writable");

  const json& params = cfg.raw.contains("params") ? cfg.raw.at("params") : empty_object();
  Context ctx{cfg, params, out, console, std::ofstream(out / "run.log"), {}};
  if (!ctx.log) throw std::runtime_error("cannot write " + (out / "run.log").string());
  ctx.result.files.push_back((out / "run.log").string());
  ctx.note("experiment " + cfg.experiment + ", seed " + std::to_string(cfg.seed) + ", threads " +
           std::to_string(resolve_threads(0)));
  try {
    dispatch(ctx);
  } catch (const FieldError& e) {
    throw ConfigError(ValidationReport{{{e.path, e.what()}}});
  }
  const bool passed = ctx.result.all_passed();
  ctx.note(std::string("overall: ") + (passed ? "pass" : "FAIL"));

  json summary;
  summary["experiment"] = cfg.experiment;
  summary["seed"] = cfg.seed;
  summary["passed"] = passed;
  summary["checks"] = json::array();
  for (const auto& c : ctx.result.checks) summary["checks"].push_back(check_to_json(c));
  summary["files"] = ctx.result.files;
  summary["config"] = cfg.raw;
  ctx.result.files.push_back((out / "summary.json").string());
  std::ofstream(out / "summary.json") << summary.dump(2) << '\n';
  return ctx.result;
}

std::vector<CheckResult> structural_checks(const std::string& label, const LindbladParts& parts, bool check_cp,
                                           std::uint64_t seed) {
  std::vector<CheckResult> out;
  const Index d = parts.total.dim();
  const Matrix id = Matrix::Identity(d, d);
  const double scale = std::max(1.0, parts.total.matrix().norm());
  const double unital = parts.total.apply(id).norm() / scale;
  out.push_back(make_check("unital[" + label + "]", unital < 1e-11, unital, 1e-11));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double trace_err = 0.0;
  for (int k = 0; k < 100; ++k) {
    Matrix g(d, d);
    for (Index i = 0; i < d; ++i) {
      for (Index j = 0; j < d; ++j) g(i, j) = Complex(normal(rng), normal(rng));
    }
    Matrix rho = g * g.adjoint();
    rho /= rho.trace().real();
    trace_err = std::max(trace_err, std::abs(parts.total.apply(rho).trace()) / scale);
  }
  out.push_back(make_check("trace_preserving[" + label + "]", trace_err < 1e-11, trace_err, 1e-11));

  if (check_cp) {
    // The generator scale is arbitrary (lab or coarse time); probe exp(L s)
    // at s in {0.1, 1, 5} in units of the slowest nonzero rate.
    double rate = 0.0;
    for (const auto& ev : superop_spectrum(parts.total)) rate = std::max(rate, std::abs(ev.real()));
    const double unit = rate > 0.0 ? 1.0 / rate : 1.0;
    double worst = std::numeric_limits<double>::infinity();
    for (double s : {0.1, 1.0, 5.0}) worst = std::min(worst, min_choi_eigenvalue(superop_exp(parts.total, s * unit)));
    out.push_back(make_check("completely_positive[" + label + "]", worst >= -1e-8, worst, -1e-8));
    const double form = dissipator_form_max(parts.dissipative, rng) / scale;
    out.push_back(make_check("dissipator_negative[" + label + "]", form <= 1e-9, form, 1e-9));
  }
  return out;
}

std::vector<SpectrumRow> spin_spectra(double spin) {
  const auto s = spin_operators(spin);
  const int two_s = static_cast<int>(std::lround(2.0 * spin));
  const SuperOperator ax = ad(s.x);
  const SuperOperator ay = ad(s.y);
  const SuperOperator az = ad(s.z);

  // Closed forms; keys are exact multiples of 1/4 scaled to integers.
  std::map<long, int> ad_z;
  std::map<long, int> casimir;
  std::map<long, int> planar;
  for (int k = -two_s; k <= two_s; ++k) ad_z[4L * k] = two_s + 1 - std::abs(k);
  for (int j = 0; j <= two_s; ++j) {
    casimir[4L * j * (j + 1)] += 2 * j + 1;
    for (int m = -j; m <= j; ++m) planar[4L * (j * (j + 1) - m * m)] += 1;
  }
  auto compare_spectrum = [](const std::string& name, const SuperOperator& op, const std::map<long, int>& expected) {
    std::vector<SpectrumRow> rows;
    const auto groups = group_spectrum(superop_spectrum(op), 1e-8);
    std::set<long> seen;
    for (const auto& g : groups) {
      long best = 0;
      double err = std::numeric_limits<double>::infinity();
      for (const auto& [key, mult] : expected) {
        const double e = std::abs(g.value - Complex(key / 4.0, 0.0));
        if (e < err) {
          err = e;
          best = key;
        }
      }
      SpectrumRow row{name, g.value.real(), g.multiplicity, 0, err};
      if (err < 1e-6) {
        row.expected_multiplicity = expected.at(best);
        seen.insert(best);
      }
      rows.push_back(row);
    }
    for (const auto& [key, mult] : expected) {
      if (!seen.count(key)) rows.push_back({name, key / 4.0, 0, mult, std::numeric_limits<double>::infinity()});
    }
    return rows;
  };
  std::vector<SpectrumRow> out;
  for (auto& r : compare_spectrum("ad_z", az, ad_z)) out.push_back(r);
  for (auto& r : compare_spectrum("casimir_xyz", ax * ax + ay * ay + az * az, casimir)) out.push_back(r);
  for (auto& r : compare_spectrum("planar_xy", ax * ax + ay * ay, planar)) out.push_back(r);
  return out;
}

bool spectra_match(const std::vector<SpectrumRow>& rows, double tol) {
  return std::all_of(rows.begin(), rows.end(), [tol](const SpectrumRow& r) {
    return r.error < tol && r.multiplicity == r.expected_multiplicity;
  });
}

}  // namespace forge
