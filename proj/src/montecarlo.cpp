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

#include "forge/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <locale>
#include <iomanip>
#include <limits>
#include <stdexcept>
#include <thread>

namespace forge {

namespace {

constexpr std::size_t kReunitarizeEvery = 1000;
constexpr std::size_t kMaxBlocks = 100;

// Interaction-picture operators at every step midpoint, shared by all
// trajectories of an ensemble.
struct Prepared {
  NoiseModel noise;
  std::size_t steps = 0;
  std::vector<std::size_t> out_steps;
  std::vector<std::vector<Matrix>> rotated;  // rotated[k][a]
};

Prepared prepare(const SimConfig& config) {
  config.validate();
  Prepared p{config.effective_noise(), config.total_steps(), config.output_steps(), {}};
  p.rotated.resize(p.steps);
  for (std::size_t k = 0; k < p.steps; ++k) {
    const double t = (static_cast<double>(k) + 0.5) * config.dt;
    for (const auto& h : config.ops) p.rotated[k].push_back(config.control.interaction_hamiltonian(h, t).matrix());
  }
  return p;
}

TrajectoryPath integrate(const Prepared& p, const SimConfig& config, std::uint64_t seed) {
  const Index d = config.ops.front().dim();
  const auto sample = sample_noise(p.noise, config.dt, static_cast<double>(p.steps) * config.dt, seed);
  TrajectoryPath path;
  path.steps = p.out_steps;
  Matrix u = Matrix::Identity(d, d);
  Matrix h(d, d);
  std::size_t next = 0;
  auto record = [&](std::size_t k) {
    while (next < p.out_steps.size() && p.out_steps[next] == k) {
      path.unitaries.push_back(u);
      ++next;
    }
  };
  record(0);
  for (std::size_t k = 0; k < p.steps; ++k) {
    h.setZero();
    for (std::size_t a = 0; a < config.ops.size(); ++a) {
      const double xi = sample.values[a][k];
      if (!std::isfinite(xi)) throw std::runtime_error("run_trajectory: non-finite noise sample");
      h += xi * p.rotated[k][a];
    }
    u = step_propagator(h, config.dt) * u;
    if ((k + 1) % kReunitarizeEvery == 0) {
      const double drift = (u.adjoint() * u - Matrix::Identity(d, d)).norm();
      path.unitarity_drift = std::max(path.unitarity_drift, drift);
      u = reunitarize(u);
    }
    record(k + 1);
  }
  const double drift = (u.adjoint() * u - Matrix::Identity(d, d)).norm();
  path.unitarity_drift = std::max(path.unitarity_drift, drift);
  return path;
}

double generalized_bloch_sq(double purity, Index d) {
  const double dd = static_cast<double>(d);
  return (dd * purity - 1.0) / (dd - 1.0);
}

double log_or_nan(double x) { return x > 0.0 ? std::log(x) : std::numeric_limits<double>::quiet_NaN(); }

double purity_of(const Matrix& rho) { return (rho * rho).trace().real(); }

std::vector<Matrix> leave_out_mean(const EnsembleResult& r, std::size_t b) {
  const std::size_t n_out = r.block_sums.front().size();
  std::vector<Matrix> out(n_out);
  const double count = static_cast<double>(r.n_traj - r.block_sizes[b]);
  for (std::size_t j = 0; j < n_out; ++j) {
    Matrix total = Matrix::Zero(r.block_sums[b][j].rows(), r.block_sums[b][j].cols());
    for (std::size_t c = 0; c < r.block_sums.size(); ++c) {
      if (c != b) total += r.block_sums[c][j];
    }
    out[j] = total / count;
  }
  return out;
}

std::vector<Matrix> full_mean(const EnsembleResult& r) {
  std::vector<Matrix> out;
  for (const auto& m : r.mean_rho) out.push_back(m.matrix());
  return out;
}

}  // namespace

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("sim.dt: must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("sim.eps: eps out of (0,1)");
  if (!(s_max > 0.0)) throw std::invalid_argument("sim.s_max: must be positive");
  if (n_out < 2) throw std::invalid_argument("sim.n_out: must be >= 2");
  if (n_traj < 1) throw std::invalid_argument("sim.n_traj: must be >= 1");
  if (ops.empty()) throw std::invalid_argument("system.noise_operators: empty");
  if (static_cast<int>(ops.size()) != noise.channels()) {
    throw std::invalid_argument("noise.channels: must match the number of noise operators");
  }
  for (const auto& h : ops) {
    if (h.dim() != control.dim()) throw std::invalid_argument("system: operator dimension does not match control");
  }
  if (noise.kind() != NoiseKind::ou && noise.kind() != NoiseKind::white) {
    throw std::invalid_argument("noise.kind: only ou and white noise can be sampled");
  }
  if (noise.kind() == NoiseKind::ou && noise.tau() / dt < 10.0 - 1e-12) {
    throw std::invalid_argument("sim.dt: tau/dt must be >= 10");
  }
  if (control.periodic() && control.omega_c() * dt > 0.3 + 1e-12) {
    throw std::invalid_argument("sim.dt: omega_c * dt must be <= 0.3");
  }
  if (rho0.rows() != control.dim() || rho0.cols() != control.dim()) {
    throw std::invalid_argument("system.initial_state: dimension mismatch");
  }
  DensityMatrix check(rho0);
  (void)check;
}

NoiseModel SimConfig::effective_noise() const {
  if (!calibrate) return noise;
  if (noise.kind() == NoiseKind::white) {
    double worst = 0.0;
    for (std::size_t a = 0; a < ops.size(); ++a) {
      const double n = operator_norm(ops[a]);
      worst = std::max(worst, noise.weight(static_cast<int>(a)) * n * n);
    }
    // eps^2 = dt * J~ * ||H||^2 with J~ = sigma^2.
    const double current = dt * noise.sigma() * noise.sigma() * worst;
    return noise.scaled(eps * eps / current);
  }
  return calibrate_noise(noise, ops, eps);
}

TimeScale SimConfig::time_scale() const {
  if (noise.kind() == NoiseKind::white) {
    if (calibrate) return TimeScale{dt, eps};
    double worst = 0.0;
    for (std::size_t a = 0; a < ops.size(); ++a) {
      const double n = operator_norm(ops[a]);
      worst = std::max(worst, noise.weight(static_cast<int>(a)) * n * n);
    }
    return TimeScale{dt, std::sqrt(dt * noise.sigma() * noise.sigma() * worst)};
  }
  if (calibrate) return TimeScale{noise.tau(), eps};
  return TimeScale{noise.tau(), weak_coupling_eps(noise, ops)};
}

std::vector<std::size_t> SimConfig::output_steps() const {
  const TimeScale ts = time_scale();
  std::vector<std::size_t> out;
  for (int j = 0; j < n_out; ++j) {
    const double s = s_max * j / (n_out - 1);
    out.push_back(static_cast<std::size_t>(std::llround(ts.t_of_s(s) / dt)));
  }
  return out;
}

std::size_t SimConfig::total_steps() const { return output_steps().back(); }

nlohmann::json sim_config_to_json(const SimConfig& c) {
  const NoiseModel eff = c.effective_noise();
  nlohmann::json ops = nlohmann::json::array();
  for (const auto& h : c.ops) ops.push_back(matrix_to_json(h.matrix()));
  return {{"dt", c.dt},
          {"eps", c.eps},
          {"s_max", c.s_max},
          {"n_out", c.n_out},
          {"n_traj", c.n_traj},
          {"seed", c.seed},
          {"calibrate", c.calibrate},
          {"noise", {{"kind", to_string(eff.kind())}, {"sigma", eff.sigma()}, {"tau", eff.tau()},
                     {"channels", eff.channels()}}},
          {"control", {{"kind", to_string(c.control.kind())}, {"omega_c", c.control.omega_c()}}},
          {"noise_operators", ops},
          {"initial_state", matrix_to_json(c.rho0)}};
}

Matrix plus_state(Index dim) {
  if (dim < 2) throw std::invalid_argument("plus_state: dim must be >= 2");
  Vector psi = Vector::Zero(dim);
  psi(0) = psi(1) = 1.0 / std::sqrt(2.0);
  return psi * psi.adjoint();
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("FORGE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(std::min<long>(v, 1024));
  }
  return 1;
}

std::uint64_t trajectory_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Matrix step_propagator(const Matrix& h, double dt) {
  if (h.rows() == 2) {
    // h = h0 1 + hx sx + hy sy + hz sz (Pauli matrices)
    const double h0 = 0.5 * (h(0, 0).real() + h(1, 1).real());
    const double hz = 0.5 * (h(0, 0).real() - h(1, 1).real());
    const double hx = h(0, 1).real();
    const double hy = -h(0, 1).imag();
    const double norm = std::sqrt(hx * hx + hy * hy + hz * hz);
    const double c = std::cos(norm * dt);
    const double s = norm > 0.0 ? std::sin(norm * dt) / norm : dt;
    const Complex phase = std::exp(-kI * (h0 * dt));
    Matrix u(2, 2);
    u(0, 0) = phase * Complex(c, -s * hz);
    u(1, 1) = phase * Complex(c, s * hz);
    u(0, 1) = phase * (-kI * s) * Complex(hx, -hy);
    u(1, 0) = phase * (-kI * s) * Complex(hx, hy);
    return u;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const Vector phases = (es.eigenvalues().cast<Complex>() * (-kI * dt)).array().exp();
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

Matrix reunitarize(const Matrix& u) {
  Eigen::JacobiSVD<Matrix> svd(u, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

TrajectoryPath run_trajectory(const SimConfig& config, std::uint64_t seed) {
  const Prepared p = prepare(config);
  return integrate(p, config, seed);
}

EnsembleResult run_ensemble(const SimConfig& config) {
  const Prepared p = prepare(config);
  const Index d = config.rho0.rows();
  const std::size_t n_out = p.out_steps.size();
  const std::size_t n_blocks = std::min(config.n_traj, kMaxBlocks);

  EnsembleResult r;
  r.n_traj = config.n_traj;
  r.block_sums.assign(n_blocks, std::vector<Matrix>(n_out, Matrix::Zero(d, d)));
  r.block_sizes.resize(n_blocks);
  auto block_begin = [&](std::size_t b) { return b * config.n_traj / n_blocks; };
  for (std::size_t b = 0; b < n_blocks; ++b) r.block_sizes[b] = block_begin(b + 1) - block_begin(b);

  std::atomic<std::size_t> next_block{0};
  auto worker = [&]() {
    for (std::size_t b = next_block++; b < n_blocks; b = next_block++) {
      auto& sums = r.block_sums[b];
      for (std::size_t i = block_begin(b); i < block_begin(b + 1); ++i) {
        const auto path = integrate(p, config, trajectory_seed(config.seed, i));
        for (std::size_t j = 0; j < n_out; ++j) {
          sums[j] += path.unitaries[j] * config.rho0 * path.unitaries[j].adjoint();
        }
      }
    }
  };
  const int threads = std::min<int>(resolve_threads(config.threads), static_cast<int>(n_blocks));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  const TimeScale ts = config.time_scale();
  for (std::size_t j = 0; j < n_out; ++j) {
    Matrix total = Matrix::Zero(d, d);
    for (std::size_t b = 0; b < n_blocks; ++b) total += r.block_sums[b][j];
    Matrix mean = total / static_cast<double>(config.n_traj);
    mean = 0.5 * (mean + mean.adjoint());
    const double t = static_cast<double>(p.out_steps[j]) * config.dt;
    r.t.push_back(t);
    r.s.push_back(ts.s_of_t(t));
    r.mean_rho.emplace_back(mean);
  }

  for (std::size_t j = 0; j < n_out; ++j) {
    auto at = [j](const std::vector<Matrix>& path) { return purity_of(path[j]); };
    const auto pur = jackknife(r, at);
    const auto logp = jackknife(r, [&](const std::vector<Matrix>& path) { return log_or_nan(at(path)); });
    const auto bloch = jackknife(
        r, [&](const std::vector<Matrix>& path) { return log_or_nan(generalized_bloch_sq(at(path), d)); });
    r.purity.push_back(pur.value);
    r.purity_se.push_back(pur.se);
    r.purity_unbiased.push_back(pur.bias_corrected);
    r.log_purity.push_back(logp.value);
    r.log_purity_se.push_back(logp.se);
    r.log_purity_unbiased.push_back(logp.bias_corrected);
    r.bloch_lognorm.push_back(bloch.value);
    r.bloch_se.push_back(bloch.se);
  }
  return r;
}

JackknifeEstimate jackknife(const EnsembleResult& result,
                            const std::function<double(const std::vector<Matrix>&)>& statistic) {
  JackknifeEstimate est;
  est.value = statistic(full_mean(result));
  const std::size_t nb = result.block_sums.size();
  if (nb < 2) {
    est.bias_corrected = est.value;
    return est;
  }
  std::vector<double> reps;
  for (std::size_t b = 0; b < nb; ++b) reps.push_back(statistic(leave_out_mean(result, b)));
  double mean = 0.0;
  for (double v : reps) mean += v;
  mean /= static_cast<double>(nb);
  double var = 0.0;
  for (double v : reps) var += (v - mean) * (v - mean);
  const double nbd = static_cast<double>(nb);
  est.se = std::sqrt((nbd - 1.0) / nbd * var);
  est.bias_corrected = nbd * est.value - (nbd - 1.0) * mean;
  return est;
}

JackknifeEstimate fit_decay_rate(const EnsembleResult& result, double min_signal) {
  const Index d = result.mean_rho.front().dim();
  std::vector<std::size_t> used;
  for (std::size_t j = 1; j < result.s.size(); ++j) {
    if (generalized_bloch_sq(result.purity[j], d) > min_signal) used.push_back(j);
  }
  if (used.empty()) throw std::runtime_error("fit_decay_rate: no grid points above the signal threshold");
  auto rate = [&](const std::vector<Matrix>& path) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t j : used) {
      const double y = 0.5 * std::log(std::max(generalized_bloch_sq(purity_of(path[j]), d), 1e-300));
      num += result.s[j] * y;
      den += result.s[j] * result.s[j];
    }
    return -num / den;
  };
  return jackknife(result, rate);
}

StatePath evolve_generator(const SuperOperator& generator, const Matrix& rho0, const std::vector<double>& grid) {
  if (generator.dim() != rho0.rows()) throw std::invalid_argument("evolve_generator: dimension mismatch");
  StatePath out;
  const Vector v0 = vec(rho0);
  for (double t : grid) {
    out.times.push_back(t);
    out.states.push_back(unvec(superop_exp(generator, t).matrix() * v0, rho0.rows()));
  }
  return out;
}

StatePath evolve_generator(const std::function<SuperOperator(double)>& family, const Matrix& rho0,
                           const std::vector<double>& grid, double max_step, double tol) {
  if (!(max_step > 0.0)) throw std::invalid_argument("evolve_generator: max_step must be positive");
  if (grid.empty()) throw std::invalid_argument("evolve_generator: empty grid");
  const Index d = rho0.rows();
  auto run = [&](double refine) {
    StatePath path;
    Vector v = vec(rho0);
    double t = grid.front();
    for (double target : grid) {
      if (target < t - 1e-12) throw std::invalid_argument("evolve_generator: grid must be increasing");
      const double span = target - t;
      const auto n = static_cast<long>(std::ceil(span / max_step - 1e-12) * refine);
      for (long k = 0; k < n; ++k) {
        const double h = span / static_cast<double>(n);
        const double mid = t + (static_cast<double>(k) + 0.5) * h;
        const SuperOperator gen = family(mid);
        if (gen.dim() != d) throw std::invalid_argument("evolve_generator: dimension mismatch");
        v = superop_exp(gen, h).matrix() * v;
      }
      t = target;
      Matrix rho = unvec(v, d);
      path.times.push_back(target);
      path.states.push_back(0.5 * (rho + rho.adjoint()));
    }
    return path;
  };
  const StatePath coarse = run(1.0);
  StatePath fine = run(2.0);
  for (std::size_t j = 0; j < fine.states.size(); ++j) {
    fine.halving_discrepancy =
        std::max(fine.halving_discrepancy, (fine.states[j] - coarse.states[j]).cwiseAbs().maxCoeff());
  }
  if (fine.halving_discrepancy > tol) {
    throw std::runtime_error("evolve_generator: step too large (step-halving discrepancy " +
                             std::to_string(fine.halving_discrepancy) + ")");
  }
  return fine;
}

CompareReport compare(const EnsembleResult& ensemble, const StatePath& predicted) {
  if (ensemble.t.size() != predicted.times.size()) throw std::invalid_argument("compare: grid mismatch");
  for (std::size_t j = 0; j < ensemble.t.size(); ++j) {
    if (std::abs(ensemble.t[j] - predicted.times[j]) > 1e-9 * std::max(1.0, std::abs(ensemble.t[j]))) {
      throw std::invalid_argument("compare: grid mismatch");
    }
  }
  const Index d = ensemble.mean_rho.front().dim();
  CompareReport rep;
  rep.s = ensemble.s;
  auto z_of = [](double gap, double se) {
    if (se > 0.0) return gap / se;
    return std::abs(gap) <= 1e-12 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), gap);
  };
  double chi2 = 0.0;
  for (std::size_t j = 0; j < ensemble.t.size(); ++j) {
    const Matrix& mc = ensemble.mean_rho[j].matrix();
    const Matrix& pr = predicted.states[j];
    const double p_pred = purity_of(pr);
    const double gap = ensemble.purity[j] - p_pred;
    const double lgap = ensemble.log_purity_unbiased[j] - std::log(p_pred);
    rep.purity_gap.push_back(gap);
    rep.purity_z.push_back(z_of(gap, ensemble.purity_se[j]));
    rep.log_purity_gap.push_back(lgap);
    rep.log_purity_z.push_back(z_of(lgap, ensemble.log_purity_se[j]));
    rep.bloch_gap.push_back(ensemble.bloch_lognorm[j] - log_or_nan(generalized_bloch_sq(p_pred, d)));
    Eigen::SelfAdjointEigenSolver<Matrix> es(mc - pr, Eigen::EigenvaluesOnly);
    rep.trace_distance.push_back(0.5 * es.eigenvalues().cwiseAbs().sum());
    rep.max_abs_purity_gap = std::max(rep.max_abs_purity_gap, std::abs(gap));
    rep.max_abs_log_purity_gap = std::max(rep.max_abs_log_purity_gap, std::abs(lgap));
    rep.max_abs_log_purity_z = std::max(rep.max_abs_log_purity_z, std::abs(rep.log_purity_z.back()));
    chi2 += rep.log_purity_z.back() * rep.log_purity_z.back();
  }
  rep.chi2_per_point = chi2 / static_cast<double>(ensemble.t.size());
  return rep;
}

void write_ensemble_csv(const EnsembleResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.imbue(std::locale::classic());
  out << "s,t,purity,purity_se,bloch_lognorm,bloch_se\n";
  out << std::setprecision(17);
  for (std::size_t j = 0; j < result.s.size(); ++j) {
    out << result.s[j] << ',' << result.t[j] << ',' << result.purity[j] << ',' << result.purity_se[j] << ','
        << result.bloch_lognorm[j] << ',' << result.bloch_se[j] << '\n';
  }
}

}  // namespace forge
