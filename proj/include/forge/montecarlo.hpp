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
#include <functional>
#include <string>
#include <vector>

#include "forge/control.hpp"
#include "forge/generators.hpp"
#include "forge/linalg.hpp"
#include "forge/noise.hpp"

namespace forge {

/// Stochastic evolution H^I_xi(t) = sum_a xi_a(t) H^I_a(t) on a uniform grid.
///
/// With calibrate set, sigma is rescaled so that the weak coupling parameter
/// equals eps. For white noise the correlation time is taken to be dt.
struct SimConfig {
  double dt = 1.0;
  double eps = 0.15;
  double s_max = 2.0;
  int n_out = 21;  // output points on [0, s_max]
  std::size_t n_traj = 500;
  std::uint64_t seed = 1;
  NoiseModel noise = NoiseModel::ou(1.0, 20.0);
  ControlSchedule control = ControlSchedule::none(2);
  std::vector<HermitianOperator> ops;
  Matrix rho0;
  bool calibrate = true;
  int threads = 0;  // 0: FORGE_THREADS or 1

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  /// Noise actually sampled (after calibration).
  NoiseModel effective_noise() const;
  TimeScale time_scale() const;
  /// Step indices of the output grid.
  std::vector<std::size_t> output_steps() const;
  std::size_t total_steps() const;
};

nlohmann::json sim_config_to_json(const SimConfig& config);

/// |+> <+| on the top two levels of a d-level system.
Matrix plus_state(Index dim);

/// FORGE_THREADS if set to a positive integer, else 1; requested > 0 wins.
int resolve_threads(int requested);

/// splitmix64 of (master, index): independent per-trajectory seeds.
std::uint64_t trajectory_seed(std::uint64_t master, std::uint64_t index);

/// exp(-i h dt), closed form for 2x2.
Matrix step_propagator(const Matrix& h, double dt);

/// Nearest unitary (polar factor).
Matrix reunitarize(const Matrix& u);

struct TrajectoryPath {
  std::vector<std::size_t> steps;  // output step indices
  std::vector<Matrix> unitaries;   // U at each output step
  double unitarity_drift = 0.0;    // largest ||U^dag U - 1|| seen before re-unitarization
};

/// U_{k+1} = exp(-i H^I_xi(t_k + dt/2) dt) U_k with xi drawn from the
/// trajectory seed. Re-unitarized every 1000 steps.
TrajectoryPath run_trajectory(const SimConfig& config, std::uint64_t seed);

struct EnsembleResult {
  std::vector<double> s;
  std::vector<double> t;
  std::vector<DensityMatrix> mean_rho;
  std::vector<double> purity;          // tr(mean_rho^2)
  std::vector<double> purity_se;
  std::vector<double> purity_unbiased;  // jackknife bias-corrected
  std::vector<double> log_purity;
  std::vector<double> log_purity_se;
  std::vector<double> log_purity_unbiased;  // jackknife bias-corrected
  std::vector<double> bloch_lognorm;  // 2 log |r|, |r|^2 = (d P - 1) / (d - 1)
  std::vector<double> bloch_se;

  /// Jackknife groups: per-group sums of rho over contiguous trajectory blocks.
  std::vector<std::vector<Matrix>> block_sums;
  std::vector<std::size_t> block_sizes;
  std::size_t n_traj = 0;
};

/// Mean of U rho0 U^dag over n_traj trajectories with jackknife errors over
/// up to 100 contiguous trajectory blocks. Block sums are accumulated in
/// trajectory order and combined in block order, so results do not depend on
/// the thread count.
EnsembleResult run_ensemble(const SimConfig& config);

struct JackknifeEstimate {
  double value = 0.0;
  double se = 0.0;
  double bias_corrected = 0.0;
};

/// Block jackknife of a statistic of the mean state path.
JackknifeEstimate jackknife(const EnsembleResult& result,
                            const std::function<double(const std::vector<Matrix>& mean_path)>& statistic);

/// Least-squares decay rate k in log|r(s)| = -k s (through the origin), using
/// grid points where |r|^2 > min_signal in the full-sample mean.
JackknifeEstimate fit_decay_rate(const EnsembleResult& result, double min_signal = 0.05);

struct StatePath {
  std::vector<double> times;
  std::vector<Matrix> states;
  double halving_discrepancy = 0.0;
};

/// rho(t) = exp(L t) rho0 on the grid (any time unit the generator uses).
StatePath evolve_generator(const SuperOperator& generator, const Matrix& rho0, const std::vector<double>& grid);

/// Ordered product of midpoint exponentials with at most max_step per step;
/// repeated at half the step and the finer result returned. Throws
/// std::runtime_error if the two differ by more than tol.
StatePath evolve_generator(const std::function<SuperOperator(double)>& family, const Matrix& rho0,
                           const std::vector<double>& grid, double max_step, double tol = 1e-6);

struct CompareReport {
  std::vector<double> s;
  std::vector<double> purity_gap;      // mc - predicted
  std::vector<double> purity_z;        // gap / se (0 where se = 0 and gap = 0)
  std::vector<double> log_purity_gap;
  std::vector<double> log_purity_z;
  std::vector<double> bloch_gap;
  std::vector<double> trace_distance;
  double max_abs_purity_gap = 0.0;
  double max_abs_log_purity_gap = 0.0;
  double max_abs_log_purity_z = 0.0;
  double chi2_per_point = 0.0;  // mean of log_purity_z^2
};

/// Predicted path must be sampled at the ensemble's lab times. Log-purity gaps
/// use the bias-corrected ensemble values.
CompareReport compare(const EnsembleResult& ensemble, const StatePath& predicted);

/// CSV with columns s,t,purity,purity_se,bloch_lognorm,bloch_se.
void write_ensemble_csv(const EnsembleResult& result, const std::string& path);

}  // namespace forge
