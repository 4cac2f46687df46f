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

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "forge/control.hpp"
#include "forge/linalg.hpp"
#include "forge/noise.hpp"

namespace forge {

/// L = hamiltonian + dissipative, where hamiltonian = i ad(H_eff) and
/// dissipative is a negative semidefinite double-commutator form.
struct LindbladParts {
  SuperOperator hamiltonian;
  SuperOperator dissipative;
  SuperOperator total;

  static LindbladParts from(SuperOperator hamiltonian, SuperOperator dissipative);
  static LindbladParts zero(Index dim);
  LindbladParts scaled(double factor) const;
  LindbladParts operator+(const LindbladParts& o) const;
};

/// Lab time t versus coarse time s = eps^2 t / tau. A generator G acting in
/// lab time becomes L = (tau / eps^2) G in coarse time.
struct TimeScale {
  double tau = 1.0;
  double eps = 1.0;

  double s_of_t(double t) const { return eps * eps * t / tau; }
  double t_of_s(double s) const { return s * tau / (eps * eps); }
  double coarse_factor() const { return tau / (eps * eps); }
  LindbladParts to_coarse(const LindbladParts& lab) const { return lab.scaled(coarse_factor()); }
};

double operator_norm(const HermitianOperator& h);

/// eps = sqrt(tau * sup J~ * max_alpha ||H_alpha||^2).
double weak_coupling_eps(const NoiseModel& model, const std::vector<HermitianOperator>& ops);

/// Copy of model with sigma chosen so that weak_coupling_eps equals eps.
NoiseModel calibrate_noise(const NoiseModel& model, const std::vector<HermitianOperator>& ops, double eps);

/// Exact generator for white noise with strengths J_{ab}:
/// L_t rho = -1/2 sum_ab J_ab [H^I_a(t), [H^I_b(t), rho]].
LindbladParts white_noise_generator(const Eigen::MatrixXd& strengths, const ControlSchedule& schedule,
                                    const std::vector<HermitianOperator>& ops, double t);
/// Diagonal strengths sigma^2 * weight_a from a white NoiseModel.
LindbladParts white_noise_generator(const NoiseModel& model, const ControlSchedule& schedule,
                                    const std::vector<HermitianOperator>& ops, double t);

/// -(gamma(t) / 2) ad(H0)^2 for a single fixed noise direction.
SuperOperator commutative_generator(const NoiseModel& model, const HermitianOperator& h0, double t);

/// True if [H^I(t), H^I(t')] vanishes on a sample of times over two periods
/// (or trivially for no control).
bool commutes_at_all_times(const ControlSchedule& schedule, const HermitianOperator& h, double tol = 1e-10);

enum class Regime { white, commutative, finite_eps, coarse_grained };

std::string to_string(Regime r);
Regime regime_from_string(const std::string& s);

struct GeneratorSpec {
  Regime regime = Regime::coarse_grained;
  double eps = 0.1;
  NoiseModel noise = NoiseModel::ou(1.0, 1.0);
  ControlSchedule control = ControlSchedule::none(2);
  std::vector<HermitianOperator> ops;
  int n_harmonics = 41;

  /// Throws std::invalid_argument describing the first violated requirement.
  void validate() const;
};

/// Time-dependent generator at small but finite eps (lab time):
///   G(t) rho = i [H_ren(t), rho] - 1/2 sum_a [D_a(t), [D_a(t), rho]]
///   D_a(t)   = int j_a(t - u) H^I_a(u) du
///   H_ren(t) = (i/4) sum_a int int j_a(u) j_a(v) sgn(u - v) [H^I_a(t+u), H^I_a(t+v)] du dv
/// with j the even square root of J on a uniform grid. The double integral is
/// split at u = v and evaluated with running sums.
class FiniteEpsGenerator {
 public:
  FiniteEpsGenerator(const NoiseModel& model, ControlSchedule schedule, std::vector<HermitianOperator> ops,
                     std::size_t min_points = 1025);

  HermitianOperator dissipator_operator(std::size_t channel, double t) const;
  HermitianOperator renormalized_hamiltonian(double t) const;
  LindbladParts parts(double t) const;
  SuperOperator operator()(double t) const { return parts(t).total; }

  const FactorKernel& kernel() const { return kernel_; }
  std::size_t channel_count() const { return ops_.size(); }
  Index dim() const { return ops_.front().dim(); }

 private:
  std::vector<Matrix> samples(std::size_t channel, double t) const;
  Matrix dissipator_from(std::size_t channel, const std::vector<Matrix>& hs) const;
  Matrix renormalized_from(std::size_t channel, const std::vector<Matrix>& hs) const;

  FactorKernel kernel_;
  ControlSchedule schedule_;
  std::vector<HermitianOperator> ops_;
  std::vector<double> weights_;
};

FiniteEpsGenerator finite_eps_generator(const GeneratorSpec& spec);

/// Long-time limit for stationary control, in lab time (unfactored Fourier
/// coefficients, weights taken from the model):
///   G = sum_a -1/2 sum_w J~_a(w) ad(H_a(w)) ad(H_a(w)^dag)
///            + (i/4) sum_w K~_a(w) ad([H_a(w), H_a(w)^dag])
/// The sums run over every w in F, positive and negative.
/// Throws std::domain_error if J~ < 0 at some frequency in F.
LindbladParts coarse_grained_lindbladian(const StationaryFourierData& fourier, const NoiseModel& model);

/// Contribution of a single channel.
LindbladParts coarse_grained_channel(const StationaryFourierData& fourier, const NoiseModel& model,
                                     std::size_t channel);

/// Cross-correlated channels J_ab(t) = C_ab J(t) with C real symmetric PSD;
/// the model's per-channel weights are ignored.
LindbladParts coarse_grained_correlated(const StationaryFourierData& fourier, const NoiseModel& model,
                                        const Eigen::MatrixXd& correlation);

/// Coarse-time Lindbladian (tau / eps^2) G with eps from the model and ops.
LindbladParts coarse_grained_lindbladian(const GeneratorSpec& spec);

struct RateSum {
  double partial = 0.0;        // terms up to n_max
  double tail_estimate = 0.0;  // Euler-Maclaurin estimate of the rest
  double tail_bound = 0.0;     // |remainder| <= tail_bound
  int n_max = 0;

  double value() const { return partial + tail_estimate; }
};

/// gamma_b(w) = (8 / pi^2) sum_{n >= 0} J~((2n+1) w) / (2n+1)^2.
RateSum bb_dephasing_rate(const NoiseModel& model, double omega, int n_max = 200);

/// Per-axis rate under the 12-segment isotropic sequence,
/// (8 / pi^2) sum_{n != 0} J~(n w) sin^4(n pi / 12) p(n) / n^2 with
/// p(n) = 5 + 4 cos(n pi/6) + 2 cos(4 n pi/3) + (-1)^n (1 + 4 cos(n pi/2) + 2 cos(2 n pi/3)).
/// n_max bounds |n|.
RateSum iso_dephasing_rate(const NoiseModel& model, double omega, int n_max = 200);

/// Rate gamma with G_a = -(gamma / 2) ad(S_a)^2, read off a single-channel
/// generator by projection onto ad(S_a)^2.
double dephasing_rate_of(const SuperOperator& channel_generator, const HermitianOperator& axis);

enum class OscillatorNoise { linear, frequency };

OscillatorNoise oscillator_noise_from_string(const std::string& s);

struct OscillatorOperators {
  Matrix a;
  HermitianOperator x;
  HermitianOperator p;
  HermitianOperator number;
};

OscillatorOperators oscillator_operators(Index n_fock);

struct OscillatorGenerator {
  OscillatorNoise kind = OscillatorNoise::linear;
  Index n_fock = 0;
  LindbladParts parts;
  /// Linear noise: -2 L = Gx ad(x)^2 + Gp ad(p)^2 + 2 Gxp {ad(x), ad(p)}, fitted
  /// on the lower Fock block.
  Eigen::Matrix2d gamma = Eigen::Matrix2d::Zero();
  /// Frequency noise: labeled pieces with unitary + dephasing + parametric = total.
  SuperOperator unitary;
  SuperOperator dephasing;
  SuperOperator parametric;
};

/// Oscillator H0 = w_c (a^dag a + 1/2) with noise on (x, p) (linear) or
/// (x^2, p^2) (frequency); built through fourier_data + coarse_grained_*.
/// Lab-time normalization. Throws if n_fock < 8.
OscillatorGenerator oscillator_generators(OscillatorNoise kind, Index n_fock, const NoiseModel& model,
                                          double omega_c,
                                          const std::optional<Eigen::Matrix2d>& correlation = std::nullopt);

/// Super-operator matrix elements restricted to |n><m| with n, m < block.
Matrix restrict_to_block(const SuperOperator& s, Index block);

struct MeasurementTime {
  double t_star = 0.0;
  double s_star = 0.0;
  std::vector<double> grid_t;
  std::vector<double> grid_s;
};

/// Sensitivity S(t) = sqrt(t p (1 - p)) / |dp/dgamma| with p = (1 - e^{-gamma t}) / 2.
double measurement_sensitivity(double gamma, double t);

/// Minimizer of S on [t_min, t_max]: grid scan, Brent refinement in the best
/// bracket (tolerance 1e-8), and both endpoints as candidates.
MeasurementTime optimal_measurement_time(double gamma, double t_min, double t_max, int grid_points = 2001);

/// JSON export: matrices of all parts plus metadata.
nlohmann::json parts_to_json(const LindbladParts& parts, const nlohmann::json& metadata);

}  // namespace forge
