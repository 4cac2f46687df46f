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
#include <string>
#include <vector>

#include "forge/linalg.hpp"

namespace forge {

enum class ControlKind { none, constant, bangbang_pi, bangbang_iso12, custom_piecewise };

std::string to_string(ControlKind kind);
ControlKind control_kind_from_string(const std::string& s);

struct Segment {
  double fraction = 0.0;  // share of one period
  Matrix unitary;
};

/// Control unitary V(t) with H_c = i dV/dt V^dag.
///
/// A constant control H_c gives V(t) = exp(-i H_c t), so the noise operators
/// rotate as H^I(t) = V^dag H V = exp(i H_c t) H exp(-i H_c t). For H_c = w S_z
/// and H = S_x this is S_x cos(wt) - S_y sin(wt).
///
/// Piecewise kinds hold V constant on each segment of the period 2 pi / omega_c
/// and jump instantaneously between segments (ideal pulses).
class ControlSchedule {
 public:
  static ControlSchedule none(Index dim);
  /// hc includes its overall scale; omega_c is reported as the control rate.
  static ControlSchedule constant(const HermitianOperator& hc, double omega_c);
  /// V = 1 on the first half period and exp(i pi S_x) on the second.
  static ControlSchedule bangbang_pi(Index dim, double omega_c);
  /// Twelve equal segments cycling through exp(i pi S_k) rotations so that
  /// every S_alpha averages to zero.
  static ControlSchedule bangbang_iso12(Index dim, double omega_c);
  static ControlSchedule custom_piecewise(std::vector<Segment> segments, double omega_c);

  ControlKind kind() const { return kind_; }
  Index dim() const { return dim_; }
  double omega_c() const { return omega_c_; }
  bool periodic() const { return kind_ != ControlKind::none; }
  double period() const;
  const std::vector<Segment>& segments() const { return segments_; }
  const HermitianOperator& hc() const { return hc_; }

  Matrix unitary(double t) const;
  /// Segment index active at time t (piecewise kinds only).
  std::size_t segment_at(double t) const;
  /// Segment boundaries as fractions of the period, size segments()+1.
  std::vector<double> boundaries() const;

  HermitianOperator interaction_hamiltonian(const HermitianOperator& h, double t) const;

  /// Spectral decomposition of H_c (constant kind): distinct eigenvalues and
  /// the projections onto their eigenspaces.
  const std::vector<double>& control_levels() const { return levels_; }
  const std::vector<Matrix>& control_projections() const { return projections_; }

 private:
  ControlSchedule() = default;

  ControlKind kind_ = ControlKind::none;
  Index dim_ = 0;
  double omega_c_ = 0.0;
  HermitianOperator hc_;
  std::vector<Segment> segments_;
  std::vector<double> levels_;
  std::vector<Matrix> projections_;
};

HermitianOperator interaction_hamiltonian(const ControlSchedule& schedule, const HermitianOperator& h,
                                          double t);

struct FourierTerm {
  double omega = 0.0;
  Matrix coeff;
};

/// H^I_alpha(t) = sum_{w in F} coeff_alpha(w) e^{i w t}, unfactored (any weak
/// coupling scale stays inside the coefficients).
struct StationaryFourierData {
  double base_omega = 0.0;
  std::vector<std::vector<FourierTerm>> channels;

  std::size_t channel_count() const { return channels.size(); }
  /// Union of the frequencies of all channels, sorted.
  std::vector<double> frequencies() const;
  /// Coefficient at omega, or zero if omega is not in the channel's set.
  Matrix coefficient(std::size_t channel, double omega) const;
  /// Largest ||H(w) - H(-w)^dag|| over the data.
  double pairing_defect() const;
};

/// Fourier data of the interaction-picture noise operators.
///  - none: F = {0}, coefficient H_alpha.
///  - constant: exact, from the spectral projections of H_c.
///  - piecewise: closed-form segment integrals at w = k omega_c, |k| <= n_harmonics.
/// Coefficients with Frobenius norm below 1e-12 are dropped.
StationaryFourierData fourier_data(const ControlSchedule& schedule, const std::vector<HermitianOperator>& ops,
                                   int n_harmonics = 41);

/// Same harmonics by trapezoid quadrature over one period (cross-check).
StationaryFourierData fourier_data_quadrature(const ControlSchedule& schedule,
                                              const std::vector<HermitianOperator>& ops, int n_harmonics,
                                              int points_per_period = 4096);

struct EffectivenessReport {
  bool effective = false;
  std::vector<double> zero_frequency_norms;  // ||H~_alpha(0)||_F
  /// Constant control: sum_j P_j H P_j. Piecewise: period-weighted average of
  /// V_j^dag H V_j. None: H itself.
  std::vector<Matrix> residuals;
};

EffectivenessReport is_effective(const ControlSchedule& schedule, const std::vector<HermitianOperator>& ops,
                                 double tol = 1e-10);

/// The 12-segment rotation sequence {s1, s2, s3, 1, s2, s3, s1, 1, s3, s1, s2, 1}
/// with s_k -> exp(i pi S_k) for general spin.
std::array<Matrix, 12> iso12_sequence(Index dim);

/// Sign pattern of V_j^dag S_alpha V_j = w_alpha[j] S_alpha for S = 1/2.
using Iso12Waveforms = std::array<std::array<int, 12>, 3>;
Iso12Waveforms iso12_waveforms();

}  // namespace forge
