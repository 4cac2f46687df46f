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
#include <optional>
#include <string>
#include <vector>

namespace forge {

enum class NoiseKind { ou, damped_cosine, white, tabulated };

std::string to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& s);

/// Stationary Gaussian noise with diagonal correlations. Every channel shares
/// the same shape; channel alpha has J_alpha(t) = weight_alpha * J(t).
///
///   ou             J(t) = sigma^2 exp(-|t|/tau)
///   damped_cosine  J(t) = sigma^2 exp(-|t|/tau) cos(omega0 t)
///   white          J(t) = sigma^2 delta(t)
///   tabulated      J(k dt) given for k = 0..n-1, cubic spline in between,
///                  zero beyond the table
///
/// Fourier convention: J~(w) = int e^{iwt} J(t) dt and
/// K~(w) = int e^{iwt} i sgn(t) J(t) dt = -2 int_0^inf J(t) sin(wt) dt.
class NoiseModel {
 public:
  static NoiseModel ou(double sigma, double tau, int channels = 1);
  static NoiseModel damped_cosine(double sigma, double tau, double omega0, int channels = 1);
  static NoiseModel white(double sigma, int channels = 1);
  /// tau defaults to int_0^T |J| / |J(0)|.
  static NoiseModel tabulated(std::vector<double> values, double dt, int channels = 1,
                              std::optional<double> tau = std::nullopt);

  NoiseKind kind() const { return kind_; }
  double sigma() const { return sigma_; }
  double tau() const { return tau_; }
  double omega0() const { return omega0_; }
  int channels() const { return static_cast<int>(weights_.size()); }
  double weight(int channel) const { return weights_.at(static_cast<std::size_t>(channel)); }
  const std::vector<double>& table() const { return table_; }
  double table_dt() const { return table_dt_; }

  /// Copy with J multiplied by factor (sigma scaled by sqrt(factor)).
  NoiseModel scaled(double factor) const;
  /// Copy with per-channel weights (all >= 0); the channel count becomes
  /// weights.size().
  NoiseModel with_weights(std::vector<double> weights) const;

  /// J(t) for channel 0 (weight applied). White noise has no pointwise value
  /// and throws.
  double correlation(double t, int channel = 0) const;
  double spectral_density(double omega, int channel = 0) const;
  double k_tilde(double omega, int channel = 0) const;
  /// sup over omega of J~(omega) for channel 0 (before weights).
  double spectral_sup() const;
  /// J~ is monotone non-increasing in |omega|.
  bool spectrum_monotone() const { return kind_ == NoiseKind::ou || kind_ == NoiseKind::white; }
  /// Largest |omega| at which the spectrum may be evaluated (Nyquist for
  /// tabulated models, infinity otherwise).
  double max_omega() const;

 private:
  NoiseModel() = default;
  double shape_spectral_density(double omega) const;
  double shape_k_tilde(double omega) const;
  double shape_correlation(double t) const;

  NoiseKind kind_ = NoiseKind::ou;
  double sigma_ = 1.0;
  double tau_ = 1.0;
  double omega0_ = 0.0;
  std::vector<double> weights_{1.0};
  std::vector<double> table_;
  double table_dt_ = 0.0;
  std::function<double(double)> interpolant_;  // cubic B-spline through the table
};

/// Scans J~ on a uniform grid up to max_omega (or 40/tau); returns the
/// first frequency where J~ < -tol * sup J~, if any.
std::optional<double> find_negative_spectrum(const NoiseModel& model, double tol = 1e-9);

/// J~(omega) by adaptive Gauss-Kronrod quadrature of the correlation
/// function (independent of the closed forms). Not defined for white noise.
double spectral_density_quadrature(const NoiseModel& model, double omega);
double k_tilde_quadrature(const NoiseModel& model, double omega);

/// gamma(t) = 2 int_0^t J(u) du, adaptive quadrature with rel. tol 1e-8.
double gamma_of_t(const NoiseModel& model, double t);

/// Real, even j on a uniform grid with j~ = +sqrt(J~), so that the discrete
/// self-convolution of j reproduces J.
struct FactorKernel {
  double step = 0.0;
  std::vector<double> values;  // values[center + k] = j(k * step)

  std::size_t center() const { return values.size() / 2; }
  double time(std::size_t i) const {
    return (static_cast<double>(i) - static_cast<double>(center())) * step;
  }
  /// int j(t) dt = j~(0).
  double integral() const;
};

/// Kernel on [-extent_tau * tau, extent_tau * tau] with at least min_points
/// samples. For white noise the kernel is a single cell sigma / step.
FactorKernel factor_kernel(const NoiseModel& model, std::size_t min_points = 1025,
                           double extent_tau = 8.0);

/// Discrete linear self-convolution (j * j)(t_k) * step on the kernel grid.
std::vector<double> self_convolution(const FactorKernel& kernel);

struct NoiseSample {
  double dt = 0.0;
  std::vector<std::vector<double>> values;  // values[channel][k] = xi(k * dt)

  std::size_t steps() const { return values.empty() ? 0 : values.front().size(); }
};

/// Exact OU recursion xi_{k+1} = a xi_k + sigma sqrt(1 - a^2) N(0,1),
/// a = exp(-dt/tau), with xi_0 ~ N(0, sigma^2). Deterministic per seed.
NoiseSample sample_ou(const NoiseModel& model, double dt, double horizon, std::uint64_t seed);

/// Decorrelated steps with variance sigma^2 / dt, i.e. the piecewise-constant
/// discretization of white noise with strength sigma^2.
NoiseSample sample_white(const NoiseModel& model, double dt, double horizon, std::uint64_t seed);

/// Dispatches on the model kind (ou or white).
NoiseSample sample_noise(const NoiseModel& model, double dt, double horizon, std::uint64_t seed);

}  // namespace forge
