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

#include "forge/noise.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <iostream>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <stdexcept>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <unsupported/Eigen/FFT>

namespace forge {

namespace {

using std::numbers::pi;

// Integrates f over [a, b] in panels no longer than panel, each by adaptive
// 31-point Gauss-Kronrod.
template <typename F>
double integrate_panels(F f, double a, double b, double panel, double rel_tol = 1e-10) {
  if (b <= a) return 0.0;
  const auto n = static_cast<long>(std::ceil((b - a) / panel));
  double sum = 0.0;
  for (long k = 0; k < n; ++k) {
    const double lo = a + (b - a) * static_cast<double>(k) / static_cast<double>(n);
    const double hi = a + (b - a) * static_cast<double>(k + 1) / static_cast<double>(n);
    sum += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 12, rel_tol);
  }
  return sum;
}

// Fixed Gauss-Legendre on every knot interval of the table. The spline is a
// cubic on each interval and omega stays below Nyquist, so 10 nodes suffice.
template <typename F>
double integrate_table(F f, const NoiseModel& m) {
  const double dt = m.table_dt();
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < m.table().size(); ++k) {
    const double lo = dt * static_cast<double>(k);
    sum += boost::math::quadrature::gauss<double, 10>::integrate(f, lo, lo + dt);
  }
  return sum;
}

// Extent beyond which the analytic correlation functions are negligible.
double correlation_cutoff(const NoiseModel& m) {
  if (m.kind() == NoiseKind::tabulated) {
    return m.table_dt() * static_cast<double>(m.table().size() - 1);
  }
  return 45.0 * m.tau();
}

double quadrature_panel(const NoiseModel& m, double omega) {
  double panel = m.tau() / 2.0;
  const double fastest = std::abs(omega) + m.omega0();
  if (fastest > 0.0) panel = std::min(panel, pi / (2.0 * fastest));
  if (m.kind() == NoiseKind::tabulated) panel = std::min(panel, 8.0 * m.table_dt());
  return panel;
}

void require_channels(int channels) {
  if (channels < 1) throw std::invalid_argument("NoiseModel: channels must be >= 1");
}

}  // namespace

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::ou: return "ou";
    case NoiseKind::damped_cosine: return "damped-cosine";
    case NoiseKind::white: return "white";
    case NoiseKind::tabulated: return "tabulated";
  }
  return "unknown";
}

NoiseKind noise_kind_from_string(const std::string& s) {
  if (s == "ou") return NoiseKind::ou;
  if (s == "damped-cosine") return NoiseKind::damped_cosine;
  if (s == "white") return NoiseKind::white;
  if (s == "tabulated") return NoiseKind::tabulated;
  throw std::invalid_argument("unknown noise kind '" + s + "'");
}

NoiseModel NoiseModel::ou(double sigma, double tau, int channels) {
  if (!(sigma > 0.0) || !(tau > 0.0)) throw std::invalid_argument("ou noise: sigma and tau must be positive");
  require_channels(channels);
  NoiseModel m;
  m.kind_ = NoiseKind::ou;
  m.sigma_ = sigma;
  m.tau_ = tau;
  m.weights_.assign(static_cast<std::size_t>(channels), 1.0);
  return m;
}

NoiseModel NoiseModel::damped_cosine(double sigma, double tau, double omega0, int channels) {
  if (!(sigma > 0.0) || !(tau > 0.0)) {
    throw std::invalid_argument("damped-cosine noise: sigma and tau must be positive");
  }
  if (!(omega0 >= 0.0)) throw std::invalid_argument("damped-cosine noise: omega0 must be >= 0");
  require_channels(channels);
  NoiseModel m;
  m.kind_ = NoiseKind::damped_cosine;
  m.sigma_ = sigma;
  m.tau_ = tau;
  m.omega0_ = omega0;
  m.weights_.assign(static_cast<std::size_t>(channels), 1.0);
  if (auto bad = find_negative_spectrum(m)) {
    throw std::invalid_argument("damped-cosine noise: spectral density negative at omega = " +
                                std::to_string(*bad));
  }
  return m;
}

NoiseModel NoiseModel::white(double sigma, int channels) {
  if (!(sigma > 0.0)) throw std::invalid_argument("white noise: sigma must be positive");
  require_channels(channels);
  NoiseModel m;
  m.kind_ = NoiseKind::white;
  m.sigma_ = sigma;
  m.tau_ = 0.0;
  m.weights_.assign(static_cast<std::size_t>(channels), 1.0);
  return m;
}

NoiseModel NoiseModel::tabulated(std::vector<double> values, double dt, int channels,
                                 std::optional<double> tau) {
  if (values.size() < 4) throw std::invalid_argument("tabulated noise: need at least 4 samples");
  if (!(dt > 0.0)) throw std::invalid_argument("tabulated noise: dt must be positive");
  if (!(values.front() > 0.0)) throw std::invalid_argument("tabulated noise: J(0) must be positive");
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("tabulated noise: non-finite sample");
  }
  require_channels(channels);
  NoiseModel m;
  m.kind_ = NoiseKind::tabulated;
  m.sigma_ = std::sqrt(values.front());
  m.table_dt_ = dt;
  m.weights_.assign(static_cast<std::size_t>(channels), 1.0);
  m.table_ = std::move(values);
  // Even extension: J'(0) = 0 at the left end; the right end is free.
  auto spline = std::make_shared<boost::math::interpolators::cardinal_cubic_b_spline<double>>(
      m.table_.begin(), m.table_.end(), 0.0, dt, 0.0);
  m.interpolant_ = [spline](double t) { return (*spline)(t); };
  if (tau) {
    if (!(*tau > 0.0)) throw std::invalid_argument("tabulated noise: tau must be positive");
    m.tau_ = *tau;
  } else {
    double area = 0.0;
    for (std::size_t k = 0; k < m.table_.size(); ++k) {
      const double w = (k == 0 || k + 1 == m.table_.size()) ? 0.5 : 1.0;
      area += w * std::abs(m.table_[k]) * dt;
    }
    m.tau_ = area / m.table_.front();
  }
  if (auto bad = find_negative_spectrum(m)) {
    throw std::invalid_argument("tabulated noise: spectral density negative at omega = " +
                                std::to_string(*bad));
  }
  return m;
}

NoiseModel NoiseModel::scaled(double factor) const {
  if (!(factor > 0.0)) throw std::invalid_argument("NoiseModel::scaled: factor must be positive");
  NoiseModel m = *this;
  m.sigma_ *= std::sqrt(factor);
  if (m.kind_ == NoiseKind::tabulated) {
    for (double& v : m.table_) v *= factor;
    auto spline = std::make_shared<boost::math::interpolators::cardinal_cubic_b_spline<double>>(
        m.table_.begin(), m.table_.end(), 0.0, m.table_dt_, 0.0);
    m.interpolant_ = [spline](double t) { return (*spline)(t); };
  }
  return m;
}

NoiseModel NoiseModel::with_weights(std::vector<double> weights) const {
  if (weights.empty()) throw std::invalid_argument("NoiseModel::with_weights: empty");
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("NoiseModel::with_weights: weights must be >= 0");
  }
  NoiseModel m = *this;
  m.weights_ = std::move(weights);
  return m;
}

double NoiseModel::shape_correlation(double t) const {
  const double a = std::abs(t);
  switch (kind_) {
    case NoiseKind::ou: return sigma_ * sigma_ * std::exp(-a / tau_);
    case NoiseKind::damped_cosine: return sigma_ * sigma_ * std::exp(-a / tau_) * std::cos(omega0_ * a);
    case NoiseKind::white: throw std::logic_error("white noise has no pointwise correlation");
    case NoiseKind::tabulated: {
      const double end = table_dt_ * static_cast<double>(table_.size() - 1);
      return a > end ? 0.0 : interpolant_(a);
    }
  }
  return 0.0;
}

double NoiseModel::correlation(double t, int channel) const { return weight(channel) * shape_correlation(t); }

double NoiseModel::max_omega() const {
  if (kind_ == NoiseKind::tabulated) return pi / table_dt_;
  return std::numeric_limits<double>::infinity();
}

double NoiseModel::shape_spectral_density(double omega) const {
  const double s2 = sigma_ * sigma_;
  auto lorentz = [this](double w) { return 2.0 * tau_ / (1.0 + w * w * tau_ * tau_); };
  switch (kind_) {
    case NoiseKind::ou: return s2 * lorentz(omega);
    case NoiseKind::damped_cosine: return 0.5 * s2 * (lorentz(omega - omega0_) + lorentz(omega + omega0_));
    case NoiseKind::white: return s2;
    case NoiseKind::tabulated: {
      if (std::abs(omega) >= max_omega()) {
        throw std::domain_error("tabulated noise: omega beyond the table's Nyquist frequency");
      }
      return integrate_table([&](double t) { return 2.0 * shape_correlation(t) * std::cos(omega * t); }, *this);
    }
  }
  return 0.0;
}

double NoiseModel::spectral_density(double omega, int channel) const {
  return weight(channel) * shape_spectral_density(omega);
}

double NoiseModel::shape_k_tilde(double omega) const {
  const double s2 = sigma_ * sigma_;
  // int_0^inf e^{-u/tau} sin(a u) du = a tau^2 / (1 + a^2 tau^2)
  auto sine_transform = [this](double a) { return a * tau_ * tau_ / (1.0 + a * a * tau_ * tau_); };
  switch (kind_) {
    case NoiseKind::ou: return -2.0 * s2 * sine_transform(omega);
    case NoiseKind::damped_cosine:
      return -s2 * (sine_transform(omega + omega0_) + sine_transform(omega - omega0_));
    case NoiseKind::white: return 0.0;
    case NoiseKind::tabulated: {
      if (std::abs(omega) >= max_omega()) {
        throw std::domain_error("tabulated noise: omega beyond the table's Nyquist frequency");
      }
      return integrate_table([&](double t) { return -2.0 * shape_correlation(t) * std::sin(omega * t); }, *this);
    }
  }
  return 0.0;
}

double NoiseModel::k_tilde(double omega, int channel) const { return weight(channel) * shape_k_tilde(omega); }

double NoiseModel::spectral_sup() const {
  if (spectrum_monotone()) return shape_spectral_density(0.0);
  // Coarse scan, then golden-section refinement around the best sample.
  const double top = std::min(max_omega() * 0.999, omega0_ + 20.0 / tau_);
  const int n = 400;
  double best_w = 0.0;
  double best = shape_spectral_density(0.0);
  for (int k = 1; k <= n; ++k) {
    const double w = top * k / n;
    const double v = shape_spectral_density(w);
    if (v > best) {
      best = v;
      best_w = w;
    }
  }
  double lo = std::max(0.0, best_w - top / n);
  double hi = std::min(top, best_w + top / n);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 60; ++it) {
    const double a = hi - g * (hi - lo);
    const double b = lo + g * (hi - lo);
    if (shape_spectral_density(a) > shape_spectral_density(b)) hi = b; else lo = a;
  }
  return std::max(best, shape_spectral_density(0.5 * (lo + hi)));
}

std::optional<double> find_negative_spectrum(const NoiseModel& model, double tol) {
  if (model.kind() == NoiseKind::white || model.kind() == NoiseKind::ou) return std::nullopt;
  const double top = std::isfinite(model.max_omega()) ? 0.999 * model.max_omega()
                                                       : model.omega0() + 40.0 / model.tau();
  const int n = model.kind() == NoiseKind::tabulated ? 256 : 2000;
  std::vector<double> vals(static_cast<std::size_t>(n + 1));
  double peak = 0.0;
  for (int k = 0; k <= n; ++k) {
    vals[static_cast<std::size_t>(k)] = model.spectral_density(top * k / n);
    peak = std::max(peak, vals[static_cast<std::size_t>(k)]);
  }
  for (int k = 0; k <= n; ++k) {
    if (vals[static_cast<std::size_t>(k)] < -tol * peak) return top * k / n;
  }
  return std::nullopt;
}

double spectral_density_quadrature(const NoiseModel& model, double omega) {
  if (model.kind() == NoiseKind::white) throw std::logic_error("spectral_density_quadrature: white noise");
  auto f = [&](double t) { return 2.0 * model.correlation(t) * std::cos(omega * t); };
  if (model.kind() == NoiseKind::tabulated) return integrate_table(f, model);
  return integrate_panels(f, 0.0, correlation_cutoff(model), quadrature_panel(model, omega));
}

double k_tilde_quadrature(const NoiseModel& model, double omega) {
  if (model.kind() == NoiseKind::white) throw std::logic_error("k_tilde_quadrature: white noise");
  auto f = [&](double t) { return -2.0 * model.correlation(t) * std::sin(omega * t); };
  if (model.kind() == NoiseKind::tabulated) return integrate_table(f, model);
  return integrate_panels(f, 0.0, correlation_cutoff(model), quadrature_panel(model, omega));
}

double gamma_of_t(const NoiseModel& model, double t) {
  if (t < 0.0) throw std::invalid_argument("gamma_of_t: t must be >= 0");
  if (t == 0.0) return 0.0;
  if (model.kind() == NoiseKind::white) return model.spectral_density(0.0);
  const double end = std::min(t, correlation_cutoff(model));
  auto f = [&](double u) { return model.correlation(u); };
  return 2.0 * integrate_panels(f, 0.0, end, quadrature_panel(model, 0.0), 1e-12);
}

double FactorKernel::integral() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * step;
}

FactorKernel factor_kernel(const NoiseModel& model, std::size_t min_points, double extent_tau) {
  if (min_points < 3) throw std::invalid_argument("factor_kernel: need at least 3 points");
  FactorKernel k;
  if (model.kind() == NoiseKind::white) {
    // j = sigma delta, realised as one grid cell; the step is arbitrary.
    k.step = 1.0;
    k.values = {0.0, model.sigma() / k.step, 0.0};
    return k;
  }
  const double extent = extent_tau * model.tau();
  const std::size_t half = std::max<std::size_t>((min_points + 1) / 2, 512);
  k.step = extent / static_cast<double>(half);
  if (model.kind() == NoiseKind::tabulated) k.step = std::min(k.step, model.table_dt());
  const std::size_t half_pts = static_cast<std::size_t>(std::ceil(extent / k.step));

  // Periodic window large enough that J has decayed well before wrap-around.
  std::size_t m = 1;
  const double window = std::max(8.0 * extent, 2.0 * correlation_cutoff(model));
  while (static_cast<double>(m) * k.step < window) m <<= 1;

  std::vector<double> samples(m);
  for (std::size_t i = 0; i < m; ++i) {
    const long idx = i < m / 2 ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(m);
    samples[i] = model.correlation(static_cast<double>(idx) * k.step);
  }
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, samples);
  double peak = 0.0;
  for (const auto& c : spectrum) peak = std::max(peak, c.real());
  for (auto& c : spectrum) {
    double v = c.real();
    if (v < -1e-9 * peak) {
      throw std::domain_error("factor_kernel: correlation function is not positive definite");
    }
    // j~ = +sqrt(J~); the discrete transform already carries the factor 1/step.
    c = std::sqrt(std::max(v, 0.0) / k.step);
  }
  std::vector<double> j;
  fft.inv(j, spectrum);

  k.values.resize(2 * half_pts + 1);
  for (std::size_t i = 0; i < k.values.size(); ++i) {
    const long idx = static_cast<long>(i) - static_cast<long>(half_pts);
    const std::size_t wrapped = idx >= 0 ? static_cast<std::size_t>(idx)
                                         : static_cast<std::size_t>(static_cast<long>(m) + idx);
    k.values[i] = j[wrapped];
  }
  // Enforce exact evenness (the FFT leaves round-off asymmetry).
  for (std::size_t i = 0; i < half_pts; ++i) {
    const double avg = 0.5 * (k.values[i] + k.values[k.values.size() - 1 - i]);
    k.values[i] = k.values[k.values.size() - 1 - i] = avg;
  }
  return k;
}

std::vector<double> self_convolution(const FactorKernel& kernel) {
  const auto n = static_cast<long>(kernel.values.size());
  const long c = static_cast<long>(kernel.center());
  std::vector<double> out(kernel.values.size(), 0.0);
  for (long i = 0; i < n; ++i) {
    const long shift = i - c;  // (j*j)(t) = sum_u j(u) j(t - u)
    double s = 0.0;
    for (long u = 0; u < n; ++u) {
      const long v = c + shift - (u - c);
      if (v >= 0 && v < n) s += kernel.values[static_cast<std::size_t>(u)] * kernel.values[static_cast<std::size_t>(v)];
    }
    out[static_cast<std::size_t>(i)] = s * kernel.step;
  }
  return out;
}

namespace {

std::size_t step_count(double dt, double horizon) {
  if (!(dt > 0.0) || !(horizon > 0.0)) {
    throw std::invalid_argument("noise sampling: dt and horizon must be positive");
  }
  return static_cast<std::size_t>(std::llround(std::ceil(horizon / dt - 1e-9)));
}

}  // namespace

NoiseSample sample_ou(const NoiseModel& model, double dt, double horizon, std::uint64_t seed) {
  if (model.kind() != NoiseKind::ou) throw std::invalid_argument("sample_ou: model is not ou");
  const std::size_t n = step_count(dt, horizon);
  if (dt > model.tau() / 10.0) {
    std::clog << "warning: sample_ou with dt > tau/10 (dt=" << dt << ", tau=" << model.tau() << ")\n";
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double a = std::exp(-dt / model.tau());
  const double kick = std::sqrt(1.0 - a * a);
  NoiseSample out;
  out.dt = dt;
  out.values.assign(static_cast<std::size_t>(model.channels()), std::vector<double>(n));
  for (int c = 0; c < model.channels(); ++c) {
    auto& xs = out.values[static_cast<std::size_t>(c)];
    const double sigma = model.sigma() * std::sqrt(model.weight(c));
    double x = sigma * normal(rng);
    for (std::size_t k = 0; k < n; ++k) {
      xs[k] = x;
      x = a * x + sigma * kick * normal(rng);
    }
  }
  return out;
}

NoiseSample sample_white(const NoiseModel& model, double dt, double horizon, std::uint64_t seed) {
  if (model.kind() != NoiseKind::white) throw std::invalid_argument("sample_white: model is not white");
  const std::size_t n = step_count(dt, horizon);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  NoiseSample out;
  out.dt = dt;
  out.values.assign(static_cast<std::size_t>(model.channels()), std::vector<double>(n));
  for (int c = 0; c < model.channels(); ++c) {
    const double sd = model.sigma() * std::sqrt(model.weight(c) / dt);
    for (double& x : out.values[static_cast<std::size_t>(c)]) x = sd * normal(rng);
  }
  return out;
}

NoiseSample sample_noise(const NoiseModel& model, double dt, double horizon, std::uint64_t seed) {
  switch (model.kind()) {
    case NoiseKind::ou: return sample_ou(model, dt, horizon, seed);
    case NoiseKind::white: return sample_white(model, dt, horizon, seed);
    default: throw std::invalid_argument("sample_noise: only ou and white noise can be sampled");
  }
}

}  // namespace forge
