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

#include "forge/generators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

namespace forge {

namespace {

using std::numbers::pi;

NoiseModel unit_weights(const NoiseModel& model) {
  return model.with_weights(std::vector<double>(static_cast<std::size_t>(model.channels()), 1.0));
}

SuperOperator ad_squared(const HermitianOperator& h) {
  const SuperOperator a = ad(h);
  return a * a;
}

double frobenius_dot(const Matrix& a, const Matrix& b) { return (a.adjoint() * b).trace().real(); }

// Tail of sum_{n > n_max} f(n) by Euler-Maclaurin: integral + f/2 - f'/12.
double euler_maclaurin_tail(const std::function<double(double)>& f, double start) {
  using boost::math::quadrature::gauss_kronrod;
  const double integral = gauss_kronrod<double, 31>::integrate(
      f, start, std::numeric_limits<double>::infinity(), 15, 1e-12);
  const double h = 0.25;
  const double derivative = (f(start + h) - f(start - h)) / (2.0 * h);
  return integral + 0.5 * f(start) - derivative / 12.0;
}

double iso_weight(int n) {
  const double s = std::sin(n * pi / 12.0);
  const double sign = (n % 2 == 0) ? 1.0 : -1.0;
  const double p = 5.0 + 4.0 * std::cos(n * pi / 6.0) + 2.0 * std::cos(4.0 * n * pi / 3.0) +
                   sign * (1.0 + 4.0 * std::cos(n * pi / 2.0) + 2.0 * std::cos(2.0 * n * pi / 3.0));
  return s * s * s * s * p;
}

StationaryFourierData filter_frequencies(const StationaryFourierData& in, bool keep_zero) {
  StationaryFourierData out;
  out.base_omega = in.base_omega;
  for (const auto& ch : in.channels) {
    std::vector<FourierTerm> kept;
    for (const auto& term : ch) {
      const bool zero = std::abs(term.omega) < 1e-12;
      if (zero == keep_zero) kept.push_back(term);
    }
    out.channels.push_back(std::move(kept));
  }
  return out;
}

}  // namespace

LindbladParts LindbladParts::from(SuperOperator hamiltonian, SuperOperator dissipative) {
  LindbladParts p;
  p.total = hamiltonian + dissipative;
  p.hamiltonian = std::move(hamiltonian);
  p.dissipative = std::move(dissipative);
  return p;
}

LindbladParts LindbladParts::zero(Index dim) {
  return from(SuperOperator::zero(dim), SuperOperator::zero(dim));
}

LindbladParts LindbladParts::scaled(double factor) const {
  return from(hamiltonian * Complex(factor), dissipative * Complex(factor));
}

LindbladParts LindbladParts::operator+(const LindbladParts& o) const {
  return from(hamiltonian + o.hamiltonian, dissipative + o.dissipative);
}

double operator_norm(const HermitianOperator& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h.matrix(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double weak_coupling_eps(const NoiseModel& model, const std::vector<HermitianOperator>& ops) {
  if (model.kind() == NoiseKind::white) {
    throw std::invalid_argument("weak coupling parameter is undefined for white noise");
  }
  if (ops.empty()) throw std::invalid_argument("weak_coupling_eps: no noise operators");
  if (static_cast<int>(ops.size()) != model.channels()) {
    throw std::invalid_argument("weak_coupling_eps: channel count does not match operators");
  }
  double worst = 0.0;
  for (std::size_t a = 0; a < ops.size(); ++a) {
    const double n = operator_norm(ops[a]);
    worst = std::max(worst, model.weight(static_cast<int>(a)) * n * n);
  }
  return std::sqrt(model.tau() * model.spectral_sup() * worst);
}

NoiseModel calibrate_noise(const NoiseModel& model, const std::vector<HermitianOperator>& ops, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("calibrate_noise: eps must be positive");
  const double current = weak_coupling_eps(model, ops);
  if (!(current > 0.0)) throw std::invalid_argument("calibrate_noise: model has zero coupling");
  return model.scaled((eps / current) * (eps / current));
}

LindbladParts white_noise_generator(const Eigen::MatrixXd& strengths, const ControlSchedule& schedule,
                                    const std::vector<HermitianOperator>& ops, double t) {
  const auto n = static_cast<Index>(ops.size());
  if (n == 0) throw std::invalid_argument("white_noise_generator: no noise operators");
  if (strengths.rows() != n || strengths.cols() != n) {
    throw std::invalid_argument("white_noise_generator: strength matrix size mismatch");
  }
  if ((strengths - strengths.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("white_noise_generator: strength matrix must be symmetric");
  }
  std::vector<SuperOperator> rotated;
  for (const auto& h : ops) rotated.push_back(ad(schedule.interaction_hamiltonian(h, t)));
  SuperOperator diss = SuperOperator::zero(schedule.dim());
  for (Index a = 0; a < n; ++a) {
    for (Index b = 0; b < n; ++b) {
      if (strengths(a, b) == 0.0) continue;
      diss += rotated[static_cast<std::size_t>(a)] * rotated[static_cast<std::size_t>(b)] *
              Complex(-0.5 * strengths(a, b));
    }
  }
  return LindbladParts::from(SuperOperator::zero(schedule.dim()), diss);
}

LindbladParts white_noise_generator(const NoiseModel& model, const ControlSchedule& schedule,
                                    const std::vector<HermitianOperator>& ops, double t) {
  if (model.kind() != NoiseKind::white) throw std::invalid_argument("white_noise_generator: model is not white");
  if (static_cast<int>(ops.size()) != model.channels()) {
    throw std::invalid_argument("white_noise_generator: channel count does not match operators");
  }
  Eigen::MatrixXd strengths = Eigen::MatrixXd::Zero(model.channels(), model.channels());
  for (int a = 0; a < model.channels(); ++a) strengths(a, a) = model.sigma() * model.sigma() * model.weight(a);
  return white_noise_generator(strengths, schedule, ops, t);
}

SuperOperator commutative_generator(const NoiseModel& model, const HermitianOperator& h0, double t) {
  return ad_squared(h0) * Complex(-0.5 * gamma_of_t(model, t));
}

bool commutes_at_all_times(const ControlSchedule& schedule, const HermitianOperator& h, double tol) {
  if (!schedule.periodic()) return true;
  constexpr int kSamples = 97;
  const double span = 2.0 * schedule.period();
  std::vector<Matrix> hs;
  for (int k = 0; k < kSamples; ++k) {
    hs.push_back(schedule.interaction_hamiltonian(h, span * (k + 0.5) / kSamples).matrix());
  }
  for (std::size_t i = 0; i < hs.size(); ++i) {
    for (std::size_t j = i + 1; j < hs.size(); ++j) {
      if (commutator(hs[i], hs[j]).norm() > tol) return false;
    }
  }
  return true;
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::white: return "white";
    case Regime::commutative: return "commutative";
    case Regime::finite_eps: return "finite-eps";
    case Regime::coarse_grained: return "coarse-grained";
  }
  return "unknown";
}

Regime regime_from_string(const std::string& s) {
  if (s == "white") return Regime::white;
  if (s == "commutative") return Regime::commutative;
  if (s == "finite-eps") return Regime::finite_eps;
  if (s == "coarse-grained") return Regime::coarse_grained;
  throw std::invalid_argument("unknown regime '" + s + "'");
}

void GeneratorSpec::validate() const {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps out of (0,1)");
  if (ops.empty()) throw std::invalid_argument("no noise operators");
  for (const auto& h : ops) {
    if (h.dim() != control.dim()) throw std::invalid_argument("noise operator dimension does not match control");
  }
  if (static_cast<int>(ops.size()) != noise.channels()) {
    throw std::invalid_argument("noise channel count does not match the number of noise operators");
  }
  switch (regime) {
    case Regime::white:
      if (noise.kind() != NoiseKind::white) throw std::invalid_argument("white regime requires white noise");
      break;
    case Regime::commutative:
      if (ops.size() != 1) throw std::invalid_argument("commutative regime requires a single noise operator");
      if (!commutes_at_all_times(control, ops.front())) {
        throw std::invalid_argument("commutative regime requires [H^I(t), H^I(t')] = 0");
      }
      break;
    case Regime::finite_eps:
    case Regime::coarse_grained:
      if (noise.kind() == NoiseKind::white) {
        throw std::invalid_argument(to_string(regime) + " regime requires coloured noise");
      }
      if (n_harmonics < 1) throw std::invalid_argument("n_harmonics must be >= 1");
      break;
  }
}

FiniteEpsGenerator::FiniteEpsGenerator(const NoiseModel& model, ControlSchedule schedule,
                                       std::vector<HermitianOperator> ops, std::size_t min_points)
    : kernel_(factor_kernel(unit_weights(model), min_points)),
      schedule_(std::move(schedule)),
      ops_(std::move(ops)) {
  if (ops_.empty()) throw std::invalid_argument("FiniteEpsGenerator: no noise operators");
  if (static_cast<int>(ops_.size()) != model.channels()) {
    throw std::invalid_argument("FiniteEpsGenerator: channel count does not match operators");
  }
  if (model.kind() == NoiseKind::white) throw std::invalid_argument("FiniteEpsGenerator: white noise");
  if (schedule_.periodic() && kernel_.step * schedule_.omega_c() > 0.5) {
    throw std::runtime_error("FiniteEpsGenerator: kernel grid too coarse for the control rate");
  }
  for (std::size_t a = 0; a < ops_.size(); ++a) weights_.push_back(model.weight(static_cast<int>(a)));
}

std::vector<Matrix> FiniteEpsGenerator::samples(std::size_t channel, double t) const {
  std::vector<Matrix> out;
  out.reserve(kernel_.values.size());
  for (std::size_t i = 0; i < kernel_.values.size(); ++i) {
    out.push_back(schedule_.interaction_hamiltonian(ops_[channel], t + kernel_.time(i)).matrix());
  }
  return out;
}

Matrix FiniteEpsGenerator::dissipator_from(std::size_t channel, const std::vector<Matrix>& hs) const {
  Matrix d = Matrix::Zero(dim(), dim());
  // j is even, so int j(t - u) H(u) du = int j(u) H(t + u) du.
  for (std::size_t i = 0; i < hs.size(); ++i) d += kernel_.values[i] * hs[i];
  return d * (kernel_.step * std::sqrt(weights_[channel]));
}

Matrix FiniteEpsGenerator::renormalized_from(std::size_t channel, const std::vector<Matrix>& hs) const {
  // sum_{u,v} j_u j_v sgn(u - v) [A_u, A_v] = 2 sum_u j_u [A_u, sum_{v<u} j_v A_v]
  Matrix running = Matrix::Zero(dim(), dim());
  Matrix acc = Matrix::Zero(dim(), dim());
  for (std::size_t i = 0; i < hs.size(); ++i) {
    acc += kernel_.values[i] * commutator(hs[i], running);
    running += kernel_.values[i] * hs[i];
  }
  return acc * (0.5 * kI * kernel_.step * kernel_.step * weights_[channel]);
}

HermitianOperator FiniteEpsGenerator::dissipator_operator(std::size_t channel, double t) const {
  return HermitianOperator(dissipator_from(channel, samples(channel, t)));
}

HermitianOperator FiniteEpsGenerator::renormalized_hamiltonian(double t) const {
  Matrix total = Matrix::Zero(dim(), dim());
  for (std::size_t a = 0; a < ops_.size(); ++a) total += renormalized_from(a, samples(a, t));
  return HermitianOperator(total);
}

LindbladParts FiniteEpsGenerator::parts(double t) const {
  SuperOperator diss = SuperOperator::zero(dim());
  Matrix hren = Matrix::Zero(dim(), dim());
  for (std::size_t a = 0; a < ops_.size(); ++a) {
    const auto hs = samples(a, t);
    diss += ad_squared(HermitianOperator(dissipator_from(a, hs))) * Complex(-0.5);
    hren += renormalized_from(a, hs);
  }
  return LindbladParts::from(ad(HermitianOperator(hren)) * kI, diss);
}

FiniteEpsGenerator finite_eps_generator(const GeneratorSpec& spec) {
  spec.validate();
  return FiniteEpsGenerator(calibrate_noise(spec.noise, spec.ops, spec.eps), spec.control, spec.ops);
}

LindbladParts coarse_grained_correlated(const StationaryFourierData& fourier, const NoiseModel& model,
                                        const Eigen::MatrixXd& correlation) {
  const auto n = static_cast<Index>(fourier.channel_count());
  if (n == 0) throw std::invalid_argument("coarse_grained: no channels");
  if (correlation.rows() != n || correlation.cols() != n) {
    throw std::invalid_argument("coarse_grained: correlation matrix size mismatch");
  }
  if ((correlation - correlation.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("coarse_grained: correlation matrix must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(correlation, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("coarse_grained: correlation matrix is not positive semidefinite");
  }

  Index dim = 0;
  for (const auto& ch : fourier.channels) {
    if (!ch.empty()) dim = ch.front().coeff.rows();
  }
  if (dim == 0) throw std::invalid_argument("coarse_grained: Fourier data is empty");

  const NoiseModel shape = unit_weights(model);
  const double sup = shape.spectral_sup();
  SuperOperator ham = SuperOperator::zero(dim);
  SuperOperator diss = SuperOperator::zero(dim);
  for (double w : fourier.frequencies()) {
    const double jw = shape.spectral_density(w);
    if (jw < -1e-9 * sup) {
      std::ostringstream msg;
      msg << "coarse_grained: spectral density is negative at omega = " << w;
      throw std::domain_error(msg.str());
    }
    const double kw = shape.k_tilde(w);
    std::vector<Matrix> coeff;
    for (Index a = 0; a < n; ++a) coeff.push_back(fourier.coefficient(static_cast<std::size_t>(a), w));
    for (Index a = 0; a < n; ++a) {
      const Matrix& ha = coeff[static_cast<std::size_t>(a)];
      if (ha.size() == 0) continue;
      for (Index b = 0; b < n; ++b) {
        const double c = correlation(a, b);
        const Matrix& hb = coeff[static_cast<std::size_t>(b)];
        if (c == 0.0 || hb.size() == 0) continue;
        const Matrix hb_dag = hb.adjoint();
        diss += ad(ha) * ad(hb_dag) * Complex(-0.5 * jw * c);
        if (kw != 0.0) ham += ad(Matrix(commutator(ha, hb_dag))) * (0.25 * kI * kw * c);
      }
    }
  }
  return LindbladParts::from(ham, diss);
}

LindbladParts coarse_grained_lindbladian(const StationaryFourierData& fourier, const NoiseModel& model) {
  const auto n = static_cast<Index>(fourier.channel_count());
  if (n != model.channels()) throw std::invalid_argument("coarse_grained: channel count mismatch");
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  for (Index a = 0; a < n; ++a) c(a, a) = model.weight(static_cast<int>(a));
  return coarse_grained_correlated(fourier, model, c);
}

LindbladParts coarse_grained_channel(const StationaryFourierData& fourier, const NoiseModel& model,
                                     std::size_t channel) {
  const auto n = static_cast<Index>(fourier.channel_count());
  if (static_cast<Index>(channel) >= n) throw std::out_of_range("coarse_grained_channel: bad channel");
  if (n != model.channels()) throw std::invalid_argument("coarse_grained: channel count mismatch");
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
  c(static_cast<Index>(channel), static_cast<Index>(channel)) = model.weight(static_cast<int>(channel));
  return coarse_grained_correlated(fourier, model, c);
}

LindbladParts coarse_grained_lindbladian(const GeneratorSpec& spec) {
  spec.validate();
  const NoiseModel model = calibrate_noise(spec.noise, spec.ops, spec.eps);
  const auto fourier = fourier_data(spec.control, spec.ops, spec.n_harmonics);
  return TimeScale{model.tau(), spec.eps}.to_coarse(coarse_grained_lindbladian(fourier, model));
}

RateSum bb_dephasing_rate(const NoiseModel& model, double omega, int n_max) {
  if (!(omega > 0.0)) throw std::invalid_argument("bb_dephasing_rate: omega must be positive");
  if (n_max < 1) throw std::invalid_argument("bb_dephasing_rate: n_max must be >= 1");
  const double pref = 8.0 / (pi * pi);
  const NoiseModel shape = unit_weights(model);
  RateSum r;
  r.n_max = n_max;
  bool truncated = false;
  if (std::isfinite(shape.max_omega())) {
    const int limit = static_cast<int>(std::floor((shape.max_omega() / omega - 1.0) / 2.0));
    if (limit < r.n_max) {
      r.n_max = std::max(limit, 0);
      truncated = true;
    }
  }
  auto term = [&](double n) {
    const double k = 2.0 * n + 1.0;
    return shape.spectral_density(k * omega) / (k * k);
  };
  for (int n = 0; n <= r.n_max; ++n) r.partial += term(n);
  r.partial *= pref;
  const double sup = shape.spectral_sup();
  r.tail_bound = pref * sup / (2.0 * (2.0 * r.n_max + 1.0));
  if (!truncated) r.tail_estimate = pref * euler_maclaurin_tail(term, r.n_max + 1.0);
  return r;
}

RateSum iso_dephasing_rate(const NoiseModel& model, double omega, int n_max) {
  if (!(omega > 0.0)) throw std::invalid_argument("iso_dephasing_rate: omega must be positive");
  if (n_max < 1) throw std::invalid_argument("iso_dephasing_rate: n_max must be >= 1");
  const double pref = 8.0 / (pi * pi);
  const NoiseModel shape = unit_weights(model);
  RateSum r;
  r.n_max = n_max;
  bool truncated = false;
  if (std::isfinite(shape.max_omega())) {
    const int limit = static_cast<int>(std::floor(shape.max_omega() / omega));
    if (limit < r.n_max) {
      r.n_max = std::max(limit, 1);
      truncated = true;
    }
  }
  // The summand is even in n; count n and -n together.
  for (int n = 1; n <= r.n_max; ++n) {
    r.partial += 2.0 * shape.spectral_density(n * omega) * iso_weight(n) / (static_cast<double>(n) * n);
  }
  r.partial *= pref;
  double mean_weight = 0.0;
  double max_weight = 0.0;
  for (int n = 1; n <= 12; ++n) {
    mean_weight += iso_weight(n) / 12.0;
    max_weight = std::max(max_weight, iso_weight(n));
  }
  r.tail_bound = 2.0 * pref * max_weight * shape.spectral_sup() / r.n_max;
  if (!truncated) {
    // Replace the period-12 weight by its mean beyond n_max.
    auto smooth = [&](double x) { return shape.spectral_density(x * omega) / (x * x); };
    using boost::math::quadrature::gauss_kronrod;
    r.tail_estimate = 2.0 * pref * mean_weight *
                      gauss_kronrod<double, 31>::integrate(smooth, r.n_max + 0.5,
                                                           std::numeric_limits<double>::infinity(), 15, 1e-12);
  }
  return r;
}

double dephasing_rate_of(const SuperOperator& channel_generator, const HermitianOperator& axis) {
  const Matrix basis = ad_squared(axis).matrix();
  return -2.0 * frobenius_dot(basis, channel_generator.matrix()) / frobenius_dot(basis, basis);
}

OscillatorNoise oscillator_noise_from_string(const std::string& s) {
  if (s == "linear") return OscillatorNoise::linear;
  if (s == "frequency") return OscillatorNoise::frequency;
  throw std::invalid_argument("unknown oscillator noise '" + s + "'");
}

OscillatorOperators oscillator_operators(Index n_fock) {
  if (n_fock < 2) throw std::invalid_argument("oscillator_operators: n_fock must be >= 2");
  Matrix a = Matrix::Zero(n_fock, n_fock);
  for (Index n = 1; n < n_fock; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  const Matrix ad_ = a.adjoint();
  OscillatorOperators ops{a, HermitianOperator((a + ad_) / std::sqrt(2.0)),
                          HermitianOperator(kI * (ad_ - a) / std::sqrt(2.0)), HermitianOperator(ad_ * a)};
  return ops;
}

Matrix restrict_to_block(const SuperOperator& s, Index block) {
  const Index d = s.dim();
  if (block < 1 || block > d) throw std::invalid_argument("restrict_to_block: bad block size");
  std::vector<Index> idx;
  for (Index j = 0; j < block; ++j) {
    for (Index i = 0; i < block; ++i) idx.push_back(i + d * j);
  }
  const auto m = static_cast<Index>(idx.size());
  Matrix out(m, m);
  for (Index r = 0; r < m; ++r) {
    for (Index c = 0; c < m; ++c) out(r, c) = s.matrix()(idx[static_cast<std::size_t>(r)], idx[static_cast<std::size_t>(c)]);
  }
  return out;
}

OscillatorGenerator oscillator_generators(OscillatorNoise kind, Index n_fock, const NoiseModel& model,
                                          double omega_c, const std::optional<Eigen::Matrix2d>& correlation) {
  if (n_fock < 8) throw std::invalid_argument("oscillator_generators: n_fock must be >= 8");
  const auto ops = oscillator_operators(n_fock);
  const HermitianOperator hc((ops.number.matrix() + 0.5 * Matrix::Identity(n_fock, n_fock)) * omega_c);
  const auto schedule = ControlSchedule::constant(hc, omega_c);

  std::vector<HermitianOperator> noise_ops;
  if (kind == OscillatorNoise::linear) {
    noise_ops = {ops.x, ops.p};
  } else {
    noise_ops = {HermitianOperator(ops.x.matrix() * ops.x.matrix()),
                 HermitianOperator(ops.p.matrix() * ops.p.matrix())};
  }
  Eigen::Matrix2d c = Eigen::Matrix2d::Zero();
  if (correlation) {
    c = *correlation;
  } else {
    c(0, 0) = model.weight(0);
    c(1, 1) = model.channels() > 1 ? model.weight(1) : model.weight(0);
  }
  const auto fourier = fourier_data(schedule, noise_ops);

  OscillatorGenerator g;
  g.kind = kind;
  g.n_fock = n_fock;
  g.parts = coarse_grained_correlated(fourier, model, c);

  if (kind == OscillatorNoise::linear) {
    const Index block = n_fock / 2;
    const SuperOperator adx = ad(ops.x);
    const SuperOperator adp = ad(ops.p);
    const std::array<Matrix, 3> basis{restrict_to_block(adx * adx, block), restrict_to_block(adp * adp, block),
                                      restrict_to_block(adx * adp + adp * adx, block)};
    const Matrix target = restrict_to_block(g.parts.total, block) * Complex(-2.0);
    Matrix design(target.size(), 3);
    for (int k = 0; k < 3; ++k) design.col(k) = basis[static_cast<std::size_t>(k)].reshaped();
    const Eigen::VectorXcd coef = design.completeOrthogonalDecomposition().solve(Eigen::VectorXcd(target.reshaped()));
    g.gamma(0, 0) = coef(0).real();
    g.gamma(1, 1) = coef(1).real();
    g.gamma(0, 1) = g.gamma(1, 0) = coef(2).real() / 2.0;
  } else {
    g.unitary = g.parts.hamiltonian;
    g.dephasing = coarse_grained_correlated(filter_frequencies(fourier, true), model, c).dissipative;
    g.parametric = coarse_grained_correlated(filter_frequencies(fourier, false), model, c).dissipative;
  }
  return g;
}

double measurement_sensitivity(double gamma, double t) {
  const double x = std::exp(-gamma * t);
  return std::sqrt(1.0 - x * x) / (std::sqrt(t) * x);
}

MeasurementTime optimal_measurement_time(double gamma, double t_min, double t_max, int grid_points) {
  if (!(gamma > 0.0)) throw std::invalid_argument("optimal_measurement_time: gamma must be positive");
  if (!(t_min > 0.0) || !(t_max > t_min)) throw std::invalid_argument("optimal_measurement_time: empty interval");
  if (grid_points < 3) throw std::invalid_argument("optimal_measurement_time: need at least 3 grid points");
  MeasurementTime out;
  std::size_t best = 0;
  for (int k = 0; k < grid_points; ++k) {
    const double t = t_min + (t_max - t_min) * k / (grid_points - 1);
    out.grid_t.push_back(t);
    out.grid_s.push_back(measurement_sensitivity(gamma, t));
    if (out.grid_s.back() < out.grid_s[best]) best = out.grid_t.size() - 1;
  }
  const double lo = out.grid_t[best == 0 ? 0 : best - 1];
  const double hi = out.grid_t[std::min(best + 1, out.grid_t.size() - 1)];
  auto f = [gamma](double t) { return measurement_sensitivity(gamma, t); };
  const auto [t_brent, s_brent] = boost::math::tools::brent_find_minima(f, lo, hi, 40);
  out.t_star = t_brent;
  out.s_star = s_brent;
  for (double t : {t_min, t_max, out.grid_t[best]}) {
    const double s = f(t);
    if (s < out.s_star) {
      out.s_star = s;
      out.t_star = t;
    }
  }
  return out;
}

nlohmann::json parts_to_json(const LindbladParts& parts, const nlohmann::json& metadata) {
  nlohmann::json j;
  j["metadata"] = metadata;
  j["hilbert_dim"] = parts.total.dim();
  j["parts"] = {{"hamiltonian", superop_to_json(parts.hamiltonian)},
                {"dissipative", superop_to_json(parts.dissipative)},
                {"total", superop_to_json(parts.total)}};
  return j;
}

}  // namespace forge
