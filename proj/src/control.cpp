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

#include "forge/control.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

namespace forge {

namespace {

using std::numbers::pi;

constexpr double kPruneTol = 1e-12;

void check_unitary(const Matrix& u) {
  if (u.rows() != u.cols()) throw std::invalid_argument("segment unitary must be square");
  const double dev = (u.adjoint() * u - Matrix::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff();
  if (dev > 1e-12) throw std::invalid_argument("segment matrix is not unitary");
}

Matrix rotation_pi(const HermitianOperator& s) { return matrix_exp(kI * pi * s.matrix()); }

double spin_of_dim(Index dim) { return 0.5 * static_cast<double>(dim - 1); }

// Fractional position within the period, in [0, 1).
double phase_fraction(double t, double omega) {
  const double x = omega * t / (2.0 * pi);
  double f = x - std::floor(x);
  if (f >= 1.0) f = 0.0;
  return f;
}

void prune(std::vector<FourierTerm>& terms) {
  std::erase_if(terms, [](const FourierTerm& t) { return t.coeff.norm() < kPruneTol; });
}

}  // namespace

std::string to_string(ControlKind kind) {
  switch (kind) {
    case ControlKind::none: return "none";
    case ControlKind::constant: return "constant";
    case ControlKind::bangbang_pi: return "bangbang-pi";
    case ControlKind::bangbang_iso12: return "bangbang-iso12";
    case ControlKind::custom_piecewise: return "custom-piecewise";
  }
  return "unknown";
}

ControlKind control_kind_from_string(const std::string& s) {
  if (s == "none") return ControlKind::none;
  if (s == "constant") return ControlKind::constant;
  if (s == "bangbang-pi") return ControlKind::bangbang_pi;
  if (s == "bangbang-iso12") return ControlKind::bangbang_iso12;
  if (s == "custom-piecewise") return ControlKind::custom_piecewise;
  throw std::invalid_argument("unknown control kind '" + s + "'");
}

ControlSchedule ControlSchedule::none(Index dim) {
  if (dim < 1) throw std::invalid_argument("ControlSchedule: dim must be positive");
  ControlSchedule c;
  c.kind_ = ControlKind::none;
  c.dim_ = dim;
  return c;
}

ControlSchedule ControlSchedule::constant(const HermitianOperator& hc, double omega_c) {
  if (!(omega_c > 0.0)) throw std::invalid_argument("constant control: omega_c must be positive");
  ControlSchedule c;
  c.kind_ = ControlKind::constant;
  c.dim_ = hc.dim();
  c.omega_c_ = omega_c;
  c.hc_ = hc;
  Eigen::SelfAdjointEigenSolver<Matrix> es(hc.matrix());
  const auto& vals = es.eigenvalues();
  const Matrix& vecs = es.eigenvectors();
  const double scale = std::max(1.0, vals.cwiseAbs().maxCoeff());
  for (Index k = 0; k < vals.size(); ++k) {
    const Vector v = vecs.col(k);
    if (!c.levels_.empty() && std::abs(vals(k) - c.levels_.back()) < 1e-9 * scale) {
      c.projections_.back() += v * v.adjoint();
    } else {
      c.levels_.push_back(vals(k));
      c.projections_.push_back(v * v.adjoint());
    }
  }
  return c;
}

ControlSchedule ControlSchedule::bangbang_pi(Index dim, double omega_c) {
  const auto s = spin_operators(spin_of_dim(dim));
  std::vector<Segment> segs{{0.5, Matrix::Identity(dim, dim)}, {0.5, rotation_pi(s.x)}};
  auto c = custom_piecewise(std::move(segs), omega_c);
  c.kind_ = ControlKind::bangbang_pi;
  return c;
}

ControlSchedule ControlSchedule::bangbang_iso12(Index dim, double omega_c) {
  const auto seq = iso12_sequence(dim);
  std::vector<Segment> segs;
  for (const auto& u : seq) segs.push_back({1.0 / 12.0, u});
  auto c = custom_piecewise(std::move(segs), omega_c);
  c.kind_ = ControlKind::bangbang_iso12;
  return c;
}

ControlSchedule ControlSchedule::custom_piecewise(std::vector<Segment> segments, double omega_c) {
  if (!(omega_c > 0.0)) throw std::invalid_argument("piecewise control: omega_c must be positive");
  if (segments.empty()) throw std::invalid_argument("piecewise control: no segments");
  double total = 0.0;
  const Index dim = segments.front().unitary.rows();
  for (const auto& s : segments) {
    if (!(s.fraction > 0.0)) throw std::invalid_argument("piecewise control: fractions must be positive");
    if (s.unitary.rows() != dim) throw std::invalid_argument("piecewise control: dimension mismatch");
    check_unitary(s.unitary);
    total += s.fraction;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("piecewise control: fractions must sum to 1");
  ControlSchedule c;
  c.kind_ = ControlKind::custom_piecewise;
  c.dim_ = dim;
  c.omega_c_ = omega_c;
  c.segments_ = std::move(segments);
  return c;
}

double ControlSchedule::period() const {
  if (!periodic()) throw std::logic_error("schedule has no period");
  return 2.0 * pi / omega_c_;
}

std::vector<double> ControlSchedule::boundaries() const {
  std::vector<double> b{0.0};
  for (const auto& s : segments_) b.push_back(b.back() + s.fraction);
  b.back() = 1.0;
  return b;
}

std::size_t ControlSchedule::segment_at(double t) const {
  if (segments_.empty()) throw std::logic_error("segment_at: schedule is not piecewise");
  const double f = phase_fraction(t, omega_c_);
  double acc = 0.0;
  for (std::size_t j = 0; j < segments_.size(); ++j) {
    acc += segments_[j].fraction;
    if (f < acc) return j;
  }
  return segments_.size() - 1;
}

Matrix ControlSchedule::unitary(double t) const {
  switch (kind_) {
    case ControlKind::none: return Matrix::Identity(dim_, dim_);
    case ControlKind::constant: {
      Matrix v = Matrix::Zero(dim_, dim_);
      for (std::size_t j = 0; j < levels_.size(); ++j) {
        v += std::exp(-kI * levels_[j] * t) * projections_[j];
      }
      return v;
    }
    default: return segments_[segment_at(t)].unitary;
  }
}

HermitianOperator ControlSchedule::interaction_hamiltonian(const HermitianOperator& h, double t) const {
  if (h.dim() != dim_) throw std::invalid_argument("interaction_hamiltonian: dimension mismatch");
  if (kind_ == ControlKind::none) return h;
  const Matrix v = unitary(t);
  return HermitianOperator(v.adjoint() * h.matrix() * v);
}

HermitianOperator interaction_hamiltonian(const ControlSchedule& schedule, const HermitianOperator& h,
                                          double t) {
  return schedule.interaction_hamiltonian(h, t);
}

std::vector<double> StationaryFourierData::frequencies() const {
  std::vector<double> out;
  for (const auto& ch : channels) {
    for (const auto& term : ch) {
      const bool seen = std::any_of(out.begin(), out.end(), [&](double w) {
        return std::abs(w - term.omega) <= 1e-9 * std::max(1.0, std::abs(w));
      });
      if (!seen) out.push_back(term.omega);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

Matrix StationaryFourierData::coefficient(std::size_t channel, double omega) const {
  const auto& ch = channels.at(channel);
  for (const auto& term : ch) {
    if (std::abs(term.omega - omega) <= 1e-9 * std::max(1.0, std::abs(omega))) return term.coeff;
  }
  const Index d = ch.empty() ? 0 : ch.front().coeff.rows();
  return Matrix::Zero(d, d);
}

double StationaryFourierData::pairing_defect() const {
  double worst = 0.0;
  for (std::size_t a = 0; a < channels.size(); ++a) {
    for (const auto& term : channels[a]) {
      const Matrix partner = coefficient(a, -term.omega);
      worst = std::max(worst, (term.coeff - partner.adjoint()).norm());
    }
  }
  return worst;
}

StationaryFourierData fourier_data(const ControlSchedule& schedule, const std::vector<HermitianOperator>& ops,
                                   int n_harmonics) {
  if (n_harmonics < 1) throw std::invalid_argument("fourier_data: n_harmonics must be >= 1");
  StationaryFourierData out;
  out.base_omega = schedule.omega_c();
  for (const auto& h : ops) {
    if (h.dim() != schedule.dim()) throw std::invalid_argument("fourier_data: dimension mismatch");
    std::vector<FourierTerm> terms;
    switch (schedule.kind()) {
      case ControlKind::none: terms.push_back({0.0, h.matrix()}); break;
      case ControlKind::constant: {
        // V^dag H V = sum_jk exp(i (e_j - e_k) t) P_j H P_k
        const auto& e = schedule.control_levels();
        const auto& p = schedule.control_projections();
        std::map<double, Matrix> by_freq;
        const double scale = std::max(1.0, std::abs(e.back() - e.front()));
        for (std::size_t j = 0; j < e.size(); ++j) {
          for (std::size_t k = 0; k < e.size(); ++k) {
            double w = e[j] - e[k];
            auto it = std::find_if(by_freq.begin(), by_freq.end(),
                                   [&](const auto& kv) { return std::abs(kv.first - w) < 1e-9 * scale; });
            const Matrix block = p[j] * h.matrix() * p[k];
            if (it == by_freq.end()) by_freq.emplace(w, block); else it->second += block;
          }
        }
        for (auto& [w, m] : by_freq) terms.push_back({w, std::move(m)});
        break;
      }
      default: {
        const auto b = schedule.boundaries();
        const auto& segs = schedule.segments();
        std::vector<Matrix> rotated;
        for (const auto& s : segs) rotated.push_back(s.unitary.adjoint() * h.matrix() * s.unitary);
        for (int k = -n_harmonics; k <= n_harmonics; ++k) {
          Matrix c = Matrix::Zero(h.dim(), h.dim());
          for (std::size_t j = 0; j < segs.size(); ++j) {
            // (1/T) int_{a T}^{b T} e^{-i k w t} dt with w T = 2 pi
            Complex weight;
            if (k == 0) {
              weight = b[j + 1] - b[j];
            } else {
              const double x = 2.0 * pi * k;
              weight = (std::exp(-kI * x * b[j]) - std::exp(-kI * x * b[j + 1])) / (kI * x);
            }
            c += weight * rotated[j];
          }
          terms.push_back({k * schedule.omega_c(), std::move(c)});
        }
        break;
      }
    }
    prune(terms);
    out.channels.push_back(std::move(terms));
  }
  return out;
}

StationaryFourierData fourier_data_quadrature(const ControlSchedule& schedule,
                                              const std::vector<HermitianOperator>& ops, int n_harmonics,
                                              int points_per_period) {
  if (!schedule.periodic()) throw std::invalid_argument("fourier_data_quadrature: aperiodic schedule");
  if (points_per_period < 16) throw std::invalid_argument("fourier_data_quadrature: too few points");
  const double period = schedule.period();
  StationaryFourierData out;
  out.base_omega = schedule.omega_c();
  for (const auto& h : ops) {
    std::vector<Matrix> samples;
    samples.reserve(static_cast<std::size_t>(points_per_period));
    // Midpoint samples: the periodic trapezoid rule shifted by half a cell, so
    // that no sample sits on a segment boundary.
    for (int n = 0; n < points_per_period; ++n) {
      const double t = (n + 0.5) * period / points_per_period;
      samples.push_back(schedule.interaction_hamiltonian(h, t).matrix());
    }
    std::vector<FourierTerm> terms;
    for (int k = -n_harmonics; k <= n_harmonics; ++k) {
      Matrix c = Matrix::Zero(h.dim(), h.dim());
      for (int n = 0; n < points_per_period; ++n) {
        const double t = (n + 0.5) * period / points_per_period;
        c += std::exp(-kI * (k * schedule.omega_c() * t)) * samples[static_cast<std::size_t>(n)];
      }
      terms.push_back({k * schedule.omega_c(), c / static_cast<double>(points_per_period)});
    }
    prune(terms);
    out.channels.push_back(std::move(terms));
  }
  return out;
}

EffectivenessReport is_effective(const ControlSchedule& schedule, const std::vector<HermitianOperator>& ops,
                                 double tol) {
  EffectivenessReport rep;
  const auto data = fourier_data(schedule, ops, 1);
  rep.effective = true;
  for (std::size_t a = 0; a < ops.size(); ++a) {
    const double n = data.coefficient(a, 0.0).norm();
    rep.zero_frequency_norms.push_back(n);
    if (!(n < tol)) rep.effective = false;

    const Matrix& h = ops[a].matrix();
    Matrix residual = Matrix::Zero(h.rows(), h.cols());
    switch (schedule.kind()) {
      case ControlKind::none: residual = h; break;
      case ControlKind::constant:
        for (const auto& p : schedule.control_projections()) residual += p * h * p;
        break;
      default:
        for (const auto& s : schedule.segments()) residual += s.fraction * (s.unitary.adjoint() * h * s.unitary);
        break;
    }
    rep.residuals.push_back(std::move(residual));
  }
  return rep;
}

std::array<Matrix, 12> iso12_sequence(Index dim) {
  const auto s = spin_operators(spin_of_dim(dim));
  const Matrix r1 = rotation_pi(s.x);
  const Matrix r2 = rotation_pi(s.y);
  const Matrix r3 = rotation_pi(s.z);
  const Matrix id = Matrix::Identity(dim, dim);
  return {r1, r2, r3, id, r2, r3, r1, id, r3, r1, r2, id};
}

Iso12Waveforms iso12_waveforms() {
  const auto s = spin_operators(0.5);
  const std::array<const HermitianOperator*, 3> axes{&s.x, &s.y, &s.z};
  const auto seq = iso12_sequence(2);
  Iso12Waveforms w{};
  for (std::size_t a = 0; a < 3; ++a) {
    const Matrix& sa = axes[a]->matrix();
    for (std::size_t j = 0; j < 12; ++j) {
      const Matrix rotated = seq[j].adjoint() * sa * seq[j];
      // rotated = +-S_alpha; read the sign off the overlap.
      const double overlap = (rotated * sa).trace().real() / (sa * sa).trace().real();
      w[a][j] = overlap > 0.0 ? 1 : -1;
    }
  }
  return w;
}

}  // namespace forge
