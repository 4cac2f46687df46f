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

#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "forge/generators.hpp"

using namespace forge;
using std::numbers::pi;

namespace {

double diff(const SuperOperator& a, const SuperOperator& b) { return (a.matrix() - b.matrix()).norm(); }

std::vector<double> decay_rates(const SuperOperator& l) {
  std::vector<double> out;
  for (const auto& g : group_spectrum(superop_spectrum(l), 1e-9)) {
    if (-g.value.real() > 1e-9) out.push_back(-g.value.real());
  }
  // complex-conjugate pairs share a decay rate
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(), [](double a, double b) { return std::abs(a - b) < 1e-9; }),
            out.end());
  return out;
}

}  // namespace

TEST_CASE("no control: coarse generator is dephasing at J~(0)") {
  const auto s = spin_operators(1.0);
  const auto m = NoiseModel::ou(0.4, 3.0);
  const auto g = coarse_grained_lindbladian(fourier_data(ControlSchedule::none(3), {s.z}), m);
  const SuperOperator adz = ad(s.z);
  const double j0 = 2.0 * 0.16 * 3.0;
  CHECK(diff(g.total, adz * adz * Complex(-0.5 * j0, 0)) < 1e-13);
  CHECK(g.hamiltonian.matrix().norm() < 1e-15);
}

TEST_CASE("constant control: generator from the raising and lowering harmonics") {
  // H^I = S_x cos wt - S_y sin wt = (S+ e^{iwt} + S- e^{-iwt}) / 2
  const auto s = spin_operators(0.5);
  const double w = 0.6;
  const auto m = NoiseModel::ou(1.0, 2.0);
  const auto g = coarse_grained_lindbladian(fourier_data(ControlSchedule::constant(s.z * w, w), {s.x}), m);
  const Matrix sp = s.x.matrix() + kI * s.y.matrix();
  const Matrix sm = sp.adjoint();
  const double jw = m.spectral_density(w);
  const SuperOperator expected_d =
      (ad(Matrix(0.5 * sp)) * ad(Matrix(0.5 * sm)) + ad(Matrix(0.5 * sm)) * ad(Matrix(0.5 * sp))) *
      Complex(-0.5 * jw, 0);
  const SuperOperator expected_h = ad(s.z) * Complex(0, 0.25 * m.k_tilde(w));
  CHECK(diff(g.dissipative, expected_d) < 1e-13);
  CHECK(diff(g.hamiltonian, expected_h) < 1e-13);
  const auto rates = decay_rates(g.total);
  REQUIRE(rates.size() == 2);
  CHECK(rates[0] == doctest::Approx(jw / 4.0).epsilon(1e-10));
  CHECK(rates[1] == doctest::Approx(jw / 2.0).epsilon(1e-10));
  // The two parts commute.
  CHECK(diff(g.hamiltonian * g.dissipative, g.dissipative * g.hamiltonian) < 1e-12);
}

TEST_CASE("bang-bang rate: generator projection equals the truncated sum") {
  const auto s = spin_operators(0.5);
  const auto m = NoiseModel::ou(1.0, 1.0);
  for (double w : {0.5, 2.0, 6.0}) {
    const auto g = coarse_grained_lindbladian(fourier_data(ControlSchedule::bangbang_pi(2, w), {s.z}, 41), m);
    // harmonics |k| <= 41 hold the odd terms 2n+1 <= 41, n <= 20
    CHECK(dephasing_rate_of(g.total, s.z) == doctest::Approx(bb_dephasing_rate(m, w, 20).partial).epsilon(1e-12));
    const auto rates = decay_rates(g.total);
    REQUIRE(rates.size() == 1);
    CHECK(rates[0] == doctest::Approx(bb_dephasing_rate(m, w, 20).partial / 2.0).epsilon(1e-10));
  }
}

TEST_CASE("bang-bang tail estimate and bound against a long direct sum") {
  const auto m = NoiseModel::ou(1.0, 1.0);
  for (double w : {0.3, 1.0, 8.0}) {
    double direct = 0.0;
    for (int n = 200000; n >= 0; --n) {
      const double k = 2.0 * n + 1.0;
      direct += m.spectral_density(k * w) / (k * k);
    }
    direct *= 8.0 / (pi * pi);
    const auto r = bb_dephasing_rate(m, w, 50);
    CHECK(std::abs(r.partial + r.tail_estimate - direct) <= r.tail_bound + 1e-12);
    CHECK(std::abs(r.value() - direct) < 1e-6 * direct);
  }
}

TEST_CASE("isotropic rate: every channel matches the closed sum") {
  const auto s = spin_operators(0.5);
  const std::vector<HermitianOperator> ops{s.x, s.y, s.z};
  const auto m = NoiseModel::ou(1.0, 1.0, 3);
  const auto f = fourier_data(ControlSchedule::bangbang_iso12(2, 1.5), ops, 120);
  const double formula = iso_dephasing_rate(m, 1.5, 120).partial;
  for (std::size_t a = 0; a < 3; ++a) {
    CHECK(dephasing_rate_of(coarse_grained_channel(f, m, a).total, ops[a]) ==
          doctest::Approx(formula).epsilon(1e-10));
  }
}

TEST_CASE("identity correlation equals independent channels") {
  const auto s = spin_operators(0.5);
  const std::vector<HermitianOperator> ops{s.x, s.z};
  const auto m = NoiseModel::ou(1.0, 1.0, 2);
  const auto f = fourier_data(ControlSchedule::bangbang_pi(2, 1.0), ops);
  const auto a = coarse_grained_lindbladian(f, m);
  const auto b = coarse_grained_correlated(f, m, Eigen::MatrixXd::Identity(2, 2));
  CHECK(diff(a.total, b.total) < 1e-12);
}

TEST_CASE("property: coarse generators are CP for random PSD correlations and controls") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n;
  const auto s = spin_operators(0.5);
  const std::vector<HermitianOperator> ops{s.x, s.y, s.z};
  const auto m = NoiseModel::damped_cosine(1.0, 1.0, 2.0, 3);
  for (int trial = 0; trial < 12; ++trial) {
    Eigen::MatrixXd a(3, 3);
    for (int i = 0; i < 9; ++i) a(i / 3, i % 3) = n(rng);
    const Eigen::MatrixXd c = a * a.transpose();
    const ControlSchedule ctl = trial % 3 == 0   ? ControlSchedule::bangbang_iso12(2, 0.5 + trial)
                                : trial % 3 == 1 ? ControlSchedule::bangbang_pi(2, 0.5 + trial)
                                                 : ControlSchedule::constant(s.z * (0.2 * trial), 0.2 * trial);
    const auto g = coarse_grained_correlated(fourier_data(ctl, ops), m, c);
    CHECK(g.total.apply(Matrix::Identity(2, 2)).norm() < 1e-12);
    for (double t : {0.1, 1.0, 10.0}) CHECK(min_choi_eigenvalue(superop_exp(g.total, t)) > -1e-10);
  }
}

TEST_CASE("weak coupling calibration") {
  const auto s = spin_operators(0.5);
  const auto m = NoiseModel::ou(2.0, 5.0);
  // eps^2 = tau * 2 sigma^2 tau * ||S_z||^2
  CHECK(weak_coupling_eps(m, {s.z}) == doctest::Approx(std::sqrt(5.0 * 8.0 * 5.0 * 0.25)));
  const auto c = calibrate_noise(m.with_weights({1.0, 1.0}), {s.z, s.x}, 0.15);
  CHECK(weak_coupling_eps(c, {s.z, s.x}) == doctest::Approx(0.15).epsilon(1e-12));
  CHECK_THROWS(weak_coupling_eps(NoiseModel::white(1.0), {s.z}));
  const TimeScale ts{20.0, 0.15};
  CHECK(ts.t_of_s(ts.s_of_t(123.0)) == doctest::Approx(123.0));
  CHECK(ts.coarse_factor() == doctest::Approx(20.0 / 0.0225));
}

TEST_CASE("white noise generator without control") {
  const auto s = spin_operators(1.5);
  const auto g = white_noise_generator(NoiseModel::white(0.7), ControlSchedule::none(4), {s.y}, 3.0);
  const SuperOperator ady = ad(s.y);
  CHECK(diff(g.total, ady * ady * Complex(-0.5 * 0.49, 0)) < 1e-13);
}

TEST_CASE("commutative generator uses gamma(t)") {
  const auto s = spin_operators(0.5);
  const auto m = NoiseModel::ou(1.0, 2.0);
  const SuperOperator adz = ad(s.z);
  for (double t : {0.3, 4.0}) {
    const double gam = 2.0 * 2.0 * (1.0 - std::exp(-t / 2.0));
    CHECK(diff(commutative_generator(m, s.z, t), adz * adz * Complex(-0.5 * gam, 0)) < 1e-9);
    CHECK(dephasing_rate_of(commutative_generator(m, s.z, t), s.z) == doctest::Approx(gam).epsilon(1e-9));
  }
  CHECK(commutes_at_all_times(ControlSchedule::bangbang_pi(2, 1.0), s.z));
  CHECK_FALSE(commutes_at_all_times(ControlSchedule::constant(s.z, 1.0), s.x));
}

TEST_CASE("finite-eps generator without control reduces to the coarse one") {
  const auto s = spin_operators(0.5);
  const auto m = NoiseModel::ou(0.01, 20.0);
  const FiniteEpsGenerator fin(m, ControlSchedule::none(2), {s.z});
  const auto coarse = coarse_grained_lindbladian(fourier_data(ControlSchedule::none(2), {s.z}), m);
  // D = (int j) S_z, so the dissipator is -1/2 (int j)^2 ad(S_z)^2; int j
  // approximates sqrt(J~(0)) to the kernel's discretization accuracy.
  const double area = fin.kernel().integral();
  const SuperOperator adz = ad(s.z);
  const auto p = fin.parts(5.0);
  CHECK(diff(p.total, adz * adz * Complex(-0.5 * area * area, 0)) < 1e-12 * coarse.total.matrix().norm());
  CHECK(diff(p.total, coarse.total) < 1e-3 * coarse.total.matrix().norm());
  CHECK(fin.renormalized_hamiltonian(0.0).matrix().norm() < 1e-15);
}

TEST_CASE("finite-eps generator under control is a valid Lindblad form") {
  const auto s = spin_operators(0.5);
  const auto m = calibrate_noise(NoiseModel::ou(1.0, 20.0), {s.x}, 0.15);
  const double w = (pi / 2.0) / 20.0;
  const FiniteEpsGenerator fin(m, ControlSchedule::constant(s.z * w, w), {s.x});
  for (double t : {0.0, 10.0, 37.0}) {
    const auto p = fin.parts(t);
    CHECK(p.total.apply(Matrix::Identity(2, 2)).norm() < 1e-14);
    const Matrix d = fin.dissipator_operator(0, t).matrix();
    CHECK((d - d.adjoint()).norm() < 1e-14);
  }
  // Time-averaged over a period the dissipator approaches the coarse one.
  const auto coarse = coarse_grained_lindbladian(fourier_data(ControlSchedule::constant(s.z * w, w), {s.x}), m);
  SuperOperator avg = SuperOperator::zero(2);
  const int n = 64;
  for (int k = 0; k < n; ++k) avg += fin.parts(k * (2.0 * pi / w) / n).dissipative * Complex(1.0 / n, 0);
  CHECK(diff(avg, coarse.dissipative) < 0.05 * coarse.dissipative.matrix().norm());
}

TEST_CASE("optimal measurement time matches a brute-force scan") {
  // S^2 = (e^{2 gamma t} - 1) / t, so S increases and the minimum is the left edge.
  for (double gamma : {0.5, 1.0, 2.0}) {
    const auto r = optimal_measurement_time(gamma, 0.1, 10.0);
    double best_t = 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 1000000; ++k) {
      const double t = 0.1 + (10.0 - 0.1) * k / 1e6;
      const double v = measurement_sensitivity(gamma, t);
      if (v < best) {
        best = v;
        best_t = t;
      }
    }
    CHECK(std::abs(r.t_star - best_t) < 1e-6);
    CHECK(r.t_star == doctest::Approx(0.1));
    CHECK(std::abs(r.s_star - best) <= 1e-12 * best);
    for (std::size_t i = 1; i < r.grid_s.size(); ++i) {
      CHECK(std::isfinite(r.grid_s[i]));
      CHECK(r.grid_s[i] > r.grid_s[i - 1]);
    }
  }
  CHECK_THROWS(optimal_measurement_time(1.0, 2.0, 1.0));
}

TEST_CASE("oscillator with linear noise") {
  const auto m = NoiseModel::ou(1.0, 1.0, 2);
  const auto g = oscillator_generators(OscillatorNoise::linear, 16, m, 1.0);
  CHECK(g.gamma(0, 1) == doctest::Approx(g.gamma(1, 0)));
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(g.gamma);
  CHECK(es.eigenvalues().minCoeff() >= -1e-12);
  const auto ops = oscillator_operators(16);
  CHECK(restrict_to_block(ad(ops.x) * ad(ops.p) - ad(ops.p) * ad(ops.x), 8).norm() < 1e-8);
  CHECK_THROWS(oscillator_generators(OscillatorNoise::linear, 6, m, 1.0));
}

TEST_CASE("oscillator with frequency noise dephases as (n - m)^2") {
  const auto m = NoiseModel::ou(1.0, 1.0, 2);
  const auto g = oscillator_generators(OscillatorNoise::frequency, 16, m, 1.0);
  Matrix e01 = Matrix::Zero(16, 16);
  e01(0, 1) = 1.0;
  const double unit = g.dephasing.apply(e01)(0, 1).real();
  CHECK(unit < 0.0);
  for (Index n = 0; n < 6; ++n) {
    for (Index k = 0; k < 6; ++k) {
      Matrix e = Matrix::Zero(16, 16);
      e(n, k) = 1.0;
      CHECK(std::abs(g.dephasing.apply(e)(n, k) - unit * static_cast<double>((n - k) * (n - k))) < 1e-9);
    }
  }
  CHECK(diff(g.unitary + g.dephasing + g.parametric, g.parts.total) < 1e-12);
}

TEST_CASE("regime names and spec validation") {
  for (auto r : {Regime::white, Regime::commutative, Regime::finite_eps, Regime::coarse_grained}) {
    CHECK(regime_from_string(to_string(r)) == r);
  }
  CHECK_THROWS(regime_from_string("adiabatic"));
  GeneratorSpec spec;
  spec.ops = {spin_operators(0.5).z};
  CHECK_NOTHROW(spec.validate());
  spec.eps = 1.5;
  CHECK_THROWS(spec.validate());
}

TEST_CASE("JSON export carries every part") {
  const auto s = spin_operators(0.5);
  const auto g = coarse_grained_lindbladian(fourier_data(ControlSchedule::none(2), {s.z}), NoiseModel::ou(1, 1));
  const auto j = parts_to_json(g, {{"regime", "coarse-grained"}});
  CHECK(j.at("metadata").at("regime") == "coarse-grained");
  CHECK(diff(superop_from_json(j.at("parts").at("total")), g.total) == 0.0);
  CHECK(j.at("hilbert_dim") == 2);
}
