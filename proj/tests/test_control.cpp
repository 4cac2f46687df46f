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
#include "forge/control.hpp"

using namespace forge;
using std::numbers::pi;

namespace {

Matrix reconstruct(const StationaryFourierData& f, std::size_t channel, double t) {
  const Index d = f.channels[channel].front().coeff.rows();
  Matrix out = Matrix::Zero(d, d);
  for (const auto& term : f.channels[channel]) out += term.coeff * std::exp(Complex(0, term.omega * t));
  return out;
}

}  // namespace

TEST_CASE("no control leaves operators unchanged") {
  const auto s = spin_operators(1.0);
  const auto ctl = ControlSchedule::none(3);
  CHECK_FALSE(ctl.periodic());
  CHECK((ctl.unitary(4.2) - Matrix::Identity(3, 3)).norm() == 0.0);
  CHECK((ctl.interaction_hamiltonian(s.x, 9.0).matrix() - s.x.matrix()).norm() == 0.0);
  const auto f = fourier_data(ctl, {s.x});
  REQUIRE(f.channels[0].size() == 1);
  CHECK(f.channels[0][0].omega == 0.0);
}

TEST_CASE("constant S_z control rotates S_x in the plane") {
  const auto s = spin_operators(0.5);
  const double w = 0.8;
  const auto ctl = ControlSchedule::constant(s.z * w, w);
  for (double t : {0.0, 0.3, 2.0, 11.0}) {
    const Matrix expected = s.x.matrix() * std::cos(w * t) - s.y.matrix() * std::sin(w * t);
    CHECK((ctl.interaction_hamiltonian(s.x, t).matrix() - expected).norm() < 1e-13);
  }
  const auto f = fourier_data(ctl, {s.x});
  CHECK(f.channels[0].size() == 2);  // +-w only
  for (double t : {0.1, 1.7, 23.0}) {
    CHECK((reconstruct(f, 0, t) - ctl.interaction_hamiltonian(s.x, t).matrix()).norm() < 1e-12);
  }
  CHECK(f.pairing_defect() < 1e-14);
}

TEST_CASE("constant control Fourier data is exact for higher spin and tilted axes") {
  const auto s = spin_operators(1.5);
  const auto hc = s.x * 0.3 + s.z * 1.1;
  const auto ctl = ControlSchedule::constant(hc, 1.0);
  const auto f = fourier_data(ctl, {s.x, s.y});
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  for (int k = 0; k < 10; ++k) {
    const double t = u(rng);
    CHECK((reconstruct(f, 0, t) - ctl.interaction_hamiltonian(s.x, t).matrix()).norm() < 1e-11);
    CHECK((reconstruct(f, 1, t) - ctl.interaction_hamiltonian(s.y, t).matrix()).norm() < 1e-11);
  }
}

TEST_CASE("pi pulses flip S_z each half period") {
  const auto s = spin_operators(0.5);
  const double w = 2.0;
  const auto ctl = ControlSchedule::bangbang_pi(2, w);
  const double period = 2.0 * pi / w;
  CHECK(ctl.period() == doctest::Approx(period));
  CHECK((ctl.interaction_hamiltonian(s.z, 0.2 * period).matrix() - s.z.matrix()).norm() < 1e-14);
  CHECK((ctl.interaction_hamiltonian(s.z, 0.7 * period).matrix() + s.z.matrix()).norm() < 1e-14);
  CHECK((ctl.interaction_hamiltonian(s.x, 0.7 * period).matrix() - s.x.matrix()).norm() < 1e-14);
  CHECK(ctl.segment_at(0.2 * period) == 0);
  CHECK(ctl.segment_at(1.7 * period) == 1);
}

TEST_CASE("square wave harmonics") {
  // f = +1, -1 on the two halves: c_k = (1/T) int f e^{-i k w t} dt = -2i / (pi k)
  // for odd k and 0 for even k.
  const auto s = spin_operators(0.5);
  const double w = 1.3;
  const auto f = fourier_data(ControlSchedule::bangbang_pi(2, w), {s.z}, 41);
  for (int k = -9; k <= 9; ++k) {
    const Complex c = f.coefficient(0, k * w)(0, 0) / 0.5;
    const Complex expected = k % 2 == 0 ? Complex(0.0) : Complex(0.0, -2.0 / (pi * k));
    CHECK(std::abs(c - expected) < 1e-13);
  }
  CHECK(f.pairing_defect() < 1e-14);
}

TEST_CASE("closed-form harmonics agree with quadrature") {
  const auto s = spin_operators(0.5);
  const std::vector<HermitianOperator> ops{s.x, s.y, s.z};
  const auto ctl = ControlSchedule::bangbang_iso12(2, 0.9);
  const auto exact = fourier_data(ctl, ops, 13);
  const int points = 12 * 512;
  const auto quad = fourier_data_quadrature(ctl, ops, 13, points);
  // With segments aligned to the cells, the midpoint sum of a piecewise
  // constant waveform is exact up to the factor (x/2)/sin(x/2), x = 2 pi k / points.
  for (std::size_t a = 0; a < 3; ++a) {
    for (int k = -13; k <= 13; ++k) {
      const double x = 2.0 * pi * k / points;
      const double factor = k == 0 ? 1.0 : std::sin(x / 2.0) / (x / 2.0);
      CHECK((exact.coefficient(a, k * 0.9) - factor * quad.coefficient(a, k * 0.9)).norm() < 1e-12);
    }
  }
}

TEST_CASE("iso12 waveforms average every axis to zero") {
  const auto w = iso12_waveforms();
  for (const auto& axis : w) {
    int sum = 0;
    for (int v : axis) sum += v;
    CHECK(sum == 0);
  }
  const auto s = spin_operators(0.5);
  const auto ctl = ControlSchedule::bangbang_iso12(2, 1.0);
  const std::array<const HermitianOperator*, 3> ops{&s.x, &s.y, &s.z};
  for (std::size_t seg = 0; seg < 12; ++seg) {
    const double t = (seg + 0.5) * ctl.period() / 12.0;
    for (std::size_t a = 0; a < 3; ++a) {
      const Matrix h = ctl.interaction_hamiltonian(*ops[a], t).matrix();
      CHECK((h - static_cast<double>(w[a][seg]) * ops[a]->matrix()).norm() < 1e-13);
    }
  }
}

TEST_CASE("effectiveness of standard schedules") {
  const auto s = spin_operators(0.5);
  const std::vector<HermitianOperator> iso{s.x, s.y, s.z};
  CHECK(is_effective(ControlSchedule::bangbang_pi(2, 1.0), {s.z}).effective);
  CHECK_FALSE(is_effective(ControlSchedule::bangbang_pi(2, 1.0), {s.x}).effective);
  CHECK(is_effective(ControlSchedule::constant(s.z, 1.0), {s.x}).effective);
  CHECK_FALSE(is_effective(ControlSchedule::constant(s.z, 1.0), iso).effective);
  CHECK(is_effective(ControlSchedule::bangbang_iso12(2, 1.0), iso).effective);
  CHECK_FALSE(is_effective(ControlSchedule::none(2), {s.z}).effective);
  const auto s1 = spin_operators(1.0);
  CHECK(is_effective(ControlSchedule::bangbang_iso12(3, 1.0), {s1.x, s1.y, s1.z}).effective);
}

TEST_CASE("control unitaries are unitary and custom schedules validate") {
  const auto ctl = ControlSchedule::bangbang_iso12(4, 0.5);
  for (double t : {0.1, 3.0, 17.0}) {
    const Matrix u = ctl.unitary(t);
    CHECK((u.adjoint() * u - Matrix::Identity(4, 4)).norm() < 1e-12);
  }
  const auto seq = iso12_sequence(2);
  std::vector<Segment> segs{{0.25, seq[0]}, {0.75, seq[1]}};
  const auto custom = ControlSchedule::custom_piecewise(segs, 1.0);
  CHECK(custom.boundaries().back() == doctest::Approx(1.0));
  CHECK_THROWS(ControlSchedule::custom_piecewise({{0.5, seq[0]}}, 1.0));
  CHECK_THROWS(ControlSchedule::bangbang_pi(2, -1.0));
}

TEST_CASE("control kind names round trip") {
  for (auto k : {ControlKind::none, ControlKind::constant, ControlKind::bangbang_pi, ControlKind::bangbang_iso12,
                 ControlKind::custom_piecewise}) {
    CHECK(control_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS(control_kind_from_string("cpmg"));
}
