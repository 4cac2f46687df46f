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

#include <random>

#include "doctest.h"
#include "forge/linalg.hpp"

using namespace forge;

namespace {

Matrix random_matrix(Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Matrix m(d, d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) m(i, j) = Complex(n(rng), n(rng));
  }
  return m;
}

Matrix random_hermitian(Index d, std::mt19937_64& rng) {
  const Matrix m = random_matrix(d, rng);
  return 0.5 * (m + m.adjoint());
}

Matrix random_state(Index d, std::mt19937_64& rng) {
  const Matrix g = random_matrix(d, rng);
  Matrix rho = g * g.adjoint();
  return rho / rho.trace();
}

}  // namespace

TEST_CASE("spin one half operators are half the Pauli matrices") {
  const auto s = spin_operators(0.5);
  Matrix px(2, 2), py(2, 2), pz(2, 2);
  px << 0, 1, 1, 0;
  py << 0, Complex(0, -1), Complex(0, 1), 0;
  pz << 1, 0, 0, -1;
  CHECK((s.x.matrix() - 0.5 * px).norm() < 1e-15);
  CHECK((s.y.matrix() - 0.5 * py).norm() < 1e-15);
  CHECK((s.z.matrix() - 0.5 * pz).norm() < 1e-15);
}

TEST_CASE("spin operators satisfy the angular momentum algebra") {
  for (double spin : {0.5, 1.0, 1.5, 2.0, 3.5}) {
    const auto s = spin_operators(spin);
    const Matrix& x = s.x.matrix();
    const Matrix& y = s.y.matrix();
    const Matrix& z = s.z.matrix();
    const Index d = x.rows();
    CHECK(d == static_cast<Index>(2 * spin + 1));
    CHECK((commutator(x, y) - kI * z).norm() < 1e-12);
    CHECK((commutator(y, z) - kI * x).norm() < 1e-12);
    CHECK((commutator(z, x) - kI * y).norm() < 1e-12);
    const Matrix casimir = x * x + y * y + z * z;
    CHECK((casimir - spin * (spin + 1) * Matrix::Identity(d, d)).norm() < 1e-12);
  }
}

TEST_CASE("vec and unvec are inverse and column stacked") {
  std::mt19937_64 rng(1);
  const Matrix x = random_matrix(3, rng);
  const Vector v = vec(x);
  CHECK(v(1) == x(1, 0));
  CHECK(v(3) == x(0, 1));
  CHECK((unvec(v, 3) - x).norm() == 0.0);
}

TEST_CASE("sandwich and ad act as their defining maps") {
  std::mt19937_64 rng(2);
  for (Index d : {2, 3, 5}) {
    const Matrix a = random_matrix(d, rng);
    const Matrix b = random_matrix(d, rng);
    const Matrix x = random_matrix(d, rng);
    const Matrix h = random_hermitian(d, rng);
    CHECK((SuperOperator::sandwich(a, b).apply(x) - a * x * b).norm() < 1e-12);
    CHECK((ad(h).apply(x) - (h * x - x * h)).norm() < 1e-12);
    CHECK((superop_compose(ad(h), ad(h)).apply(x) - commutator(h, commutator(h, x))).norm() < 1e-10);
    CHECK((kron(a, b).block(0, 0, d, d) - a(0, 0) * b).norm() < 1e-14);
  }
}

TEST_CASE("exponential of ad generates unitary conjugation") {
  // exp(-i ad(S_z) t) X = e^{-i S_z t} X e^{i S_z t}; for S = 1/2 the
  // off-diagonal element picks up e^{-i t}.
  const auto s = spin_operators(0.5);
  const double t = 0.731;
  const SuperOperator u = superop_exp(ad(s.z) * Complex(0, -1), t);
  Matrix x = Matrix::Zero(2, 2);
  x(0, 1) = 1.0;
  const Matrix y = u.apply(x);
  CHECK(std::abs(y(0, 1) - std::exp(Complex(0, -t))) < 1e-13);
  CHECK(std::abs(y(1, 0)) < 1e-14);
}

TEST_CASE("matrix_exp agrees with the closed form for a Pauli rotation") {
  const auto s = spin_operators(0.5);
  const double th = 1.234;
  const Matrix u = matrix_exp(Complex(0, -th) * 2.0 * s.x.matrix());
  Matrix expected(2, 2);
  expected << std::cos(th), Complex(0, -std::sin(th)), Complex(0, -std::sin(th)), std::cos(th);
  CHECK((u - expected).norm() < 1e-14);
}

TEST_CASE("density matrices are validated") {
  CHECK_THROWS(DensityMatrix(Matrix::Identity(2, 2)));  // trace 2
  Matrix nonherm = Matrix::Zero(2, 2);
  nonherm(0, 0) = 1.0;
  nonherm(0, 1) = 0.3;
  CHECK_THROWS(DensityMatrix(nonherm));
  CHECK(DensityMatrix::maximally_mixed(4).purity() == doctest::Approx(0.25));
  Vector psi(2);
  psi << 1.0 / std::sqrt(2.0), Complex(0, 1) / std::sqrt(2.0);
  CHECK(DensityMatrix::pure(psi).purity() == doctest::Approx(1.0));
}

TEST_CASE("Choi matrix of the identity and the transpose") {
  const auto id = SuperOperator::identity(3);
  const Matrix c = choi_matrix(id);
  Eigen::SelfAdjointEigenSolver<Matrix> es(c);
  // |Omega><Omega| with <Omega|Omega> = d
  CHECK(es.eigenvalues()(8) == doctest::Approx(3.0));
  CHECK(std::abs(es.eigenvalues()(0)) < 1e-12);
  CHECK(is_completely_positive(id));

  Matrix t = Matrix::Zero(4, 4);
  for (Index i = 0; i < 2; ++i) {
    for (Index j = 0; j < 2; ++j) t(i + 2 * j, j + 2 * i) = 1.0;
  }
  const SuperOperator transpose(2, t);
  std::mt19937_64 rng(3);
  const Matrix x = random_matrix(2, rng);
  CHECK((transpose.apply(x) - x.transpose()).norm() < 1e-15);
  CHECK(min_choi_eigenvalue(transpose) == doctest::Approx(-1.0));
  CHECK_FALSE(is_completely_positive(transpose));
}

TEST_CASE("group_spectrum merges within tolerance and counts multiplicity") {
  const std::vector<Complex> ev{1.0, 1.0 + 1e-12, 2.0, -1.0, 2.0 - 1e-11, 2.0};
  const auto g = group_spectrum(ev, 1e-8);
  REQUIRE(g.size() == 3);
  int total = 0;
  for (const auto& grp : g) total += grp.multiplicity;
  CHECK(total == 6);
}

TEST_CASE("JSON round trips are exact") {
  std::mt19937_64 rng(4);
  const Matrix m = random_matrix(3, rng);
  CHECK((matrix_from_json(matrix_to_json(m)) - m).norm() == 0.0);
  const SuperOperator s = ad(random_hermitian(2, rng));
  const SuperOperator back = superop_from_json(superop_to_json(s));
  CHECK(back.dim() == 2);
  CHECK((back.matrix() - s.matrix()).norm() == 0.0);
}

TEST_CASE("property: dephasing by any Hermitian operator is a trace preserving CP semigroup") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Index d = 2 + trial % 3;
    const SuperOperator adh = ad(random_hermitian(d, rng));
    const SuperOperator l = adh * adh * Complex(-0.5, 0.0);
    const Matrix rho = random_state(d, rng);
    CHECK(std::abs(l.apply(rho).trace()) < 1e-12);
    CHECK((l.apply(Matrix::Identity(d, d))).norm() < 1e-12);
    for (double t : {0.01, 0.5, 3.0}) CHECK(min_choi_eigenvalue(superop_exp(l, t)) > -1e-10);
  }
}

TEST_CASE("property: spectra of unitary conjugation generators are purely imaginary") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const SuperOperator g = ad(random_hermitian(3, rng)) * Complex(0, -1);
    for (const auto& ev : superop_spectrum(g)) CHECK(std::abs(ev.real()) < 1e-10);
    CHECK(is_normal(g.matrix()));
  }
}
