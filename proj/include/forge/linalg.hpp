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

#include <complex>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

namespace forge {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;

inline constexpr Complex kI{0.0, 1.0};

/// Hermitian d x d matrix. Deviations from Hermiticity up to 1e-12 are
/// symmetrized away at construction; anything larger throws.
class HermitianOperator {
 public:
  HermitianOperator() = default;
  explicit HermitianOperator(Matrix m);

  static HermitianOperator zero(Index dim);
  static HermitianOperator identity(Index dim);

  const Matrix& matrix() const { return m_; }
  Index dim() const { return m_.rows(); }

  HermitianOperator operator+(const HermitianOperator& o) const;
  HermitianOperator operator-(const HermitianOperator& o) const;
  HermitianOperator operator*(double a) const;
  friend HermitianOperator operator*(double a, const HermitianOperator& h) { return h * a; }

 private:
  Matrix m_;
};

/// Positive, unit-trace Hermitian matrix.
class DensityMatrix {
 public:
  explicit DensityMatrix(Matrix m);

  static DensityMatrix maximally_mixed(Index dim);
  static DensityMatrix pure(const Vector& psi);

  const Matrix& matrix() const { return m_; }
  Index dim() const { return m_.rows(); }
  double purity() const;

 private:
  Matrix m_;
};

/// Linear map on d x d operators, stored as a d^2 x d^2 matrix acting on
/// column-stacked operators: vec(X)[i + d*j] = X(i, j).
class SuperOperator {
 public:
  SuperOperator() = default;
  SuperOperator(Index dim, Matrix m);

  static SuperOperator zero(Index dim);
  static SuperOperator identity(Index dim);
  /// The map X -> A X B.
  static SuperOperator sandwich(const Matrix& a, const Matrix& b);

  const Matrix& matrix() const { return m_; }
  Index dim() const { return dim_; }

  Matrix apply(const Matrix& x) const;

  SuperOperator operator+(const SuperOperator& o) const;
  SuperOperator operator-(const SuperOperator& o) const;
  SuperOperator operator*(const SuperOperator& o) const;
  SuperOperator operator*(Complex a) const;
  SuperOperator& operator+=(const SuperOperator& o);
  friend SuperOperator operator*(Complex a, const SuperOperator& s) { return s * a; }

 private:
  Index dim_ = 0;
  Matrix m_;
};

struct SpinOperators {
  HermitianOperator x;
  HermitianOperator y;
  HermitianOperator z;
};

/// Angular momentum matrices for spin S in the |S, m> basis ordered
/// m = S, S-1, ..., -S. Throws unless 2S is a positive integer.
SpinOperators spin_operators(double spin);

Vector vec(const Matrix& x);
Matrix unvec(const Vector& v, Index dim);
Matrix kron(const Matrix& a, const Matrix& b);
Matrix commutator(const Matrix& a, const Matrix& b);
Matrix anticommutator(const Matrix& a, const Matrix& b);

/// ad(H): X -> HX - XH. Under column stacking this is 1 (x) H - H^T (x) 1.
SuperOperator ad(const HermitianOperator& h);
/// Same for a general (non-Hermitian) matrix, e.g. a Fourier coefficient.
SuperOperator ad(const Matrix& h);

SuperOperator superop_compose(const SuperOperator& a, const SuperOperator& b);

/// exp(scale * M). Uses a Schur decomposition when M is normal
/// (||MM^dag - M^dag M|| < 1e-10) and Pade scaling-and-squaring otherwise.
SuperOperator superop_exp(const SuperOperator& m, double scale = 1.0);

/// Plain dense matrix exponential with the same dispatch.
Matrix matrix_exp(const Matrix& m);

/// All d^2 eigenvalues with multiplicity, sorted by (real, imag).
std::vector<Complex> superop_spectrum(const SuperOperator& m);

struct SpectralGroup {
  Complex value;
  int multiplicity;
};
/// Groups eigenvalues that lie within tol of each other.
std::vector<SpectralGroup> group_spectrum(const std::vector<Complex>& eigenvalues,
                                          double tol = 1e-8);

/// Choi matrix sum_ij E_ij (x) M(E_ij); the map is CP iff it is PSD.
Matrix choi_matrix(const SuperOperator& m);
double min_choi_eigenvalue(const SuperOperator& m);
bool is_completely_positive(const SuperOperator& m, double tol = 1e-9);

bool all_finite(const Matrix& m);
bool is_normal(const Matrix& m, double tol = 1e-10);

// JSON layout: {"dim": n, "data": [re00, im00, re01, im01, ...]} for an
// n x n matrix, row-major with interleaved (re, im). Super-operators add
// "hilbert_dim": d with dim = d^2.
nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);
nlohmann::json superop_to_json(const SuperOperator& s);
SuperOperator superop_from_json(const nlohmann::json& j);

}  // namespace forge
