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

#include "forge/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

namespace forge {

namespace {

constexpr double kHermitianTol = 1e-12;

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw std::invalid_argument(std::string(what) + ": matrix must be square and non-empty");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// HermitianOperator

HermitianOperator::HermitianOperator(Matrix m) : m_(std::move(m)) {
  require_square(m_, "HermitianOperator");
  if (!all_finite(m_)) throw std::invalid_argument("HermitianOperator: non-finite entries");
  const double dev = (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
  if (dev > kHermitianTol) {
    throw std::invalid_argument("HermitianOperator: matrix is not Hermitian (deviation " +
                                std::to_string(dev) + ")");
  }
  m_ = 0.5 * (m_ + m_.adjoint()).eval();
}

HermitianOperator HermitianOperator::zero(Index dim) { return HermitianOperator(Matrix::Zero(dim, dim)); }

HermitianOperator HermitianOperator::identity(Index dim) {
  return HermitianOperator(Matrix::Identity(dim, dim));
}

HermitianOperator HermitianOperator::operator+(const HermitianOperator& o) const {
  return HermitianOperator(m_ + o.m_);
}

HermitianOperator HermitianOperator::operator-(const HermitianOperator& o) const {
  return HermitianOperator(m_ - o.m_);
}

HermitianOperator HermitianOperator::operator*(double a) const { return HermitianOperator(a * m_); }

// ---------------------------------------------------------------------------
// DensityMatrix

DensityMatrix::DensityMatrix(Matrix m) : m_(std::move(m)) {
  require_square(m_, "DensityMatrix");
  if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > kHermitianTol) {
    throw std::invalid_argument("DensityMatrix: not Hermitian");
  }
  m_ = 0.5 * (m_ + m_.adjoint()).eval();
  if (std::abs(m_.trace() - 1.0) > 1e-12) throw std::invalid_argument("DensityMatrix: trace != 1");
  Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10) {
    throw std::invalid_argument("DensityMatrix: negative eigenvalue");
  }
}

DensityMatrix DensityMatrix::maximally_mixed(Index dim) {
  return DensityMatrix(Matrix::Identity(dim, dim) / static_cast<double>(dim));
}

DensityMatrix DensityMatrix::pure(const Vector& psi) {
  const Vector n = psi / psi.norm();
  return DensityMatrix(n * n.adjoint());
}

double DensityMatrix::purity() const { return (m_ * m_).trace().real(); }

// ---------------------------------------------------------------------------
// SuperOperator

SuperOperator::SuperOperator(Index dim, Matrix m) : dim_(dim), m_(std::move(m)) {
  if (dim <= 0 || m_.rows() != dim * dim || m_.cols() != dim * dim) {
    throw std::invalid_argument("SuperOperator: expected a d^2 x d^2 matrix");
  }
}

SuperOperator SuperOperator::zero(Index dim) { return {dim, Matrix::Zero(dim * dim, dim * dim)}; }

SuperOperator SuperOperator::identity(Index dim) {
  return {dim, Matrix::Identity(dim * dim, dim * dim)};
}

SuperOperator SuperOperator::sandwich(const Matrix& a, const Matrix& b) {
  // vec(A X B) = (B^T (x) A) vec(X)
  return {a.rows(), kron(b.transpose(), a)};
}

Matrix SuperOperator::apply(const Matrix& x) const {
  if (x.rows() != dim_ || x.cols() != dim_) throw std::invalid_argument("SuperOperator::apply: dimension mismatch");
  return unvec(m_ * vec(x), dim_);
}

SuperOperator SuperOperator::operator+(const SuperOperator& o) const {
  if (o.dim_ != dim_) throw std::invalid_argument("SuperOperator: dimension mismatch");
  return {dim_, m_ + o.m_};
}

SuperOperator SuperOperator::operator-(const SuperOperator& o) const {
  if (o.dim_ != dim_) throw std::invalid_argument("SuperOperator: dimension mismatch");
  return {dim_, m_ - o.m_};
}

SuperOperator SuperOperator::operator*(const SuperOperator& o) const { return superop_compose(*this, o); }

SuperOperator SuperOperator::operator*(Complex a) const { return {dim_, a * m_}; }

SuperOperator& SuperOperator::operator+=(const SuperOperator& o) {
  if (dim_ == 0) return *this = o;
  if (o.dim_ != dim_) throw std::invalid_argument("SuperOperator: dimension mismatch");
  m_ += o.m_;
  return *this;
}

// ---------------------------------------------------------------------------
// Free functions

SpinOperators spin_operators(double spin) {
  const double twice = 2.0 * spin;
  const long n2 = std::lround(twice);
  if (!(spin > 0.0) || std::abs(twice - static_cast<double>(n2)) > 1e-12) {
    throw std::invalid_argument("spin_operators: S must be a positive half-integer");
  }
  const Index d = n2 + 1;
  Matrix sz = Matrix::Zero(d, d);
  Matrix sp = Matrix::Zero(d, d);  // S+ |m> = sqrt(S(S+1) - m(m+1)) |m+1>
  for (Index k = 0; k < d; ++k) {
    const double m = spin - static_cast<double>(k);
    sz(k, k) = m;
    if (k > 0) sp(k - 1, k) = std::sqrt(spin * (spin + 1.0) - m * (m + 1.0));
  }
  const Matrix sm = sp.adjoint();
  return {HermitianOperator(0.5 * (sp + sm)), HermitianOperator(-0.5 * kI * (sp - sm)),
          HermitianOperator(sz)};
}

Vector vec(const Matrix& x) { return Eigen::Map<const Vector>(x.data(), x.size()); }

Matrix unvec(const Vector& v, Index dim) { return Eigen::Map<const Matrix>(v.data(), dim, dim); }

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

Matrix anticommutator(const Matrix& a, const Matrix& b) { return a * b + b * a; }

SuperOperator ad(const Matrix& h) {
  require_square(h, "ad");
  const Index d = h.rows();
  const Matrix id = Matrix::Identity(d, d);
  return {d, kron(id, h) - kron(h.transpose(), id)};
}

SuperOperator ad(const HermitianOperator& h) { return ad(h.matrix()); }

SuperOperator superop_compose(const SuperOperator& a, const SuperOperator& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("superop_compose: dimension mismatch");
  return {a.dim(), a.matrix() * b.matrix()};
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

bool is_normal(const Matrix& m, double tol) {
  return (m * m.adjoint() - m.adjoint() * m).norm() < tol;
}

Matrix matrix_exp(const Matrix& m) {
  require_square(m, "matrix_exp");
  if (!all_finite(m)) throw std::invalid_argument("matrix_exp: non-finite entries");
  if (is_normal(m)) {
    Eigen::ComplexSchur<Matrix> schur(m);
    const Matrix& u = schur.matrixU();
    const Vector diag = schur.matrixT().diagonal().array().exp();
    return u * diag.asDiagonal() * u.adjoint();
  }
  return m.exp();
}

SuperOperator superop_exp(const SuperOperator& m, double scale) {
  return {m.dim(), matrix_exp(scale * m.matrix())};
}

std::vector<Complex> superop_spectrum(const SuperOperator& m) {
  const Matrix& a = m.matrix();
  if (!all_finite(a)) throw std::invalid_argument("superop_spectrum: non-finite entries");
  std::vector<Complex> ev;
  ev.reserve(static_cast<std::size_t>(a.rows()));
  if ((a - a.adjoint()).cwiseAbs().maxCoeff() < 1e-12) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.adjoint()), Eigen::EigenvaluesOnly);
    for (Index i = 0; i < es.eigenvalues().size(); ++i) ev.emplace_back(es.eigenvalues()(i), 0.0);
  } else {
    Eigen::ComplexEigenSolver<Matrix> es(a, false);
    for (Index i = 0; i < es.eigenvalues().size(); ++i) ev.push_back(es.eigenvalues()(i));
  }
  std::sort(ev.begin(), ev.end(), [](Complex x, Complex y) {
    return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
  });
  return ev;
}

std::vector<SpectralGroup> group_spectrum(const std::vector<Complex>& eigenvalues, double tol) {
  std::vector<SpectralGroup> groups;
  std::vector<bool> used(eigenvalues.size(), false);
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    if (used[i]) continue;
    SpectralGroup g{eigenvalues[i], 0};
    Complex sum = 0.0;
    for (std::size_t k = i; k < eigenvalues.size(); ++k) {
      if (!used[k] && std::abs(eigenvalues[k] - eigenvalues[i]) < tol) {
        used[k] = true;
        sum += eigenvalues[k];
        ++g.multiplicity;
      }
    }
    g.value = sum / static_cast<double>(g.multiplicity);
    groups.push_back(g);
  }
  return groups;
}

Matrix choi_matrix(const SuperOperator& m) {
  const Index d = m.dim();
  Matrix choi = Matrix::Zero(d * d, d * d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) {
      // vec(E_ij) is the unit vector at i + d*j, so M(E_ij) is a column of M.
      const Matrix image = unvec(m.matrix().col(i + d * j), d);
      choi.block(i * d, j * d, d, d) = image;
    }
  }
  return choi;
}

double min_choi_eigenvalue(const SuperOperator& m) {
  const Matrix c = choi_matrix(m);
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (c + c.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool is_completely_positive(const SuperOperator& m, double tol) { return min_choi_eigenvalue(m) >= -tol; }

nlohmann::json matrix_to_json(const Matrix& m) {
  require_square(m, "matrix_to_json");
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(2 * m.size()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      data.push_back(m(i, j).real());
      data.push_back(m(i, j).imag());
    }
  }
  return {{"dim", m.rows()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const auto n = j.at("dim").get<Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (n <= 0 || static_cast<Index>(data.size()) != 2 * n * n) {
    throw std::invalid_argument("matrix_from_json: data length does not match dim");
  }
  Matrix m(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < n; ++k) {
      const auto idx = static_cast<std::size_t>(2 * (i * n + k));
      m(i, k) = Complex(data[idx], data[idx + 1]);
    }
  }
  return m;
}

nlohmann::json superop_to_json(const SuperOperator& s) {
  auto j = matrix_to_json(s.matrix());
  j["hilbert_dim"] = s.dim();
  return j;
}

SuperOperator superop_from_json(const nlohmann::json& j) {
  return {j.at("hilbert_dim").get<Index>(), matrix_from_json(j)};
}

}  // namespace forge
