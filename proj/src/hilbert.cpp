// Copyright 2026 The lyapctl Authors
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

#include "lyapctl/hilbert.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "lyapctl/rng.hpp"

namespace lyapctl {

QubitSystem::QubitSystem(int n_qubits) : n_(n_qubits) {
  if (n_qubits < kMinQubits || n_qubits > kMaxQubits) {
    throw std::invalid_argument("QubitSystem: n_qubits must lie in [" + std::to_string(kMinQubits) + ", " +
                                std::to_string(kMaxQubits) + "], got " + std::to_string(n_qubits));
  }
}

Axis parse_axis(std::string_view label) {
  if (label == "x" || label == "X") return Axis::X;
  if (label == "y" || label == "Y") return Axis::Y;
  if (label == "z" || label == "Z") return Axis::Z;
  throw std::invalid_argument("invalid Pauli axis label '" + std::string(label) + "'");
}

char axis_label(Axis axis) { return "xyz"[static_cast<int>(axis)]; }

Matrix pauli(Axis axis) {
  Matrix s = Matrix::Zero(2, 2);
  switch (axis) {
    case Axis::X:
      s(0, 1) = 1.0;
      s(1, 0) = 1.0;
      break;
    case Axis::Y:
      s(0, 1) = cplx(0, -1);
      s(1, 0) = cplx(0, 1);
      break;
    case Axis::Z:
      s(0, 0) = 1.0;
      s(1, 1) = -1.0;
      break;
  }
  return s;
}

Matrix pauli(std::string_view label) { return pauli(parse_axis(label)); }

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Matrix embed_local(const Matrix& op, int site, const QubitSystem& sys) {
  if (op.rows() != 2 || op.cols() != 2) {
    throw std::invalid_argument("embed_local: operator must be 2x2");
  }
  if (site < 1 || site > sys.n_qubits()) {
    throw std::invalid_argument("embed_local: site " + std::to_string(site) + " outside [1, " +
                                std::to_string(sys.n_qubits()) + "]");
  }
  const Eigen::Index left = Eigen::Index{1} << (site - 1);
  const Eigen::Index right = Eigen::Index{1} << (sys.n_qubits() - site);
  return kron(kron(Matrix::Identity(left, left), op), Matrix::Identity(right, right));
}

Matrix tensor_product(std::span<const Matrix> factors) {
  if (factors.empty()) throw std::invalid_argument("tensor_product: no factors");
  Matrix out = factors.front();
  for (std::size_t k = 1; k < factors.size(); ++k) out = kron(out, factors[k]);
  return out;
}

bool is_hermitian(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = m.cwiseAbs().maxCoeff();
  const double err = (m - m.adjoint()).cwiseAbs().maxCoeff();
  return err <= rel_tol * (scale > 0 ? scale : 1.0);
}

Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

Matrix haar_su2(RngStream& rng) {
  Eigen::Vector4d q;
  double norm = 0;
  do {
    for (int k = 0; k < 4; ++k) q[k] = rng.normal();
    norm = q.norm();
  } while (norm < 1e-12);
  q /= norm;
  // q0 + i q3, q2 + i q1 parametrization of SU(2).
  Matrix u(2, 2);
  u(0, 0) = cplx(q[0], q[3]);
  u(0, 1) = cplx(q[2], q[1]);
  u(1, 0) = cplx(-q[2], q[1]);
  u(1, 1) = cplx(q[0], -q[3]);
  return u;
}

std::vector<Matrix> haar_local_unitaries(const QubitSystem& sys, RngStream& rng) {
  std::vector<Matrix> out;
  out.reserve(sys.n_qubits());
  for (int i = 0; i < sys.n_qubits(); ++i) out.push_back(haar_su2(rng));
  return out;
}

Matrix bloch_rotation(double angle, const Eigen::Vector3d& axis) {
  const double n = axis.norm();
  if (!(n > 0)) throw std::invalid_argument("bloch_rotation: zero axis");
  const Eigen::Vector3d u = axis / n;
  const Matrix generator = u[0] * pauli(Axis::X) + u[1] * pauli(Axis::Y) + u[2] * pauli(Axis::Z);
  return std::cos(angle / 2) * Matrix::Identity(2, 2) - cplx(0, std::sin(angle / 2)) * generator;
}

std::vector<std::uint32_t> duplicate_pairing_permutation(const QubitSystem& sys) {
  const int n = sys.n_qubits();
  const std::uint32_t d = 1u << n;
  std::vector<std::uint32_t> perm(static_cast<std::size_t>(d) * d);
  for (std::uint32_t a = 0; a < d; ++a) {
    for (std::uint32_t b = 0; b < d; ++b) {
      std::uint32_t paired = 0;
      for (int i = 0; i < n; ++i) {
        const int shift = n - 1 - i;  // qubit i+1 sits at bit shift
        const std::uint32_t ai = (a >> shift) & 1u;
        const std::uint32_t bi = (b >> shift) & 1u;
        paired |= ((ai << 1) | bi) << (2 * shift);
      }
      perm[static_cast<std::size_t>(a) * d + b] = paired;
    }
  }
  return perm;
}

std::vector<std::uint32_t> invert_permutation(std::span<const std::uint32_t> perm) {
  std::vector<std::uint32_t> inv(perm.size());
  for (std::uint32_t k = 0; k < perm.size(); ++k) inv[perm[k]] = k;
  return inv;
}

namespace {

int log2_exact(Eigen::Index dim) {
  int n = 0;
  while ((Eigen::Index{1} << n) < dim) ++n;
  if ((Eigen::Index{1} << n) != dim || n < 1) {
    throw std::invalid_argument("state dimension " + std::to_string(dim) + " is not a power of two");
  }
  return n;
}

}  // namespace

PureState PureState::from_amplitudes(Vector amplitudes) {
  log2_exact(amplitudes.size());
  if (std::abs(amplitudes.norm() - 1.0) > 1e-10) {
    throw std::invalid_argument("PureState: amplitudes not normalized");
  }
  return PureState(std::move(amplitudes));
}

PureState PureState::normalized(Vector amplitudes) {
  log2_exact(amplitudes.size());
  const double n = amplitudes.norm();
  if (!(n > 0) || !std::isfinite(n)) throw std::invalid_argument("PureState: zero or non-finite vector");
  return PureState(amplitudes / n);
}

PureState PureState::basis_state(const QubitSystem& sys, std::uint64_t label) {
  Vector v = Vector::Zero(sys.dim());
  if (label >= static_cast<std::uint64_t>(sys.dim())) throw std::invalid_argument("basis label out of range");
  v[static_cast<Eigen::Index>(label)] = 1.0;
  return PureState(std::move(v));
}

PureState PureState::uniform_product(const QubitSystem& sys, double alpha, double theta) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("product state: alpha outside [0, 1]");
  Vector single(2);
  single << std::sqrt(alpha), std::sqrt(1.0 - alpha) * std::polar(1.0, theta);
  Vector v = single;
  for (int i = 1; i < sys.n_qubits(); ++i) {
    Vector next(v.size() * 2);
    for (Eigen::Index k = 0; k < v.size(); ++k) next.segment(2 * k, 2) = v[k] * single;
    v = std::move(next);
  }
  return PureState::normalized(std::move(v));
}

int PureState::n_qubits() const { return log2_exact(amps_.size()); }

StateDiagnostics diagnose_state(const Matrix& rho) {
  StateDiagnostics out;
  out.hermiticity_error = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  out.trace_error = std::abs(rho.trace() - 1.0);
  const Matrix herm = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(herm, Eigen::EigenvaluesOnly);
  out.min_eigenvalue = es.eigenvalues().minCoeff();
  out.purity = (herm * herm).trace().real();
  return out;
}

PureState dominant_pure_state(const Matrix& rho) {
  const Matrix herm = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(herm);
  const Eigen::Index top = herm.rows() - 1;  // eigenvalues ascend
  return PureState::normalized(es.eigenvectors().col(top));
}

}  // namespace lyapctl
