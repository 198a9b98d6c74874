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

#include "lyapctl/entanglement.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lyapctl {
namespace {

constexpr double kImagTolerance = 1e-9;

double checked_real(cplx value, const char* what) {
  if (std::abs(value.imag()) > kImagTolerance * std::max(1.0, std::abs(value.real()))) {
    throw std::runtime_error(std::string(what) + ": imaginary residue " + std::to_string(value.imag()) +
                             " exceeds tolerance");
  }
  return value.real();
}

void require_square(const Matrix& m, Eigen::Index d, const char* what) {
  if (m.rows() != d || m.cols() != d) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (expected " + std::to_string(d) + "x" +
                                std::to_string(d) + ", got " + std::to_string(m.rows()) + "x" +
                                std::to_string(m.cols()) + ")");
  }
}

// Tr(A B) without forming the product.
cplx trace_product(const Matrix& a, const Matrix& b) { return (a.transpose().array() * b.array()).sum(); }

int qubits_of(const Matrix& rho) {
  int n = 0;
  while ((Eigen::Index{1} << n) < rho.rows()) ++n;
  return n;
}

}  // namespace

double concurrence_normalization(int n_qubits) { return std::pow(2.0, 1.0 - 0.5 * n_qubits); }

double antisymmetric_coefficient(int n_qubits) { return 4.0 * (1.0 - std::pow(2.0, 1 - n_qubits)); }

// ---------------------------------------------------------------------------
// Dense operator

ConcurrenceOperator build_concurrence_operator(const QubitSystem& sys) {
  const int n = sys.n_qubits();
  if (n > 5) throw std::invalid_argument("build_concurrence_operator: dense form limited to N <= 5");
  const Eigen::Index d = sys.dim();
  const Eigen::Index dd = d * d;

  // Two-copy swap on one qubit pair, basis |a b>, a slow.
  Matrix swap4 = Matrix::Zero(4, 4);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) swap4(b * 2 + a, a * 2 + b) = 1.0;
  const Matrix id4 = Matrix::Identity(4, 4);
  const Matrix p_plus = 0.5 * (id4 + swap4);
  const Matrix p_minus = 0.5 * (id4 - swap4);

  ConcurrenceOperator op;
  op.n_qubits = n;
  op.normalization = concurrence_normalization(n);

  Matrix v_pair = Matrix::Zero(dd, dd);
  for (unsigned pattern = 1; pattern < (1u << n); ++pattern) {  // bit k set: antisymmetric on qubit k+1
    if (__builtin_popcount(pattern) % 2 != 0) continue;
    Matrix term = (pattern & 1u) ? p_minus : p_plus;
    for (int k = 1; k < n; ++k) term = kron(term, (pattern >> k) & 1u ? p_minus : p_plus);
    v_pair += term;
    ++op.n_patterns;
  }
  v_pair *= 4.0;

  const auto perm = duplicate_pairing_permutation(sys);
  op.v.resize(dd, dd);
  for (Eigen::Index r = 0; r < dd; ++r)
    for (Eigen::Index c = 0; c < dd; ++c) op.v(r, c) = v_pair(perm[r], perm[c]);

  Matrix global_swap = Matrix::Zero(dd, dd);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b) global_swap(b * d + a, a * d + b) = 1.0;
  op.p_minus = 0.5 * (Matrix::Identity(dd, dd) - global_swap);
  op.a = op.v - antisymmetric_coefficient(n) * op.p_minus;
  return op;
}

Matrix ConcurrenceOperator::contract(const Matrix& q) const {
  const Eigen::Index d = Eigen::Index{1} << n_qubits;
  require_square(q, d, "ConcurrenceOperator::contract");
  // M_{ca} = sum_{b,e} Q_{be} A_{(c e),(a b)}
  Matrix m = Matrix::Zero(d, d);
  for (Eigen::Index c = 0; c < d; ++c)
    for (Eigen::Index a = 0; a < d; ++a) {
      cplx acc = 0;
      for (Eigen::Index b = 0; b < d; ++b)
        for (Eigen::Index e = 0; e < d; ++e) acc += q(b, e) * this->a(c * d + e, a * d + b);
      m(c, a) = acc;
    }
  return normalization * m;
}

// ---------------------------------------------------------------------------
// Matrix-free kernel

ConcurrenceKernel::ConcurrenceKernel(const QubitSystem& sys)
    : n_(sys.n_qubits()), scale_(concurrence_normalization(n_)), antisym_(antisymmetric_coefficient(n_)) {}

Matrix ConcurrenceKernel::subsystem_sum(const Matrix& q) const {
  // Applies (id + Tr_i(.) (x) 1_i) on every qubit in turn: the sum over all
  // subsets T of Tr_{not T}(Q) (x) 1_{not T}.
  Matrix x = q;
  const Eigen::Index d = dim();
  for (int i = 0; i < n_; ++i) {
    const Eigen::Index mask = Eigen::Index{1} << (n_ - 1 - i);
    Matrix next = x;
    for (Eigen::Index a = 0; a < d; ++a) {
      const Eigen::Index a0 = a & ~mask;
      for (Eigen::Index b = 0; b < d; ++b) {
        if (((a ^ b) & mask) != 0) continue;
        const Eigen::Index b0 = b & ~mask;
        next(a, b) += x(a0, b0) + x(a0 | mask, b0 | mask);
      }
    }
    x = std::move(next);
  }
  return x;
}

Matrix ConcurrenceKernel::contract_v(const Matrix& q) const {
  require_square(q, dim(), "ConcurrenceKernel::contract");
  const cplx tr = q.trace();
  Matrix m = 2.0 * q - std::pow(2.0, 2 - n_) * subsystem_sum(q);
  m.diagonal().array() += 2.0 * tr;
  return scale_ * m;
}

Matrix ConcurrenceKernel::contract(const Matrix& q) const {
  require_square(q, dim(), "ConcurrenceKernel::contract");
  const cplx tr = q.trace();
  // V part: 2 (Tr Q 1 + Q) - 2^(2-N) Phi(Q); P_- part: (Tr Q 1 - Q) / 2.
  Matrix m = (2.0 + 0.5 * antisym_) * q - std::pow(2.0, 2 - n_) * subsystem_sum(q);
  m.diagonal().array() += (2.0 - 0.5 * antisym_) * tr;
  return scale_ * m;
}

cplx ConcurrenceKernel::bilinear(const Matrix& p, const Matrix& q) const {
  require_square(p, dim(), "ConcurrenceKernel::bilinear");
  return trace_product(p, contract(q));
}

OperatorBasis product_pauli_basis(const QubitSystem& sys) {
  const int n = sys.n_qubits();
  const Matrix paulis[4] = {Matrix::Identity(2, 2), pauli(Axis::X), pauli(Axis::Y), pauli(Axis::Z)};
  const char names[4] = {'I', 'X', 'Y', 'Z'};
  OperatorBasis basis;
  std::size_t total = std::size_t{1} << (2 * n);
  for (std::size_t code = 1; code < total; ++code) {
    std::string label(n, 'I');
    Matrix op;
    for (int i = 0; i < n; ++i) {
      const int k = static_cast<int>((code >> (2 * (n - 1 - i))) & 3u);
      label[i] = names[k];
      op = i == 0 ? paulis[k] : kron(op, paulis[k]);
    }
    basis.labels.push_back(std::move(label));
    basis.operators.push_back(std::move(op));
  }
  return basis;
}

// ---------------------------------------------------------------------------
// Functionals

double tau(const Matrix& rho, const ConcurrenceKernel& kernel) {
  require_square(rho, kernel.dim(), "tau");
  return checked_real(trace_product(rho, kernel.contract(rho)), "tau");
}

double tau(const Matrix& rho, const ConcurrenceOperator& op) {
  return checked_real(trace_product(rho, op.contract(rho)), "tau");
}

double pure_concurrence(const PureState& psi, const ConcurrenceKernel& kernel) {
  const Matrix proj = psi.projector();
  require_square(proj, kernel.dim(), "pure_concurrence");
  const double radicand = checked_real(trace_product(proj, kernel.contract_v(proj)), "pure_concurrence");
  if (radicand < -1e-10) {
    throw std::runtime_error("pure_concurrence: negative radicand " + std::to_string(radicand));
  }
  return std::sqrt(std::max(0.0, radicand));
}

double tau_dot(const Matrix& rho, const Matrix& h_total, const DephasingSpec& diss, const ConcurrenceKernel& kernel) {
  require_square(rho, kernel.dim(), "tau_dot");
  require_square(h_total, kernel.dim(), "tau_dot");
  const Matrix rho_dot = lindblad_rhs(rho, h_total, diss);
  return checked_real(2.0 * trace_product(rho_dot, kernel.contract(rho)), "tau_dot");
}

double tau_ddot(const Matrix& rho, const Matrix& h_sys, const LocalField& h, const DephasingSpec& diss,
                const ConcurrenceKernel& kernel) {
  require_square(rho, kernel.dim(), "tau_ddot");
  require_square(h_sys, kernel.dim(), "tau_ddot");
  const QubitSystem sys(qubits_of(rho));
  const Matrix h_total = h_sys + local_field_hamiltonian(h, sys);
  const Matrix rho_dot = lindblad_rhs(rho, h_total, diss);
  const Matrix rho_ddot = lindblad_rhs(rho_dot, h_total, diss);
  const cplx value =
      2.0 * (trace_product(rho_ddot, kernel.contract(rho)) + trace_product(rho_dot, kernel.contract(rho_dot)));
  return checked_real(value, "tau_ddot");
}

double natural_curvature(const Matrix& rho, const Matrix& h_sys, const DephasingSpec& diss,
                         const ConcurrenceKernel& kernel) {
  require_square(rho, kernel.dim(), "natural_curvature");
  require_square(h_sys, kernel.dim(), "natural_curvature");
  const cplx i(0, 1);
  const Matrix c = commutator(h_sys, rho);  // [H, rho]
  const Matrix d = diss.apply(rho);         // D(rho)
  const Matrix single = -commutator(h_sys, c) - i * commutator(h_sys, d) - i * diss.apply(c) + diss.apply(d);
  cplx value = kernel.bilinear(single, rho);
  value += -kernel.bilinear(c, c) - i * kernel.bilinear(c, d) - i * kernel.bilinear(d, c) + kernel.bilinear(d, d);
  return checked_real(2.0 * value, "natural_curvature");
}

ControlGradient gradient_x(const Matrix& rho, const Matrix& h_sys, const DephasingSpec& diss,
                           const ConcurrenceKernel& kernel) {
  const Eigen::Index d = kernel.dim();
  require_square(rho, d, "gradient_x");
  require_square(h_sys, d, "gradient_x");
  const int n = kernel.n_qubits();
  const cplx i(0, 1);

  const Matrix m = kernel.contract(rho);
  const Matrix rho_dot = lindblad_rhs(rho, h_sys, diss);  // uncontrolled rate
  const Matrix m_dot = kernel.contract(rho_dot);

  // G = -2i [rho_dot, M] + [rho, Z],  Z = -2 [M, H] - 2i D(M) - 4i M(rho_dot)
  Matrix z = -2.0 * commutator(m, h_sys) - 4.0 * i * m_dot;
  if (diss.active()) z -= 2.0 * i * diss.apply(m);
  const Matrix g = -2.0 * i * commutator(rho_dot, m) + commutator(rho, z);

  ControlGradient out{Eigen::MatrixX3d::Zero(n, 3)};
  for (int q = 0; q < n; ++q) {
    const Eigen::Index mask = Eigen::Index{1} << (n - 1 - q);
    cplx r00 = 0, r01 = 0, r10 = 0, r11 = 0;  // partial trace of G onto qubit q
    for (Eigen::Index a = 0; a < d; ++a) {
      if (a & mask) continue;
      const Eigen::Index b = a | mask;
      r00 += g(a, a);
      r01 += g(a, b);
      r10 += g(b, a);
      r11 += g(b, b);
    }
    out.x(q, 0) = checked_real(r01 + r10, "gradient_x");
    out.x(q, 1) = checked_real(i * r01 - i * r10, "gradient_x");
    out.x(q, 2) = checked_real(r00 - r11, "gradient_x");
  }
  return out;
}

GeneralGradient gradient_y(const Matrix& rho, const OperatorBasis& basis, const ConcurrenceKernel& kernel) {
  const Eigen::Index d = kernel.dim();
  require_square(rho, d, "gradient_y");
  if (basis.labels.size() != basis.operators.size()) {
    throw std::invalid_argument("gradient_y: label/operator count mismatch");
  }
  const Matrix m = kernel.contract(rho);
  GeneralGradient out;
  out.labels = basis.labels;
  out.y.resize(static_cast<Eigen::Index>(basis.operators.size()));
  for (std::size_t k = 0; k < basis.operators.size(); ++k) {
    const Matrix& beta = basis.operators[k];
    require_square(beta, d, "gradient_y");
    if (!is_hermitian(beta, 1e-12)) {
      throw std::invalid_argument("gradient_y: basis element '" + basis.labels[k] + "' is not Hermitian");
    }
    const Matrix generator = cplx(0, -1) * commutator(beta, rho);
    out.y[static_cast<Eigen::Index>(k)] = checked_real(2.0 * trace_product(generator, m), "gradient_y");
  }
  return out;
}

}  // namespace lyapctl
