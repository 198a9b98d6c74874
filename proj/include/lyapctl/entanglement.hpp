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

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lyapctl/dynamics.hpp"
#include "lyapctl/hilbert.hpp"

namespace lyapctl {

/// Normalization applied to Tr[(rho (x) rho) A] so that a single Bell pair
/// carries 1/2 and the optimal four-qubit state carries 1 at N = 4 while the
/// two-qubit value is the squared Wootters concurrence: 2^(1 - N/2).
double concurrence_normalization(int n_qubits);

/// Coefficient of the global antisymmetric projector in A: 4 (1 - 2^(1-N)).
double antisymmetric_coefficient(int n_qubits);

/// Dense duplicate-space operators on H (x) H (global ordering: first copy slow).
///
/// V = 4 sum_s P_{s_1} (x) ... (x) P_{s_N} over sign patterns with an even,
/// non-zero number of antisymmetric factors; A = V - 4 (1 - 2^(1-N)) P_-.
/// The matrices are unnormalized; `normalization` scales every expectation.
/// Materialized only for N <= 5 (A is d^2 x d^2).
struct ConcurrenceOperator {
  int n_qubits = 0;
  Matrix a;
  Matrix v;
  Matrix p_minus;
  double normalization = 1.0;
  std::size_t n_patterns = 0;

  /// Contraction over the second copy: Tr[(P (x) Q) A] * normalization == Tr[P * contract(Q)].
  Matrix contract(const Matrix& q) const;
};

ConcurrenceOperator build_concurrence_operator(const QubitSystem& sys);

/// Matrix-free form of the same operator.
///
/// Expanding the subsystem projectors in partial swaps gives
///   V = 2 (1 + S) - 2^(2-N) sum_T S_T,
/// and every partial swap contracts to a partial trace, so contract() costs
/// O(N d^2) instead of O(d^4).
class ConcurrenceKernel {
 public:
  explicit ConcurrenceKernel(const QubitSystem& sys);

  int n_qubits() const { return n_; }
  Eigen::Index dim() const { return Eigen::Index{1} << n_; }
  double normalization() const { return scale_; }

  /// Normalized Tr[(P (x) Q) A] == Tr[P * contract(Q)].
  Matrix contract(const Matrix& q) const;
  /// Same contraction against V only (pure-state measure).
  Matrix contract_v(const Matrix& q) const;
  /// Normalized Tr[(P (x) Q) A]; symmetric in P and Q.
  cplx bilinear(const Matrix& p, const Matrix& q) const;

 private:
  Matrix subsystem_sum(const Matrix& q) const;

  int n_;
  double scale_;
  double antisym_;
};

/// Gradient of tau-double-dot with respect to the local field amplitudes,
/// one row per qubit in (x, y, z) order.
struct ControlGradient {
  Eigen::MatrixX3d x;

  int n_qubits() const { return static_cast<int>(x.rows()); }
  double qubit_norm(int i) const { return x.row(i).norm(); }
};

/// Gradient of tau-dot over an arbitrary Hermitian operator basis.
struct GeneralGradient {
  std::vector<std::string> labels;
  Eigen::VectorXd y;
};

/// All 4^N - 1 non-identity Pauli strings, labelled like "XIZI".
struct OperatorBasis {
  std::vector<std::string> labels;
  std::vector<Matrix> operators;
};
OperatorBasis product_pauli_basis(const QubitSystem& sys);

/// tau = normalized Tr[(rho (x) rho) A], evaluated as Re Tr[rho * A~(rho)].
/// The raw value is returned unclamped; it may dip below zero for very mixed states.
double tau(const Matrix& rho, const ConcurrenceKernel& kernel);
double tau(const Matrix& rho, const ConcurrenceOperator& op);

/// E(psi) = sqrt(<psi psi| V |psi psi>) with the same normalization as tau.
double pure_concurrence(const PureState& psi, const ConcurrenceKernel& kernel);

/// tau-dot = 2 Tr[(rho-dot (x) rho) A] with rho-dot from the master equation.
double tau_dot(const Matrix& rho, const Matrix& h_total, const DephasingSpec& diss, const ConcurrenceKernel& kernel);

/// Curvature 2 Tr[(rho-ddot (x) rho + rho-dot (x) rho-dot) A] under
/// H = H_sys + H_c(h). The dH_c/dt term is omitted; it vanishes for local H_c.
double tau_ddot(const Matrix& rho, const Matrix& h_sys, const LocalField& h, const DephasingSpec& diss,
                const ConcurrenceKernel& kernel);

/// Curvature without control, assembled term by term from H_sys and D.
double natural_curvature(const Matrix& rho, const Matrix& h_sys, const DephasingSpec& diss,
                         const ConcurrenceKernel& kernel);

/// X^(i)_xi = d tau-ddot / d h_xi^(i). The double-commutator, commutator-
/// dissipator, and split H_sys / D cross terms are folded into one d x d
/// matrix G with X^(i)_xi = Re Tr[sigma_xi^(i) G].
ControlGradient gradient_x(const Matrix& rho, const Matrix& h_sys, const DephasingSpec& diss,
                           const ConcurrenceKernel& kernel);

/// Y_k = d tau-dot / d h_k = 2 Tr[(-i[beta_k, rho]) (x) rho A] for a general
/// (possibly non-local) control basis. Throws on non-Hermitian elements.
GeneralGradient gradient_y(const Matrix& rho, const OperatorBasis& basis, const ConcurrenceKernel& kernel);

}  // namespace lyapctl
