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

#include <complex>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace lyapctl {

class RngStream;

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr int kMinQubits = 2;
inline constexpr int kMaxQubits = 8;

/// A register of N qubits. Qubit 1 is the slowest (most significant) tensor
/// factor, so basis label b has qubit i in bit (N - i).
class QubitSystem {
 public:
  explicit QubitSystem(int n_qubits);

  int n_qubits() const { return n_; }
  Eigen::Index dim() const { return Eigen::Index{1} << n_; }

  bool operator==(const QubitSystem&) const = default;

 private:
  int n_;
};

enum class Axis { X = 0, Y = 1, Z = 2 };

Axis parse_axis(std::string_view label);
char axis_label(Axis axis);

Matrix pauli(Axis axis);
Matrix pauli(std::string_view label);

/// Kronecker product with a as the slow index.
Matrix kron(const Matrix& a, const Matrix& b);

/// I (x) ... (x) op (x) ... (x) I with op at 1-based position `site`.
Matrix embed_local(const Matrix& op, int site, const QubitSystem& sys);

/// U_1 (x) ... (x) U_N for a list of single-qubit factors.
Matrix tensor_product(std::span<const Matrix> factors);

/// max|M - M^dagger| <= rel_tol * max|M| (absolute for the zero matrix).
bool is_hermitian(const Matrix& m, double rel_tol = 1e-12);

Matrix commutator(const Matrix& a, const Matrix& b);

/// Haar-random element of SU(2) from a uniform unit quaternion.
Matrix haar_su2(RngStream& rng);
std::vector<Matrix> haar_local_unitaries(const QubitSystem& sys, RngStream& rng);

/// exp(-i angle/2 * n.sigma): a Bloch-sphere rotation by `angle` about unit axis n.
Matrix bloch_rotation(double angle, const Eigen::Vector3d& axis);

/// Maps global duplicate labels (a_1..a_N | b_1..b_N) to the pairwise ordering
/// (a_1 b_1 | a_2 b_2 | ... ). perm[global] == pairwise.
std::vector<std::uint32_t> duplicate_pairing_permutation(const QubitSystem& sys);
std::vector<std::uint32_t> invert_permutation(std::span<const std::uint32_t> perm);

/// Normalized state vector.
class PureState {
 public:
  /// Throws std::invalid_argument unless | ||psi|| - 1 | <= 1e-10.
  static PureState from_amplitudes(Vector amplitudes);
  /// Rescales to unit norm; throws on a zero or non-power-of-two vector.
  static PureState normalized(Vector amplitudes);
  static PureState basis_state(const QubitSystem& sys, std::uint64_t label);
  /// (sqrt(alpha)|0> + sqrt(1-alpha) e^{i theta} |1>)^{(x)N}
  static PureState uniform_product(const QubitSystem& sys, double alpha, double theta);

  const Vector& amplitudes() const { return amps_; }
  int n_qubits() const;
  Matrix projector() const { return amps_ * amps_.adjoint(); }

 private:
  explicit PureState(Vector v) : amps_(std::move(v)) {}
  Vector amps_;
};

/// Numerical health of a density matrix.
struct StateDiagnostics {
  double hermiticity_error = 0;  ///< max|rho - rho^dagger|
  double trace_error = 0;        ///< |Tr rho - 1|
  double min_eigenvalue = 0;
  double purity = 0;
};

StateDiagnostics diagnose_state(const Matrix& rho);

/// Principal eigenvector of a (near-)pure density matrix.
PureState dominant_pure_state(const Matrix& rho);

}  // namespace lyapctl
