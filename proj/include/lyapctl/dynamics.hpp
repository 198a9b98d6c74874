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
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lyapctl/hilbert.hpp"

namespace lyapctl {

/// Local dephasing channels L_i acting on qubit i with rate gamma_i (1/us).
///
/// The embedded operators are prepared once at construction; when every L_i
/// is diagonal the dissipator reduces to an elementwise weight on rho.
class DephasingSpec {
 public:
  /// No dissipation.
  static DephasingSpec none(const QubitSystem& sys);
  /// gamma_i = gamma, L_i = sigma_z on every qubit.
  static DephasingSpec uniform(const QubitSystem& sys, double gamma);
  /// Per-qubit rates with sigma_z channels.
  static DephasingSpec with_rates(const QubitSystem& sys, std::vector<double> rates);
  /// Fully general: one Hermitian 2x2 operator per qubit.
  DephasingSpec(const QubitSystem& sys, std::vector<double> rates, std::vector<Matrix> operators);

  const std::vector<double>& rates() const { return rates_; }
  const std::vector<Matrix>& operators() const { return ops_; }
  bool active() const { return active_; }
  int n_qubits() const { return static_cast<int>(rates_.size()); }

  /// D(rho) = sum_i gamma_i (L_i rho L_i^dagger - 1/2 {L_i^dagger L_i, rho}).
  Matrix apply(const Matrix& rho) const;

 private:
  std::vector<double> rates_;
  std::vector<Matrix> ops_;
  bool active_ = false;
  bool diagonal_ = true;
  Eigen::MatrixXd weights_;        // diagonal case: D(rho) = weights_ .* rho
  std::vector<Matrix> embedded_;   // general case
  std::vector<Matrix> embedded_sq_;
};

/// Symmetric Ising couplings lambda_ij in rad/us with zero diagonal.
class CouplingMatrix {
 public:
  explicit CouplingMatrix(Eigen::MatrixXd lambda);
  static CouplingMatrix zeros(int n_qubits);
  /// The four-spin reference set: lambda_12 = 9.8, lambda_13 = 0.1,
  /// lambda_14 = 0.3, lambda_23 = 1.3, lambda_24 = 0.5, lambda_34 = 2.7.
  static CouplingMatrix reference_four_spin();

  const Eigen::MatrixXd& matrix() const { return lambda_; }
  int n_qubits() const { return static_cast<int>(lambda_.rows()); }
  double operator()(int i, int j) const { return lambda_(i, j); }
  bool operator==(const CouplingMatrix& o) const { return lambda_ == o.lambda_; }

 private:
  Eigen::MatrixXd lambda_;
};

/// Local control amplitudes h_xi^(i), one row per qubit, columns x, y, z (rad/us).
struct LocalField {
  Eigen::MatrixX3d h;

  static LocalField zeros(int n_qubits) { return {Eigen::MatrixX3d::Zero(n_qubits, 3)}; }
  int n_qubits() const { return static_cast<int>(h.rows()); }
  double qubit_norm(int i) const { return h.row(i).norm(); }
  bool operator==(const LocalField& o) const { return h == o.h; }
};

/// H = sum_{i<j} lambda_ij sigma_z^(i) sigma_z^(j).
Matrix ising_hamiltonian(const CouplingMatrix& lambda, const QubitSystem& sys);

/// H_c = sum_i sum_xi h_xi^(i) sigma_xi^(i).
Matrix local_field_hamiltonian(const LocalField& h, const QubitSystem& sys);

Matrix dissipator(const Matrix& rho, const DephasingSpec& spec);

/// drho/dt = -i[H, rho] + D(rho) with hbar = 1.
Matrix lindblad_rhs(const Matrix& rho, const Matrix& hamiltonian, const DephasingSpec& spec);

/// Raised when the integrator meets a non-finite state.
class NumericalAbort : public std::runtime_error {
 public:
  NumericalAbort(std::size_t step, double time)
      : std::runtime_error("non-finite state at step " + std::to_string(step) + " (t = " + std::to_string(time) +
                           " us)"),
        step_(step),
        time_(time) {}
  std::size_t step() const { return step_; }
  double time() const { return time_; }

 private:
  std::size_t step_;
  double time_;
};

/// Sampled run of the master equation.
struct Trajectory {
  std::vector<double> times;
  std::vector<double> tau;
  std::vector<double> purity;
  std::vector<LocalField> fields;           // empty when no field sampler was given
  std::vector<std::size_t> snapshot_index;  // indices into times
  std::vector<Matrix> snapshots;
  Matrix final_state;
  std::size_t steps = 0;
  std::uint64_t seed = 0;
  std::string config_hash;

  std::size_t size() const { return times.size(); }
};

using RhsFunction = std::function<Matrix(double t, const Matrix& rho)>;

struct Recorder {
  std::size_t every = 1;           ///< record every k-th step (plus the final state)
  std::size_t snapshot_every = 0;  ///< keep rho on every k-th record; 0 keeps none
  std::function<double(const Matrix&)> tau;
  std::function<LocalField(double, const Matrix&)> field;
  /// Checked after each record; returning true ends the run early.
  std::function<bool(const Trajectory&)> stop;
  /// Called with the step-initial state before the first stage of every step.
  std::function<void(double, const Matrix&)> begin_step;
};

/// Classic fixed-step RK4. The right-hand side is re-evaluated at every stage
/// with the stage state, so state-dependent feedback stays fourth order.
/// After each step rho is re-Hermitized and renormalized if |Tr - 1| > 1e-10.
/// Throws NumericalAbort on a non-finite state.
Trajectory propagate(const Matrix& rho0, const RhsFunction& rhs, double t_end, double dt, const Recorder& recorder);

}  // namespace lyapctl
