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
#include <numbers>
#include <optional>
#include <string_view>

#include "lyapctl/dynamics.hpp"
#include "lyapctl/entanglement.hpp"
#include "lyapctl/rng.hpp"

namespace lyapctl {

/// Short rotation applied when the feedback law stalls on an eigenstate.
/// The pulse acts as exp(-i amplitude*duration sum_i sigma_axis^(i)).
struct KickSpec {
  Axis axis = Axis::X;
  double amplitude = 5.0 * std::numbers::pi;  // rad/us
  double duration = 0.01;                     // us

  double angle() const { return amplitude * duration; }
  bool operator==(const KickSpec&) const = default;
};

/// Where the feedback law is evaluated inside an RK4 step.
///  Step:  once per step from the step-initial state, held for the step.
///  Stage: at every stage from the stage state.
/// The law is discontinuous wherever some X^(i) passes through zero, and
/// stage evaluation then mixes opposite fields inside one step; the state
/// drifts off the positive cone at O(dt). Holding per step keeps each step a
/// fourth-order map of a fixed Lindblad generator.
enum class FeedbackPlacement { Step, Stage };

struct ControlPolicy {
  double h_max = 17.0;        ///< per-qubit amplitude cap, rad/us
  double x_tolerance = 1e-9;  ///< below this gradient norm the qubit's field is switched off
  std::optional<KickSpec> kick = KickSpec{};
  FeedbackPlacement placement = FeedbackPlacement::Step;

  void validate() const;
  bool operator==(const ControlPolicy&) const = default;
};

/// h^(i) = h_max X^(i) / ||X^(i)||, or zero when ||X^(i)|| <= x_tolerance.
LocalField control_field(const ControlGradient& x, const ControlPolicy& policy);

struct OptimalityReport {
  std::size_t n_samples = 0;
  std::size_t n_violations = 0;
  double max_violation = 0;       ///< max(tau_ddot(h_rand) - tau_ddot(h_opt)), floored at 0
  double tau_ddot_optimal = 0;
  double tau_ddot_antipodal = 0;  ///< tau_ddot(-h_opt)
  double predicted_gap = 0;       ///< 2 h_max sum_i ||X^(i)|| over active qubits
};

/// Compares the chosen field against random fields with the same per-qubit
/// norms. Curvatures come from tau_ddot, not from the gradient, so the check
/// is independent of the route that produced h.
OptimalityReport optimality_check(const Matrix& rho, const Matrix& h_sys, const DephasingSpec& diss,
                                  const ControlPolicy& policy, RngStream& rng, std::size_t n_samples,
                                  const ConcurrenceKernel& kernel);

/// exp(-i theta sum_i sigma_axis^(i)) as a product of single-qubit factors.
Matrix kick_unitary(const KickSpec& kick, const QubitSystem& sys);

/// Applies the configured kick only if rho0 stalls the law (every ||X^(i)||
/// and the natural curvature within x_tolerance); otherwise returns rho0.
Matrix initial_kick(const Matrix& rho0, const Matrix& h_sys, const DephasingSpec& diss, const ControlPolicy& policy,
                    const ConcurrenceKernel& kernel);

enum class PerturbationKind { None, WhiteNoise, ConstantOffset, CouplingError };

PerturbationKind parse_perturbation_kind(std::string_view name);
std::string_view perturbation_kind_name(PerturbationKind kind);

struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::None;
  double epsilon = 0.0;                       ///< relative amplitude
  double cutoff = 100.0 * std::numbers::pi;   ///< rad/us, white noise only
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;                   ///< realization index

  void validate() const;
  /// Sample-and-hold spacing pi / cutoff.
  double noise_interval() const { return std::numbers::pi / cutoff; }
  bool operator==(const PerturbationSpec&) const = default;
};

/// Band-limited noise value in [-1, 1] for one field component at time t.
double white_noise_value(const PerturbationSpec& spec, int n_qubits, int qubit, int component, double t);

/// h + eps h_max n(t), n held constant on intervals of pi / cutoff.
LocalField apply_white_noise(const LocalField& h, const PerturbationSpec& spec, double h_max, double t);

/// Fixed per-run offset direction s in {-1, +1}^{3N}.
Eigen::MatrixX3d offset_signs(const PerturbationSpec& spec, int n_qubits);

/// h + eps h_max s.
LocalField apply_offset(const LocalField& h, const PerturbationSpec& spec, double h_max);

/// lambda'_ij = lambda_ij (1 + eps u_ij), u_ij ~ U[-1, 1] drawn once per run.
CouplingMatrix perturb_couplings(const CouplingMatrix& lambda, const PerturbationSpec& spec);

}  // namespace lyapctl
