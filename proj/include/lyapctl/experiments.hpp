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

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string_view>
#include <vector>

#include "lyapctl/controller.hpp"
#include "lyapctl/dynamics.hpp"
#include "lyapctl/entanglement.hpp"
#include "lyapctl/hilbert.hpp"
#include "lyapctl/rng.hpp"

namespace lyapctl {

enum class Scenario { Coherent, Dissipative, RobustStates, PulseRobustness, FidelityTrack };

Scenario parse_scenario(std::string_view name);
std::string_view scenario_name(Scenario scenario);

/// Initial pure state of a run.
struct InitialState {
  enum class Kind { Product, GhzFamily, GhzTarget, Explicit };

  Kind kind = Kind::Product;
  double alpha = 0.73;                     // product: weight of |0>
  double theta = 0.51 * std::numbers::pi;  // product: relative phase, rad
  double p = 0.5;                          // ghz_family: weight of |0...0>
  double target_tau = 0.55;                // ghz_target: bisection target
  std::vector<cplx> amplitudes;            // explicit

  bool operator==(const InitialState&) const = default;
};

std::string_view initial_kind_name(InitialState::Kind kind);
InitialState::Kind parse_initial_kind(std::string_view name);

/// Parameters of the robust-state study.
struct RobustStudy {
  std::size_t ensemble_size = 50;
  double lifetime_threshold = 1e-3;
  /// Fraction of t_end treated as the initial control window.
  double pulse_window_fraction = 0.1;
  std::vector<double> rotation_angles{0.01 * std::numbers::pi, 0.05 * std::numbers::pi};
  std::size_t n_directions = 20;

  bool operator==(const RobustStudy&) const = default;
};

/// Parameters of the pulse-robustness study.
struct PulseStudy {
  std::size_t mixture_size = 200;
  std::vector<double> sweep_epsilons{0.0, 0.02, 0.04, 0.06, 0.08, 0.1};
  std::size_t sweep_realizations = 20;
  double window_start = 0.3;  // us
  double window_end = 1.0;    // us

  bool operator==(const PulseStudy&) const = default;
};

struct ScenarioConfig {
  Scenario scenario = Scenario::Coherent;
  int n_qubits = 4;
  CouplingMatrix lambda = CouplingMatrix::reference_four_spin();
  std::vector<double> gamma = std::vector<double>(4, 0.0);  // per-qubit dephasing rate, 1/us
  InitialState initial;
  ControlPolicy policy;
  PerturbationSpec perturbation;
  double t_end = 1.0;   // us
  double dt = 1e-4;     // us
  std::size_t record_every = 10;
  std::size_t n_realizations = 1;
  std::uint64_t seed = 0;
  RobustStudy robust;
  PulseStudy pulse;
  std::vector<double> h_max_sweep;  // rad/us; grid for the amplitude sweep

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  QubitSystem system() const { return QubitSystem(n_qubits); }
  DephasingSpec dephasing() const { return DephasingSpec::with_rates(system(), gamma); }
  bool operator==(const ScenarioConfig&) const = default;
};

/// Per-run execution knobs that do not change results.
struct RunOptions {
  unsigned threads = 1;
  std::size_t snapshot_every = 0;  ///< keep rho on every k-th record
  /// Stops the run once tau has stayed below this level for one record; disabled if negative.
  double stop_below_tau = -1.0;
};

/// Feedback loop with a plant Hamiltonian and a (possibly different)
/// controller model. Perturbations act on the applied field only.
class ClosedLoop {
 public:
  ClosedLoop(const ScenarioConfig& config, const PerturbationSpec& perturbation, const ConcurrenceKernel& kernel);

  LocalField commanded_field(const Matrix& rho) const;
  LocalField applied_field(double t, const Matrix& rho) const;
  /// Right-hand side with the feedback evaluated at (t, rho).
  Matrix rhs(double t, const Matrix& rho) const;
  /// Right-hand side under a given applied field.
  Matrix rhs_with_field(const LocalField& h, const Matrix& rho) const;
  Trajectory run(const Matrix& rho0, double t_end, double dt, std::size_t record_every,
                 const RunOptions& options = {}) const;

  const Matrix& plant_hamiltonian() const { return h_plant_; }
  const Matrix& model_hamiltonian() const { return h_model_; }
  const DephasingSpec& dephasing() const { return diss_; }
  const ControlPolicy& policy() const { return policy_; }

 private:
  QubitSystem sys_;
  Matrix h_plant_;
  Matrix h_model_;
  DephasingSpec diss_;
  ControlPolicy policy_;
  PerturbationSpec perturbation_;
  Eigen::MatrixX3d offset_;
  const ConcurrenceKernel* kernel_;
};

/// Resolves the configured initial pure state.
PureState make_initial_state(const InitialState& spec, const QubitSystem& sys, const ConcurrenceKernel& kernel);

/// Closed-loop run without dephasing. Throws std::invalid_argument if any gamma is non-zero.
Trajectory run_coherent(const ScenarioConfig& config, const RunOptions& options = {});

/// Closed-loop run with dephasing in both plant and controller.
Trajectory run_dissipative(const ScenarioConfig& config, const RunOptions& options = {});

/// max over local unitaries of |<phi| U_1 (x) ... (x) U_N |psi>|.
/// Multi-start Nelder-Mead over three Euler angles per qubit followed by a
/// per-qubit polar-decomposition polish. `warm_start`, if given, seeds the
/// first start and receives the best unitaries found.
double lu_fidelity(const PureState& phi, const PureState& psi, std::size_t n_starts, RngStream& rng,
                   std::vector<Matrix>* warm_start = nullptr);

/// The four reference states of the stepwise path at N = 4, in order
/// i (configured product), 2 (Bell x |++>), 3 (Bell x Bell), f (optimal state).
std::array<PureState, 4> stepwise_targets(const PureState& initial);

/// Four-qubit state maximizing tau: (|0000> + |1111> + i|0011> + i|1100>) / 2.
PureState optimal_four_qubit_state();

struct FidelityTrack {
  Trajectory trajectory;
  std::vector<double> times;
  std::array<std::vector<double>, 4> fidelity;  // F_i, F_2, F_3, F_f
};

/// Coherent closed-loop run with LU-maximized overlaps at every recorded time.
FidelityTrack run_fidelity_track(const ScenarioConfig& config, std::size_t n_starts = 32,
                                 const RunOptions& options = {});

struct GhzFamilyState {
  PureState state;
  double p = 0;
};

/// sqrt(p)|0...0> + sqrt(1-p)|1...1> with tau = target (within 1e-6), p in [0, 1/2].
GhzFamilyState find_state_with_tau(double target, const ConcurrenceKernel& kernel);

struct LifetimeReport {
  double lifetime = 0;    ///< first time tau < threshold (linear interpolation), us
  double threshold = 0;
  double decay_rate = 0;  ///< -d ln(tau)/dt fitted over the first 10% of the decay window, 1/us
  bool censored = false;  ///< tau never fell below threshold; lifetime = last recorded time
};

LifetimeReport lifetime_report(const Trajectory& traj, double threshold);

struct RobustStatesResult {
  Trajectory controlled;
  std::vector<Trajectory> ensemble;
  LifetimeReport controlled_lifetime;
  std::vector<LifetimeReport> ensemble_lifetimes;
  double median_ensemble_lifetime = 0;
  double lifetime_ratio = 0;
  double early_field_energy_fraction = 0;  ///< share of int sum ||h||^2 dt inside the pulse window
  Matrix robust_state;                     ///< controlled state at the end of the pulse window
};

RobustStatesResult run_robust_states(const ScenarioConfig& config, const RunOptions& options = {});

struct RotationSensitivity {
  double angle = 0;
  double reference_rate = 0;
  double max_relative_increase = 0;
  std::vector<double> relative_increase;
};

/// Rotates `state` by exp(-i angle/2 n_i . sigma) on every qubit for random
/// axes n_i, decays each copy without control under the configured
/// dephasing, and compares fitted decay rates with the unrotated copy.
RotationSensitivity robustness_of_robust_state(const Matrix& state, double angle, std::size_t n_directions,
                                               RngStream& rng, const ScenarioConfig& config,
                                               const RunOptions& options = {});

struct SweepPoint {
  double epsilon = 0;
  double tau_bar = 0;
  double tau_bar_stderr = 0;
};

struct QuadraticFit {
  std::array<double, 3> coefficients{};  // c0 + c1 eps + c2 eps^2
  std::array<double, 3> stderr{};
};

/// Least-squares quadratic with sandwich covariance: point variances are
/// the reported standard errors squared plus the squared residual.
QuadraticFit fit_quadratic(const std::vector<SweepPoint>& points);

struct PulseRobustnessResult {
  Trajectory unperturbed;
  Trajectory perturbed;  ///< realization 0
  double peak_reduction = 0;  ///< 1 - max tau(perturbed) / max tau(unperturbed)
  std::vector<double> mixture_times;
  std::vector<double> mixture_tau;      ///< tau of the averaged density matrix
  std::vector<double> mean_single_tau;  ///< average of the per-run tau
  std::vector<SweepPoint> sweep;
};

/// Random (white-noise) errors are scored on the averaged state; systematic
/// errors (offsets, coupling errors) on the average of per-run tau.
struct EnsembleAverage {
  std::vector<double> times;
  std::vector<double> mixture_tau;
  std::vector<double> mean_single_tau;
  std::vector<Trajectory> first_runs;  ///< kept when requested
};

EnsembleAverage run_perturbed_ensemble(const ScenarioConfig& config, const PerturbationSpec& perturbation,
                                       std::size_t n_runs, const RunOptions& options = {},
                                       std::size_t keep_runs = 0);

/// tau-bar for one epsilon: ensemble- and time-averaged over the configured window.
SweepPoint sweep_point(const ScenarioConfig& config, PerturbationKind kind, double epsilon, std::size_t n_runs,
                       const RunOptions& options = {});

std::vector<SweepPoint> run_epsilon_sweep(const ScenarioConfig& config, PerturbationKind kind,
                                          const RunOptions& options = {});

/// Unperturbed tau-bar over the pulse window for every h_max in config.h_max_sweep.
/// SweepPoint::epsilon holds h_max; the runs are deterministic, so stderr is 0.
std::vector<SweepPoint> run_h_max_sweep(const ScenarioConfig& config, const RunOptions& options = {});

PulseRobustnessResult run_pulse_robustness(const ScenarioConfig& config, const RunOptions& options = {});

/// Trapezoid average of samples with t in [t0, t1].
double time_average(const std::vector<double>& times, const std::vector<double>& values, double t0, double t1);

/// First time the series reaches `level` (linear interpolation); nullopt if never.
std::optional<double> first_crossing(const std::vector<double>& times, const std::vector<double>& values,
                                     double level);

/// Linear interpolation of the series at time t (clamped to the ends).
double sample_at(const std::vector<double>& times, const std::vector<double>& values, double t);

/// Runs fn(0..n-1) on up to `threads` workers; results come back in index order.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace lyapctl
