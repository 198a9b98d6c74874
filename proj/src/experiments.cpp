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

#include "lyapctl/experiments.hpp"

#include <gsl/gsl_multimin.h>
#include <gsl/gsl_vector.h>

#include <Eigen/SVD>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

namespace lyapctl {
namespace {

// Stream identifiers for the independent random consumers of one seed.
constexpr std::uint64_t kRobustEnsembleStream = 0x1001;
constexpr std::uint64_t kFidelityStream = 0x1002;
constexpr std::uint64_t kRobustStartStream = 0x1003;

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

}  // namespace

Scenario parse_scenario(std::string_view name) {
  if (name == "coherent") return Scenario::Coherent;
  if (name == "dissipative") return Scenario::Dissipative;
  if (name == "robust_states") return Scenario::RobustStates;
  if (name == "pulse_robustness") return Scenario::PulseRobustness;
  if (name == "fidelity_track") return Scenario::FidelityTrack;
  throw std::invalid_argument("unknown scenario '" + std::string(name) + "'");
}

std::string_view scenario_name(Scenario scenario) {
  switch (scenario) {
    case Scenario::Coherent:
      return "coherent";
    case Scenario::Dissipative:
      return "dissipative";
    case Scenario::RobustStates:
      return "robust_states";
    case Scenario::PulseRobustness:
      return "pulse_robustness";
    case Scenario::FidelityTrack:
      return "fidelity_track";
  }
  return "coherent";
}

std::string_view initial_kind_name(InitialState::Kind kind) {
  switch (kind) {
    case InitialState::Kind::Product:
      return "product";
    case InitialState::Kind::GhzFamily:
      return "ghz_family";
    case InitialState::Kind::GhzTarget:
      return "ghz_target";
    case InitialState::Kind::Explicit:
      return "explicit";
  }
  return "product";
}

InitialState::Kind parse_initial_kind(std::string_view name) {
  if (name == "product") return InitialState::Kind::Product;
  if (name == "ghz_family") return InitialState::Kind::GhzFamily;
  if (name == "ghz_target") return InitialState::Kind::GhzTarget;
  if (name == "explicit") return InitialState::Kind::Explicit;
  throw std::invalid_argument("unknown initial state kind '" + std::string(name) + "'");
}

void ScenarioConfig::validate() const {
  require(n_qubits >= kMinQubits && n_qubits <= kMaxQubits,
          "n_qubits must lie in [" + std::to_string(kMinQubits) + ", " + std::to_string(kMaxQubits) + "]");
  require(lambda.n_qubits() == n_qubits, "lambda must be n_qubits x n_qubits");
  require(static_cast<int>(gamma.size()) == n_qubits, "gamma needs one rate per qubit");
  for (double g : gamma) require(g >= 0 && std::isfinite(g), "gamma must be >= 0");
  require(t_end > 0 && std::isfinite(t_end), "t_end must be > 0");
  require(dt > 0 && std::isfinite(dt), "dt must be > 0");
  require(record_every >= 1, "record_every must be >= 1");
  require(n_realizations >= 1, "n_realizations must be >= 1");
  policy.validate();
  perturbation.validate();

  switch (initial.kind) {
    case InitialState::Kind::Product:
      require(initial.alpha >= 0 && initial.alpha <= 1, "initial.alpha must lie in [0, 1]");
      require(std::isfinite(initial.theta), "initial.theta must be finite");
      break;
    case InitialState::Kind::GhzFamily:
      require(initial.p >= 0 && initial.p <= 1, "initial.p must lie in [0, 1]");
      break;
    case InitialState::Kind::GhzTarget:
      require(initial.target_tau >= 0 && initial.target_tau <= 1, "initial.target_tau must lie in [0, 1]");
      break;
    case InitialState::Kind::Explicit:
      require(initial.amplitudes.size() == (std::size_t{1} << n_qubits), "initial.amplitudes must have 2^N entries");
      break;
  }

  require(robust.ensemble_size >= 1, "robust.ensemble_size must be >= 1");
  require(robust.lifetime_threshold > 0, "robust.lifetime_threshold must be > 0");
  require(robust.pulse_window_fraction > 0 && robust.pulse_window_fraction <= 1,
          "robust.pulse_window_fraction must lie in (0, 1]");
  require(robust.n_directions >= 1, "robust.n_directions must be >= 1");
  for (double a : robust.rotation_angles) require(a >= 0 && std::isfinite(a), "robust.rotation_angles must be >= 0");

  require(pulse.mixture_size >= 1, "pulse.mixture_size must be >= 1");
  require(pulse.sweep_realizations >= 1, "pulse.sweep_realizations must be >= 1");
  require(pulse.window_start < pulse.window_end, "pulse window must have start < end");
  for (double e : pulse.sweep_epsilons) require(e >= 0 && std::isfinite(e), "pulse.sweep_epsilons must be >= 0");
  for (double h : h_max_sweep) require(h >= 0 && std::isfinite(h), "h_max_sweep entries must be >= 0");
}

// ---------------------------------------------------------------------------
// Closed loop

ClosedLoop::ClosedLoop(const ScenarioConfig& config, const PerturbationSpec& perturbation,
                       const ConcurrenceKernel& kernel)
    : sys_(config.n_qubits),
      h_plant_(ising_hamiltonian(config.lambda, sys_)),
      diss_(config.dephasing()),
      policy_(config.policy),
      perturbation_(perturbation),
      offset_(Eigen::MatrixX3d::Zero(config.n_qubits, 3)),
      kernel_(&kernel) {
  if (kernel.n_qubits() != config.n_qubits) throw std::invalid_argument("ClosedLoop: kernel size mismatch");
  if (perturbation.kind == PerturbationKind::CouplingError) {
    h_model_ = ising_hamiltonian(perturb_couplings(config.lambda, perturbation), sys_);
  } else {
    h_model_ = h_plant_;
  }
  if (perturbation.kind == PerturbationKind::ConstantOffset) {
    offset_ = (perturbation.epsilon * policy_.h_max) * offset_signs(perturbation, config.n_qubits);
  }
}

LocalField ClosedLoop::commanded_field(const Matrix& rho) const {
  if (policy_.h_max == 0) return LocalField::zeros(sys_.n_qubits());
  return control_field(gradient_x(rho, h_model_, diss_, *kernel_), policy_);
}

LocalField ClosedLoop::applied_field(double t, const Matrix& rho) const {
  LocalField h = commanded_field(rho);
  switch (perturbation_.kind) {
    case PerturbationKind::WhiteNoise:
      return apply_white_noise(h, perturbation_, policy_.h_max, t);
    case PerturbationKind::ConstantOffset:
      h.h += offset_;
      return h;
    default:
      return h;
  }
}

Matrix ClosedLoop::rhs(double t, const Matrix& rho) const { return rhs_with_field(applied_field(t, rho), rho); }

Matrix ClosedLoop::rhs_with_field(const LocalField& h, const Matrix& rho) const {
  if (h.h.isZero(0)) return lindblad_rhs(rho, h_plant_, diss_);
  return lindblad_rhs(rho, h_plant_ + local_field_hamiltonian(h, sys_), diss_);
}

Trajectory ClosedLoop::run(const Matrix& rho0, double t_end, double dt, std::size_t record_every,
                           const RunOptions& options) const {
  Recorder rec;
  rec.every = record_every;
  rec.snapshot_every = options.snapshot_every;
  rec.tau = [this](const Matrix& rho) { return tau(rho, *kernel_); };
  rec.field = [this](double t, const Matrix& rho) { return applied_field(t, rho); };
  if (options.stop_below_tau >= 0) {
    const double level = options.stop_below_tau;
    rec.stop = [level](const Trajectory& tr) { return tr.tau.back() < level; };
  }
  if (policy_.placement == FeedbackPlacement::Stage) {
    return propagate(rho0, [this](double t, const Matrix& rho) { return rhs(t, rho); }, t_end, dt, rec);
  }
  LocalField held = LocalField::zeros(sys_.n_qubits());
  rec.begin_step = [this, &held](double t, const Matrix& rho) { held = applied_field(t, rho); };
  return propagate(
      rho0, [this, &held](double, const Matrix& rho) { return rhs_with_field(held, rho); }, t_end, dt, rec);
}

// ---------------------------------------------------------------------------
// Initial states and basic runners

PureState make_initial_state(const InitialState& spec, const QubitSystem& sys, const ConcurrenceKernel& kernel) {
  switch (spec.kind) {
    case InitialState::Kind::Product:
      return PureState::uniform_product(sys, spec.alpha, spec.theta);
    case InitialState::Kind::GhzFamily: {
      require(spec.p >= 0 && spec.p <= 1, "ghz_family: p must lie in [0, 1]");
      Vector amp = Vector::Zero(sys.dim());
      amp(0) = std::sqrt(spec.p);
      amp(sys.dim() - 1) = std::sqrt(1.0 - spec.p);
      return PureState::from_amplitudes(amp);
    }
    case InitialState::Kind::GhzTarget:
      return find_state_with_tau(spec.target_tau, kernel).state;
    case InitialState::Kind::Explicit: {
      require(static_cast<Eigen::Index>(spec.amplitudes.size()) == sys.dim(),
              "explicit initial state needs 2^N amplitudes");
      Vector amp(sys.dim());
      for (Eigen::Index i = 0; i < sys.dim(); ++i) amp(i) = spec.amplitudes[i];
      return PureState::from_amplitudes(amp);
    }
  }
  throw std::invalid_argument("unknown initial state kind");
}

namespace {

PerturbationSpec seeded(PerturbationSpec spec, std::uint64_t seed, std::uint64_t stream) {
  spec.seed = seed;
  spec.stream = stream;
  return spec;
}

Matrix prepared_state(const ScenarioConfig& config, const ConcurrenceKernel& kernel) {
  const QubitSystem sys = config.system();
  const Matrix rho0 = make_initial_state(config.initial, sys, kernel).projector();
  return initial_kick(rho0, ising_hamiltonian(config.lambda, sys), config.dephasing(), config.policy, kernel);
}

Trajectory run_single(const ScenarioConfig& config, const PerturbationSpec& perturbation,
                      const ConcurrenceKernel& kernel, const RunOptions& options) {
  const ClosedLoop loop(config, perturbation, kernel);
  Trajectory traj = loop.run(prepared_state(config, kernel), config.t_end, config.dt, config.record_every, options);
  traj.seed = config.seed;
  return traj;
}

}  // namespace

Trajectory run_coherent(const ScenarioConfig& config, const RunOptions& options) {
  config.validate();
  for (double g : config.gamma) require(g == 0, "run_coherent: gamma must be zero (use the dissipative scenario)");
  const ConcurrenceKernel kernel(config.system());
  return run_single(config, seeded(config.perturbation, config.seed, config.perturbation.stream), kernel, options);
}

Trajectory run_dissipative(const ScenarioConfig& config, const RunOptions& options) {
  config.validate();
  const ConcurrenceKernel kernel(config.system());
  return run_single(config, seeded(config.perturbation, config.seed, config.perturbation.stream), kernel, options);
}

// ---------------------------------------------------------------------------
// LU-maximized overlap

namespace {

using Unitary2 = Eigen::Matrix2cd;

// Applies U_1 (x) ... (x) U_N to a state vector.
Vector apply_local(const std::vector<Unitary2>& us, const Vector& psi, int skip = -1) {
  Vector out = psi;
  const int n = static_cast<int>(us.size());
  const Eigen::Index d = psi.size();
  for (int i = 0; i < n; ++i) {
    if (i == skip) continue;
    const Eigen::Index mask = Eigen::Index{1} << (n - 1 - i);
    const Unitary2& u = us[i];
    for (Eigen::Index a = 0; a < d; ++a) {
      if (a & mask) continue;
      const cplx v0 = out(a), v1 = out(a | mask);
      out(a) = u(0, 0) * v0 + u(0, 1) * v1;
      out(a | mask) = u(1, 0) * v0 + u(1, 1) * v1;
    }
  }
  return out;
}

Unitary2 euler_zyz(double a, double b, double c) {
  const cplx ea = std::polar(1.0, -0.5 * a), ec = std::polar(1.0, -0.5 * c);
  Unitary2 rz_a, rz_c, ry;
  rz_a << ea, 0, 0, std::conj(ea);
  rz_c << ec, 0, 0, std::conj(ec);
  ry << std::cos(0.5 * b), -std::sin(0.5 * b), std::sin(0.5 * b), std::cos(0.5 * b);
  return rz_a * ry * rz_c;
}

struct OverlapProblem {
  const Vector* phi;
  const Vector* psi;
  std::vector<Unitary2> base;
  mutable std::vector<Unitary2> work;

  double overlap(const std::vector<Unitary2>& us) const { return std::abs(phi->dot(apply_local(us, *psi))); }

  double objective(const gsl_vector* x) const {
    for (std::size_t i = 0; i < base.size(); ++i) {
      work[i] = base[i] * euler_zyz(gsl_vector_get(x, 3 * i), gsl_vector_get(x, 3 * i + 1),
                                    gsl_vector_get(x, 3 * i + 2));
    }
    return -overlap(work);
  }
};

double gsl_objective(const gsl_vector* x, void* params) {
  return static_cast<const OverlapProblem*>(params)->objective(x);
}

// Nelder-Mead over Euler-angle corrections around `us`; updates `us` in place.
void nelder_mead_refine(OverlapProblem& prob, std::vector<Unitary2>& us) {
  const std::size_t n = 3 * us.size();
  prob.base = us;
  prob.work = us;
  gsl_multimin_function fn{&gsl_objective, n, &prob};
  gsl_vector* x = gsl_vector_calloc(n);
  gsl_vector* step = gsl_vector_alloc(n);
  gsl_vector_set_all(step, 0.6);
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
  gsl_multimin_fminimizer_set(s, &fn, x, step);
  for (int iter = 0; iter < 400; ++iter) {
    if (gsl_multimin_fminimizer_iterate(s)) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), 1e-4) == GSL_SUCCESS) break;
  }
  const gsl_vector* best = gsl_multimin_fminimizer_x(s);
  for (std::size_t i = 0; i < us.size(); ++i) {
    us[i] = prob.base[i] *
            euler_zyz(gsl_vector_get(best, 3 * i), gsl_vector_get(best, 3 * i + 1), gsl_vector_get(best, 3 * i + 2));
  }
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(step);
  gsl_vector_free(x);
}

// Coordinate ascent: with all other factors fixed, the best U_i follows from
// the polar decomposition of a 2x2 contraction.
double polar_polish(const Vector& phi, const Vector& psi, std::vector<Unitary2>& us) {
  const int n = static_cast<int>(us.size());
  const Eigen::Index d = psi.size();
  double value = std::abs(phi.dot(apply_local(us, psi)));
  for (int sweep = 0; sweep < 200; ++sweep) {
    for (int i = 0; i < n; ++i) {
      const Vector chi = apply_local(us, psi, i);
      const Eigen::Index mask = Eigen::Index{1} << (n - 1 - i);
      Unitary2 k = Unitary2::Zero();  // k(t, s) = sum_rest chi(t, rest) conj(phi(s, rest))
      for (Eigen::Index a = 0; a < d; ++a) {
        const int t = (a & mask) ? 1 : 0;
        const Eigen::Index rest = a & ~mask;
        k(t, 0) += chi(a) * std::conj(phi(rest));
        k(t, 1) += chi(a) * std::conj(phi(rest | mask));
      }
      Eigen::JacobiSVD<Unitary2> svd(k, Eigen::ComputeFullU | Eigen::ComputeFullV);
      us[i] = svd.matrixV() * svd.matrixU().adjoint();
    }
    const double next = std::abs(phi.dot(apply_local(us, psi)));
    const bool done = next - value < 1e-13;
    value = std::max(value, next);
    if (done) break;
  }
  return value;
}

}  // namespace

double lu_fidelity(const PureState& phi, const PureState& psi, std::size_t n_starts, RngStream& rng,
                   std::vector<Matrix>* warm_start) {
  if (phi.n_qubits() != psi.n_qubits()) throw std::invalid_argument("lu_fidelity: dimension mismatch");
  require(n_starts >= 1, "lu_fidelity: n_starts must be >= 1");
  const int n = phi.n_qubits();
  const QubitSystem sys(n);
  OverlapProblem prob{&phi.amplitudes(), &psi.amplitudes(), {}, {}};

  double best = -1;
  std::vector<Unitary2> best_us;
  for (std::size_t s = 0; s < n_starts; ++s) {
    std::vector<Unitary2> us(n);
    if (s == 0 && warm_start && static_cast<int>(warm_start->size()) == n) {
      for (int i = 0; i < n; ++i) us[i] = (*warm_start)[i];
    } else if (s == 0) {
      for (int i = 0; i < n; ++i) us[i] = Unitary2::Identity();
    } else {
      const std::vector<Matrix> h = haar_local_unitaries(sys, rng);
      for (int i = 0; i < n; ++i) us[i] = h[i];
    }
    nelder_mead_refine(prob, us);
    const double value = polar_polish(phi.amplitudes(), psi.amplitudes(), us);
    if (value > best) {
      best = value;
      best_us = us;
    }
  }
  if (warm_start) {
    warm_start->assign(best_us.begin(), best_us.end());
  }
  return std::min(best, 1.0);
}

PureState optimal_four_qubit_state() {
  Vector amp = Vector::Zero(16);
  amp(0b0000) = 0.5;
  amp(0b1111) = 0.5;
  amp(0b0011) = cplx(0, 0.5);
  amp(0b1100) = cplx(0, 0.5);
  return PureState::from_amplitudes(amp);
}

std::array<PureState, 4> stepwise_targets(const PureState& initial) {
  require(initial.n_qubits() == 4, "stepwise_targets: defined for four qubits");
  const double r2 = 1.0 / std::sqrt(2.0);
  Vector bell(4);
  bell << r2, 0, 0, r2;
  const Vector plus2 = Vector::Constant(4, 0.5);  // |++>
  Vector phi2(16), phi3(16);
  for (Eigen::Index a = 0; a < 4; ++a)
    for (Eigen::Index b = 0; b < 4; ++b) {
      phi2(4 * a + b) = bell(a) * plus2(b);
      phi3(4 * a + b) = bell(a) * bell(b);
    }
  return {initial, PureState::from_amplitudes(phi2), PureState::from_amplitudes(phi3), optimal_four_qubit_state()};
}

FidelityTrack run_fidelity_track(const ScenarioConfig& config, std::size_t n_starts, const RunOptions& options) {
  config.validate();
  const QubitSystem sys = config.system();
  const ConcurrenceKernel kernel(sys);
  RunOptions run_options = options;
  run_options.snapshot_every = 1;

  FidelityTrack out;
  out.trajectory = run_coherent(config, run_options);
  const auto targets = stepwise_targets(make_initial_state(config.initial, sys, kernel));

  const std::size_t n_records = out.trajectory.snapshots.size();
  out.times.resize(n_records);
  for (auto& f : out.fidelity) f.resize(n_records);
  for (std::size_t r = 0; r < n_records; ++r) out.times[r] = out.trajectory.times[out.trajectory.snapshot_index[r]];

  // Each target is tracked on its own stream with a warm start carried
  // along the trajectory, so the four series are independent jobs.
  parallel_for(4, options.threads, [&](std::size_t j) {
    RngStream rng = RngStream(config.seed, kFidelityStream).substream(j);
    std::vector<Matrix> warm;
    for (std::size_t r = 0; r < n_records; ++r) {
      const PureState psi = dominant_pure_state(out.trajectory.snapshots[r]);
      out.fidelity[j][r] = lu_fidelity(targets[j], psi, n_starts, rng, &warm);
    }
  });
  if (options.snapshot_every == 0) {
    out.trajectory.snapshots.clear();
    out.trajectory.snapshot_index.clear();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Robust states

GhzFamilyState find_state_with_tau(double target, const ConcurrenceKernel& kernel) {
  require(target >= 0 && target <= 1, "find_state_with_tau: target must lie in [0, 1]");
  const QubitSystem sys(kernel.n_qubits());
  auto state = [&](double p) {
    InitialState spec;
    spec.kind = InitialState::Kind::GhzFamily;
    spec.p = p;
    return make_initial_state(spec, sys, kernel);
  };
  auto tau_of = [&](double p) { return tau(state(p).projector(), kernel); };

  constexpr int kGrid = 64;
  double prev = tau_of(0.0);
  for (int k = 1; k <= kGrid; ++k) {
    const double cur = tau_of(0.5 * k / kGrid);
    if (cur < prev - 1e-12) throw std::runtime_error("find_state_with_tau: tau is not monotone on the family");
    prev = cur;
  }
  const double top = prev;
  if (target > top + 1e-6) {
    throw std::invalid_argument("find_state_with_tau: target " + std::to_string(target) +
                                " unreachable in the GHZ family (max " + std::to_string(top) + ")");
  }
  if (target <= tau_of(0.0) + 1e-12) return {state(0.0), 0.0};
  if (target >= top) return {state(0.5), 0.5};

  double lo = 0.0, hi = 0.5;
  double p = 0.25;
  for (int iter = 0; iter < 200; ++iter) {
    p = 0.5 * (lo + hi);
    const double value = tau_of(p);
    if (std::abs(value - target) <= 1e-12 || hi - lo < 1e-15) break;
    (value < target ? lo : hi) = p;
  }
  return {state(p), p};
}

namespace {

// Least-squares slope of ln tau over samples with t <= t_fit, returned as a
// positive decay rate.
double fit_decay_rate(const Trajectory& traj, double t_fit) {
  std::vector<double> ts, ys;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (traj.times[k] > t_fit + 1e-12 && ts.size() >= 2) break;
    if (traj.tau[k] <= 0) break;
    ts.push_back(traj.times[k]);
    ys.push_back(std::log(traj.tau[k]));
  }
  if (ts.size() < 2) return 0.0;
  const auto n = static_cast<double>(ts.size());
  double mt = 0, my = 0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    mt += ts[k] / n;
    my += ys[k] / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    sxy += (ts[k] - mt) * (ys[k] - my);
    sxx += (ts[k] - mt) * (ts[k] - mt);
  }
  return sxx > 0 ? -sxy / sxx : 0.0;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

ScenarioConfig uncontrolled(const ScenarioConfig& config) {
  ScenarioConfig c = config;
  c.policy.h_max = 0;
  c.perturbation = PerturbationSpec{};
  return c;
}

}  // namespace

LifetimeReport lifetime_report(const Trajectory& traj, double threshold) {
  require(traj.size() >= 1, "lifetime_report: empty trajectory");
  LifetimeReport rep;
  rep.threshold = threshold;
  rep.censored = true;
  rep.lifetime = traj.times.back();
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (traj.tau[k] < threshold) {
      rep.censored = false;
      if (k == 0) {
        rep.lifetime = traj.times[0];
      } else {
        const double t0 = traj.times[k - 1], t1 = traj.times[k];
        const double y0 = traj.tau[k - 1], y1 = traj.tau[k];
        rep.lifetime = t0 + (t1 - t0) * (y0 - threshold) / (y0 - y1);
      }
      break;
    }
  }
  const double t_start = traj.times.front();
  rep.decay_rate = fit_decay_rate(traj, t_start + 0.1 * (rep.lifetime - t_start));
  return rep;
}

RobustStatesResult run_robust_states(const ScenarioConfig& config, const RunOptions& options) {
  config.validate();
  require(config.lambda.matrix().isZero(0), "run_robust_states: couplings must vanish");
  for (double g : config.gamma) require(g == config.gamma.front(), "run_robust_states: dephasing must be uniform");

  const QubitSystem sys = config.system();
  const ConcurrenceKernel kernel(sys);
  const PureState psi0 = make_initial_state(config.initial, sys, kernel);
  const double threshold = config.robust.lifetime_threshold;
  const double window = config.robust.pulse_window_fraction * config.t_end;

  RobustStatesResult out;
  {
    // The GHZ-family state is itself a fixed point of the law (X = 0), so the
    // controlled run starts from a generic member of its LU orbit instead.
    RngStream rng(config.seed, kRobustStartStream);
    const Matrix u = tensor_product(haar_local_unitaries(sys, rng));
    const Matrix start = PureState::from_amplitudes(u * psi0.amplitudes()).projector();
    const ClosedLoop loop(config, PerturbationSpec{}, kernel);
    RunOptions ctl = options;
    ctl.snapshot_every = 1;
    out.controlled = loop.run(start, config.t_end, config.dt, config.record_every, ctl);
    out.controlled.seed = config.seed;
  }
  out.controlled_lifetime = lifetime_report(out.controlled, threshold);

  // Field energy int sum_i ||h_i||^2 dt, trapezoid on the recorded samples.
  double total = 0, early = 0;
  for (std::size_t k = 1; k < out.controlled.size(); ++k) {
    const double t0 = out.controlled.times[k - 1], t1 = out.controlled.times[k];
    const double e = 0.5 * (t1 - t0) *
                     (out.controlled.fields[k - 1].h.squaredNorm() + out.controlled.fields[k].h.squaredNorm());
    total += e;
    if (t1 <= window + 1e-12) early += e;
  }
  out.early_field_energy_fraction = total > 0 ? early / total : 1.0;

  std::size_t robust_index = out.controlled.snapshots.size() - 1;
  for (std::size_t r = 0; r < out.controlled.snapshots.size(); ++r) {
    if (out.controlled.times[out.controlled.snapshot_index[r]] >= window - 1e-12) {
      robust_index = r;
      break;
    }
  }
  out.robust_state = out.controlled.snapshots[robust_index];
  if (options.snapshot_every == 0) {
    out.controlled.snapshots.clear();
    out.controlled.snapshot_index.clear();
  }

  const ScenarioConfig free = uncontrolled(config);
  const ClosedLoop free_loop(free, PerturbationSpec{}, kernel);
  const std::size_t m = config.robust.ensemble_size;
  std::vector<Matrix> starts(m);
  for (std::size_t k = 0; k < m; ++k) {
    RngStream rng = RngStream(config.seed, kRobustEnsembleStream).substream(k);
    const Matrix u = tensor_product(haar_local_unitaries(sys, rng));
    starts[k] = PureState::from_amplitudes(u * psi0.amplitudes()).projector();
  }
  out.ensemble.resize(m);
  RunOptions ens = options;
  ens.snapshot_every = 0;
  ens.stop_below_tau = threshold;
  parallel_for(m, options.threads, [&](std::size_t k) {
    out.ensemble[k] = free_loop.run(starts[k], config.t_end, config.dt, config.record_every, ens);
    out.ensemble[k].seed = config.seed;
  });

  std::vector<double> lifetimes;
  for (const Trajectory& tr : out.ensemble) {
    out.ensemble_lifetimes.push_back(lifetime_report(tr, threshold));
    lifetimes.push_back(out.ensemble_lifetimes.back().lifetime);
  }
  out.median_ensemble_lifetime = median(lifetimes);
  out.lifetime_ratio = out.controlled_lifetime.lifetime / out.median_ensemble_lifetime;
  return out;
}

RotationSensitivity robustness_of_robust_state(const Matrix& state, double angle, std::size_t n_directions,
                                               RngStream& rng, const ScenarioConfig& config,
                                               const RunOptions& options) {
  require(angle >= 0 && std::isfinite(angle), "robustness_of_robust_state: angle must be >= 0");
  require(n_directions >= 1, "robustness_of_robust_state: n_directions must be >= 1");
  const QubitSystem sys = config.system();
  const ConcurrenceKernel kernel(sys);
  const ScenarioConfig free = uncontrolled(config);
  const ClosedLoop loop(free, PerturbationSpec{}, kernel);
  const double threshold = config.robust.lifetime_threshold;

  RunOptions opts = options;
  opts.snapshot_every = 0;
  opts.stop_below_tau = threshold;
  const Trajectory ref = loop.run(state, config.t_end, config.dt, config.record_every, opts);
  const LifetimeReport ref_life = lifetime_report(ref, threshold);
  const double t_fit = 0.1 * (ref_life.lifetime - ref.times.front());

  RotationSensitivity out;
  out.angle = angle;
  out.reference_rate = fit_decay_rate(ref, t_fit);

  std::vector<Matrix> rotations(n_directions);
  for (std::size_t k = 0; k < n_directions; ++k) {
    std::vector<Matrix> factors;
    for (int i = 0; i < sys.n_qubits(); ++i) {
      Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
      factors.push_back(bloch_rotation(angle, axis.normalized()));
    }
    rotations[k] = tensor_product(factors);
  }
  out.relative_increase.resize(n_directions);
  opts.stop_below_tau = -1;
  parallel_for(n_directions, options.threads, [&](std::size_t k) {
    const Matrix rho = rotations[k] * state * rotations[k].adjoint();
    // Only the fit window is needed.
    const double t_run = std::min(config.t_end, t_fit + 2 * config.dt * config.record_every);
    const Trajectory tr = loop.run(rho, t_run, config.dt, config.record_every, opts);
    out.relative_increase[k] = (fit_decay_rate(tr, t_fit) - out.reference_rate) / out.reference_rate;
  });
  for (double r : out.relative_increase) out.max_relative_increase = std::max(out.max_relative_increase, r);
  return out;
}

// ---------------------------------------------------------------------------
// Pulse robustness

namespace {

struct EnsembleAccumulator {
  std::vector<double> times;
  std::vector<std::vector<Matrix>> group_sums;  // [group][record]
  std::vector<std::size_t> group_counts;
  std::vector<std::vector<double>> run_tau;  // [run][record]
  std::vector<Trajectory> kept;
};

// Runs realizations 0..n_runs-1 in batches and reduces them in index order.
EnsembleAccumulator accumulate_ensemble(const ScenarioConfig& config, const PerturbationSpec& perturbation,
                                        std::size_t n_runs, std::size_t n_groups, const RunOptions& options,
                                        std::size_t keep_runs) {
  const ConcurrenceKernel kernel(config.system());
  const Matrix rho0 = prepared_state(config, kernel);
  EnsembleAccumulator acc;
  acc.group_sums.resize(n_groups);
  acc.group_counts.assign(n_groups, 0);
  acc.run_tau.resize(n_runs);

  const std::size_t batch = std::max<std::size_t>(1, 2 * std::max(1u, options.threads));
  RunOptions opts = options;
  opts.snapshot_every = 1;
  opts.stop_below_tau = -1;
  for (std::size_t begin = 0; begin < n_runs; begin += batch) {
    const std::size_t end = std::min(n_runs, begin + batch);
    std::vector<Trajectory> runs(end - begin);
    parallel_for(end - begin, options.threads, [&](std::size_t k) {
      const ClosedLoop loop(config, seeded(perturbation, config.seed, begin + k), kernel);
      runs[k] = loop.run(rho0, config.t_end, config.dt, config.record_every, opts);
      runs[k].seed = config.seed;
    });
    for (std::size_t k = 0; k < runs.size(); ++k) {
      const std::size_t m = begin + k;
      Trajectory& tr = runs[k];
      if (acc.times.empty()) acc.times = tr.times;
      const std::size_t g = m * n_groups / n_runs;
      auto& sums = acc.group_sums[g];
      if (sums.empty()) sums.assign(tr.snapshots.size(), Matrix::Zero(rho0.rows(), rho0.cols()));
      for (std::size_t r = 0; r < tr.snapshots.size(); ++r) sums[r] += tr.snapshots[r];
      ++acc.group_counts[g];
      acc.run_tau[m] = tr.tau;
      if (m < keep_runs) {
        tr.snapshots.clear();
        tr.snapshot_index.clear();
        acc.kept.push_back(std::move(tr));
      }
    }
  }
  return acc;
}

std::vector<double> mixture_series(const EnsembleAccumulator& acc, const ConcurrenceKernel& kernel,
                                   std::size_t skip_group) {
  const std::size_t n_records = acc.times.size();
  std::vector<double> out(n_records);
  for (std::size_t r = 0; r < n_records; ++r) {
    Matrix sum = Matrix::Zero(kernel.dim(), kernel.dim());
    std::size_t count = 0;
    for (std::size_t g = 0; g < acc.group_sums.size(); ++g) {
      if (g == skip_group || acc.group_counts[g] == 0) continue;
      sum += acc.group_sums[g][r];
      count += acc.group_counts[g];
    }
    out[r] = tau(sum / static_cast<double>(count), kernel);
  }
  return out;
}

}  // namespace

EnsembleAverage run_perturbed_ensemble(const ScenarioConfig& config, const PerturbationSpec& perturbation,
                                       std::size_t n_runs, const RunOptions& options, std::size_t keep_runs) {
  config.validate();
  require(n_runs >= 1, "run_perturbed_ensemble: n_runs must be >= 1");
  const ConcurrenceKernel kernel(config.system());
  EnsembleAccumulator acc = accumulate_ensemble(config, perturbation, n_runs, 1, options, keep_runs);
  EnsembleAverage out;
  out.times = acc.times;
  out.mixture_tau = mixture_series(acc, kernel, static_cast<std::size_t>(-1));
  out.mean_single_tau.assign(acc.times.size(), 0.0);
  for (const auto& run : acc.run_tau)
    for (std::size_t r = 0; r < run.size(); ++r) out.mean_single_tau[r] += run[r] / static_cast<double>(n_runs);
  out.first_runs = std::move(acc.kept);
  return out;
}

SweepPoint sweep_point(const ScenarioConfig& config, PerturbationKind kind, double epsilon, std::size_t n_runs,
                       const RunOptions& options) {
  config.validate();
  const double t0 = config.pulse.window_start, t1 = config.pulse.window_end;
  SweepPoint pt;
  pt.epsilon = epsilon;
  PerturbationSpec spec = config.perturbation;
  spec.kind = kind;
  spec.epsilon = epsilon;

  if (epsilon == 0 || kind == PerturbationKind::None) {
    const ConcurrenceKernel kernel(config.system());
    RunOptions opts = options;
    opts.snapshot_every = 0;
    const Trajectory tr = run_single(config, seeded(PerturbationSpec{}, config.seed, 0), kernel, opts);
    pt.tau_bar = time_average(tr.times, tr.tau, t0, t1);
    return pt;
  }

  const ConcurrenceKernel kernel(config.system());
  const std::size_t n_groups = std::min<std::size_t>(10, n_runs);
  const EnsembleAccumulator acc = accumulate_ensemble(config, spec, n_runs, n_groups, options, 0);

  if (kind == PerturbationKind::WhiteNoise) {
    // Random errors: entanglement of the mixed state, delete-a-group jackknife.
    pt.tau_bar = time_average(acc.times, mixture_series(acc, kernel, static_cast<std::size_t>(-1)), t0, t1);
    if (n_groups >= 2) {
      std::vector<double> loo(n_groups);
      double mean = 0;
      for (std::size_t g = 0; g < n_groups; ++g) {
        loo[g] = time_average(acc.times, mixture_series(acc, kernel, g), t0, t1);
        mean += loo[g] / static_cast<double>(n_groups);
      }
      double ss = 0;
      for (double v : loo) ss += (v - mean) * (v - mean);
      pt.tau_bar_stderr = std::sqrt(ss * static_cast<double>(n_groups - 1) / static_cast<double>(n_groups));
    }
  } else {
    // Systematic errors: each run prepares a pure state; average per-run tau.
    std::vector<double> per_run(n_runs);
    double mean = 0;
    for (std::size_t m = 0; m < n_runs; ++m) {
      per_run[m] = time_average(acc.times, acc.run_tau[m], t0, t1);
      mean += per_run[m] / static_cast<double>(n_runs);
    }
    pt.tau_bar = mean;
    if (n_runs >= 2) {
      double ss = 0;
      for (double v : per_run) ss += (v - mean) * (v - mean);
      pt.tau_bar_stderr = std::sqrt(ss / static_cast<double>(n_runs - 1) / static_cast<double>(n_runs));
    }
  }
  return pt;
}

std::vector<SweepPoint> run_epsilon_sweep(const ScenarioConfig& config, PerturbationKind kind,
                                          const RunOptions& options) {
  std::vector<SweepPoint> out;
  for (double eps : config.pulse.sweep_epsilons) {
    out.push_back(sweep_point(config, kind, eps, config.pulse.sweep_realizations, options));
  }
  return out;
}

std::vector<SweepPoint> run_h_max_sweep(const ScenarioConfig& config, const RunOptions& options) {
  config.validate();
  require(!config.h_max_sweep.empty(), "run_h_max_sweep: h_max_sweep is empty");
  const ConcurrenceKernel kernel(config.system());
  std::vector<SweepPoint> out(config.h_max_sweep.size());
  RunOptions opts = options;
  opts.snapshot_every = 0;
  parallel_for(out.size(), options.threads, [&](std::size_t k) {
    ScenarioConfig c = config;
    c.policy.h_max = config.h_max_sweep[k];
    const Trajectory tr = run_single(c, seeded(c.perturbation, c.seed, c.perturbation.stream), kernel, opts);
    out[k].epsilon = c.policy.h_max;
    out[k].tau_bar = time_average(tr.times, tr.tau, c.pulse.window_start, c.pulse.window_end);
  });
  return out;
}

QuadraticFit fit_quadratic(const std::vector<SweepPoint>& points) {
  require(points.size() >= 3, "fit_quadratic: need at least three points");
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd x(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double e = points[i].epsilon;
    x.row(i) << 1.0, e, e * e;
    y(i) = points[i].tau_bar;
  }
  const Eigen::Matrix3d xtx_inv = (x.transpose() * x).inverse();
  const Eigen::Vector3d beta = xtx_inv * x.transpose() * y;
  const Eigen::VectorXd resid = y - x * beta;
  const double dof_scale = n > 3 ? static_cast<double>(n) / static_cast<double>(n - 3) : 1.0;
  Eigen::VectorXd var(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    var(i) = points[i].tau_bar_stderr * points[i].tau_bar_stderr + dof_scale * resid(i) * resid(i);
  }
  const Eigen::Matrix3d cov = xtx_inv * x.transpose() * var.asDiagonal() * x * xtx_inv;
  QuadraticFit fit;
  for (int k = 0; k < 3; ++k) {
    fit.coefficients[k] = beta(k);
    fit.stderr[k] = std::sqrt(std::max(0.0, cov(k, k)));
  }
  return fit;
}

PulseRobustnessResult run_pulse_robustness(const ScenarioConfig& config, const RunOptions& options) {
  config.validate();
  require(config.perturbation.kind != PerturbationKind::None, "run_pulse_robustness: perturbation kind must be set");
  const ConcurrenceKernel kernel(config.system());
  RunOptions opts = options;
  opts.snapshot_every = 0;

  PulseRobustnessResult out;
  out.unperturbed = run_single(config, PerturbationSpec{}, kernel, opts);
  out.perturbed = run_single(config, seeded(config.perturbation, config.seed, 0), kernel, opts);
  const double peak0 = *std::max_element(out.unperturbed.tau.begin(), out.unperturbed.tau.end());
  const double peak1 = *std::max_element(out.perturbed.tau.begin(), out.perturbed.tau.end());
  out.peak_reduction = 1.0 - peak1 / peak0;

  const EnsembleAverage mix = run_perturbed_ensemble(config, config.perturbation, config.pulse.mixture_size, options);
  out.mixture_times = mix.times;
  out.mixture_tau = mix.mixture_tau;
  out.mean_single_tau = mix.mean_single_tau;
  out.sweep = run_epsilon_sweep(config, config.perturbation.kind, options);
  return out;
}

// ---------------------------------------------------------------------------
// Series helpers

double time_average(const std::vector<double>& times, const std::vector<double>& values, double t0, double t1) {
  require(times.size() == values.size(), "time_average: size mismatch");
  double area = 0, first = 0, last = 0;
  bool started = false;
  double prev_t = 0, prev_v = 0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] < t0 - 1e-12 || times[k] > t1 + 1e-12) continue;
    if (started) area += 0.5 * (times[k] - prev_t) * (values[k] + prev_v);
    if (!started) first = times[k];
    started = true;
    last = times[k];
    prev_t = times[k];
    prev_v = values[k];
    ++count;
  }
  require(count > 0, "time_average: no samples in window");
  if (count == 1 || last == first) return prev_v;
  return area / (last - first);
}

std::optional<double> first_crossing(const std::vector<double>& times, const std::vector<double>& values,
                                     double level) {
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (values[k] >= level) {
      if (k == 0) return times[0];
      const double y0 = values[k - 1], y1 = values[k];
      return times[k - 1] + (times[k] - times[k - 1]) * (level - y0) / (y1 - y0);
    }
  }
  return std::nullopt;
}

double sample_at(const std::vector<double>& times, const std::vector<double>& values, double t) {
  require(!times.empty() && times.size() == values.size(), "sample_at: bad series");
  if (t <= times.front()) return values.front();
  if (t >= times.back()) return values.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - times.begin());
  const double w = (t - times[k - 1]) / (times[k] - times[k - 1]);
  return (1 - w) * values[k - 1] + w * values[k];
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace lyapctl
