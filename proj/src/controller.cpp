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

#include "lyapctl/controller.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lyapctl {
namespace {

// Domain tags keep the random draws of different perturbation kinds apart.
constexpr std::uint64_t kNoiseDomain = 0x6e6f697365ULL;   // "noise"
constexpr std::uint64_t kOffsetDomain = 0x6f6666736574ULL;  // "offset"
constexpr std::uint64_t kCouplingDomain = 0x6c616d626461ULL;  // "lambda"

std::uint64_t domain_seed(const PerturbationSpec& spec, std::uint64_t domain) {
  return counter_hash(spec.seed, domain, 0);
}

}  // namespace

void ControlPolicy::validate() const {
  if (!(h_max >= 0) || !std::isfinite(h_max)) throw std::invalid_argument("ControlPolicy: h_max must be >= 0");
  if (!(x_tolerance >= 0)) throw std::invalid_argument("ControlPolicy: x_tolerance must be >= 0");
  if (kick && (!std::isfinite(kick->angle()) || kick->duration < 0)) {
    throw std::invalid_argument("ControlPolicy: invalid kick");
  }
}

LocalField control_field(const ControlGradient& x, const ControlPolicy& policy) {
  LocalField h = LocalField::zeros(x.n_qubits());
  if (policy.h_max == 0) return h;
  for (int i = 0; i < x.n_qubits(); ++i) {
    const double norm = x.qubit_norm(i);
    if (norm > policy.x_tolerance && norm > 0) h.h.row(i) = (policy.h_max / norm) * x.x.row(i);
  }
  return h;
}

OptimalityReport optimality_check(const Matrix& rho, const Matrix& h_sys, const DephasingSpec& diss,
                                  const ControlPolicy& policy, RngStream& rng, std::size_t n_samples,
                                  const ConcurrenceKernel& kernel) {
  if (n_samples < 1) throw std::invalid_argument("optimality_check: n_samples must be >= 1");
  const ControlGradient x = gradient_x(rho, h_sys, diss, kernel);
  const LocalField h_opt = control_field(x, policy);
  const int n = x.n_qubits();

  OptimalityReport report;
  report.n_samples = n_samples;
  report.tau_ddot_optimal = tau_ddot(rho, h_sys, h_opt, diss, kernel);
  report.tau_ddot_antipodal = tau_ddot(rho, h_sys, LocalField{-h_opt.h}, diss, kernel);
  for (int i = 0; i < n; ++i) {
    if (h_opt.qubit_norm(i) > 0) report.predicted_gap += 2.0 * policy.h_max * x.qubit_norm(i);
  }

  const double slack = 1e-9 * std::max(1.0, std::abs(report.tau_ddot_optimal));
  for (std::size_t s = 0; s < n_samples; ++s) {
    LocalField trial = LocalField::zeros(n);
    for (int i = 0; i < n; ++i) {
      const double target = h_opt.qubit_norm(i);
      if (target == 0) continue;
      Eigen::Vector3d dir(rng.normal(), rng.normal(), rng.normal());
      trial.h.row(i) = (target / dir.norm()) * dir.transpose();
    }
    const double excess = tau_ddot(rho, h_sys, trial, diss, kernel) - report.tau_ddot_optimal;
    if (excess > 0) report.max_violation = std::max(report.max_violation, excess);
    if (excess > slack) ++report.n_violations;
  }
  return report;
}

Matrix kick_unitary(const KickSpec& kick, const QubitSystem& sys) {
  const double theta = kick.angle();
  const Matrix single = std::cos(theta) * Matrix::Identity(2, 2) - cplx(0, std::sin(theta)) * pauli(kick.axis);
  std::vector<Matrix> factors(sys.n_qubits(), single);
  return tensor_product(factors);
}

Matrix initial_kick(const Matrix& rho0, const Matrix& h_sys, const DephasingSpec& diss, const ControlPolicy& policy,
                    const ConcurrenceKernel& kernel) {
  if (!policy.kick || policy.h_max == 0) return rho0;
  const ControlGradient x = gradient_x(rho0, h_sys, diss, kernel);
  for (int i = 0; i < x.n_qubits(); ++i) {
    if (x.qubit_norm(i) > policy.x_tolerance) return rho0;
  }
  if (std::abs(natural_curvature(rho0, h_sys, diss, kernel)) > policy.x_tolerance) return rho0;
  const Matrix u = kick_unitary(*policy.kick, QubitSystem(kernel.n_qubits()));
  return u * rho0 * u.adjoint();
}

PerturbationKind parse_perturbation_kind(std::string_view name) {
  if (name == "none") return PerturbationKind::None;
  if (name == "white_noise") return PerturbationKind::WhiteNoise;
  if (name == "constant_offset") return PerturbationKind::ConstantOffset;
  if (name == "coupling_error") return PerturbationKind::CouplingError;
  throw std::invalid_argument("unknown perturbation kind '" + std::string(name) + "'");
}

std::string_view perturbation_kind_name(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::None:
      return "none";
    case PerturbationKind::WhiteNoise:
      return "white_noise";
    case PerturbationKind::ConstantOffset:
      return "constant_offset";
    case PerturbationKind::CouplingError:
      return "coupling_error";
  }
  return "none";
}

void PerturbationSpec::validate() const {
  if (!(epsilon >= 0) || !std::isfinite(epsilon)) throw std::invalid_argument("perturbation: epsilon must be >= 0");
  if (kind == PerturbationKind::WhiteNoise && !(cutoff > 0)) {
    throw std::invalid_argument("perturbation: white-noise cutoff must be > 0");
  }
}

double white_noise_value(const PerturbationSpec& spec, int n_qubits, int qubit, int component, double t) {
  const auto bin = static_cast<std::uint64_t>(std::floor(std::max(0.0, t) / spec.noise_interval()));
  const std::uint64_t counter = bin * 3 * static_cast<std::uint64_t>(n_qubits) + 3 * qubit + component;
  return 2.0 * counter_uniform(domain_seed(spec, kNoiseDomain), spec.stream, counter) - 1.0;
}

LocalField apply_white_noise(const LocalField& h, const PerturbationSpec& spec, double h_max, double t) {
  if (spec.epsilon == 0) return h;
  LocalField out = h;
  const int n = h.n_qubits();
  const double scale = spec.epsilon * h_max;
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) out.h(i, c) += scale * white_noise_value(spec, n, i, c, t);
  return out;
}

Eigen::MatrixX3d offset_signs(const PerturbationSpec& spec, int n_qubits) {
  Eigen::MatrixX3d s(n_qubits, 3);
  const std::uint64_t seed = domain_seed(spec, kOffsetDomain);
  for (int i = 0; i < n_qubits; ++i)
    for (int c = 0; c < 3; ++c) s(i, c) = (counter_hash(seed, spec.stream, 3 * i + c) >> 63) ? 1.0 : -1.0;
  return s;
}

LocalField apply_offset(const LocalField& h, const PerturbationSpec& spec, double h_max) {
  if (spec.epsilon == 0) return h;
  return LocalField{h.h + (spec.epsilon * h_max) * offset_signs(spec, h.n_qubits())};
}

CouplingMatrix perturb_couplings(const CouplingMatrix& lambda, const PerturbationSpec& spec) {
  if (spec.epsilon == 0) return lambda;
  const int n = lambda.n_qubits();
  Eigen::MatrixXd out = lambda.matrix();
  const std::uint64_t seed = domain_seed(spec, kCouplingDomain);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double u = 2.0 * counter_uniform(seed, spec.stream, static_cast<std::uint64_t>(i * n + j)) - 1.0;
      out(i, j) = out(j, i) = lambda(i, j) * (1.0 + spec.epsilon * u);
    }
  }
  return CouplingMatrix(std::move(out));
}

}  // namespace lyapctl
