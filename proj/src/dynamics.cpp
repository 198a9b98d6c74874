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

#include "lyapctl/dynamics.hpp"

#include <cmath>
#include <string>

namespace lyapctl {

DephasingSpec DephasingSpec::none(const QubitSystem& sys) {
  return with_rates(sys, std::vector<double>(sys.n_qubits(), 0.0));
}

DephasingSpec DephasingSpec::uniform(const QubitSystem& sys, double gamma) {
  return with_rates(sys, std::vector<double>(sys.n_qubits(), gamma));
}

DephasingSpec DephasingSpec::with_rates(const QubitSystem& sys, std::vector<double> rates) {
  return DephasingSpec(sys, std::move(rates), std::vector<Matrix>(sys.n_qubits(), pauli(Axis::Z)));
}

DephasingSpec::DephasingSpec(const QubitSystem& sys, std::vector<double> rates, std::vector<Matrix> operators)
    : rates_(std::move(rates)), ops_(std::move(operators)) {
  const int n = sys.n_qubits();
  if (static_cast<int>(rates_.size()) != n || static_cast<int>(ops_.size()) != n) {
    throw std::invalid_argument("DephasingSpec: need one rate and one operator per qubit");
  }
  for (int i = 0; i < n; ++i) {
    if (!(rates_[i] >= 0.0) || !std::isfinite(rates_[i])) {
      throw std::invalid_argument("DephasingSpec: rate of qubit " + std::to_string(i + 1) + " must be >= 0");
    }
    if (ops_[i].rows() != 2 || ops_[i].cols() != 2 || !is_hermitian(ops_[i], 1e-12)) {
      throw std::invalid_argument("DephasingSpec: operator of qubit " + std::to_string(i + 1) +
                                  " must be a Hermitian 2x2 matrix");
    }
    if (rates_[i] > 0) active_ = true;
    if (std::abs(ops_[i](0, 1)) != 0.0 || std::abs(ops_[i](1, 0)) != 0.0) diagonal_ = false;
  }

  const Eigen::Index d = sys.dim();
  if (diagonal_) {
    weights_ = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < n; ++i) {
      if (rates_[i] == 0) continue;
      const int shift = n - 1 - i;
      const double l0 = ops_[i](0, 0).real();
      const double l1 = ops_[i](1, 1).real();
      for (Eigen::Index a = 0; a < d; ++a) {
        const double la = ((a >> shift) & 1) ? l1 : l0;
        for (Eigen::Index b = 0; b < d; ++b) {
          const double lb = ((b >> shift) & 1) ? l1 : l0;
          weights_(a, b) += rates_[i] * (la * lb - 0.5 * (la * la + lb * lb));
        }
      }
    }
  } else {
    for (int i = 0; i < n; ++i) {
      embedded_.push_back(embed_local(ops_[i], i + 1, sys));
      embedded_sq_.push_back(embedded_.back().adjoint() * embedded_.back());
    }
  }
}

Matrix DephasingSpec::apply(const Matrix& rho) const {
  if (!active_) return Matrix::Zero(rho.rows(), rho.cols());
  if (diagonal_) {
    if (rho.rows() != weights_.rows() || rho.cols() != weights_.cols()) {
      throw std::invalid_argument("dissipator: dimension mismatch");
    }
    return (rho.array() * weights_.array()).matrix();
  }
  if (rho.rows() != embedded_.front().rows()) throw std::invalid_argument("dissipator: dimension mismatch");
  Matrix out = Matrix::Zero(rho.rows(), rho.cols());
  for (std::size_t i = 0; i < embedded_.size(); ++i) {
    if (rates_[i] == 0) continue;
    const Matrix& l = embedded_[i];
    const Matrix& ll = embedded_sq_[i];
    out += rates_[i] * (l * rho * l.adjoint() - 0.5 * (ll * rho + rho * ll));
  }
  return out;
}

CouplingMatrix::CouplingMatrix(Eigen::MatrixXd lambda) : lambda_(std::move(lambda)) {
  if (lambda_.rows() != lambda_.cols()) throw std::invalid_argument("CouplingMatrix: matrix must be square");
  for (Eigen::Index i = 0; i < lambda_.rows(); ++i) {
    if (lambda_(i, i) != 0.0) throw std::invalid_argument("CouplingMatrix: diagonal must be zero");
    for (Eigen::Index j = 0; j < lambda_.cols(); ++j) {
      if (!std::isfinite(lambda_(i, j))) throw std::invalid_argument("CouplingMatrix: non-finite coupling");
      if (lambda_(i, j) != lambda_(j, i)) throw std::invalid_argument("CouplingMatrix: matrix must be symmetric");
    }
  }
}

CouplingMatrix CouplingMatrix::zeros(int n_qubits) {
  return CouplingMatrix(Eigen::MatrixXd::Zero(n_qubits, n_qubits));
}

CouplingMatrix CouplingMatrix::reference_four_spin() {
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(4, 4);
  auto set = [&](int i, int j, double v) { l(i - 1, j - 1) = l(j - 1, i - 1) = v; };
  set(1, 2, 9.8);
  set(1, 3, 0.1);
  set(1, 4, 0.3);
  set(2, 3, 1.3);
  set(2, 4, 0.5);
  set(3, 4, 2.7);
  return CouplingMatrix(std::move(l));
}

Matrix ising_hamiltonian(const CouplingMatrix& lambda, const QubitSystem& sys) {
  const int n = sys.n_qubits();
  if (lambda.n_qubits() != n) throw std::invalid_argument("ising_hamiltonian: coupling matrix size mismatch");
  const Eigen::Index d = sys.dim();
  Matrix h = Matrix::Zero(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    double e = 0;
    for (int i = 0; i < n; ++i) {
      const double si = ((a >> (n - 1 - i)) & 1) ? -1.0 : 1.0;
      for (int j = i + 1; j < n; ++j) {
        const double sj = ((a >> (n - 1 - j)) & 1) ? -1.0 : 1.0;
        e += lambda(i, j) * si * sj;
      }
    }
    h(a, a) = e;
  }
  return h;
}

Matrix local_field_hamiltonian(const LocalField& h, const QubitSystem& sys) {
  const int n = sys.n_qubits();
  if (h.n_qubits() != n) throw std::invalid_argument("local_field_hamiltonian: field size mismatch");
  const Eigen::Index d = sys.dim();
  Matrix out = Matrix::Zero(d, d);
  // Each local Pauli flips (x, y) or weights (z) a single bit; fill entries directly.
  for (int i = 0; i < n; ++i) {
    const double hx = h.h(i, 0), hy = h.h(i, 1), hz = h.h(i, 2);
    if (hx == 0 && hy == 0 && hz == 0) continue;
    const Eigen::Index mask = Eigen::Index{1} << (n - 1 - i);
    for (Eigen::Index a = 0; a < d; ++a) {
      const bool up = (a & mask) == 0;  // qubit in |0>
      out(a, a) += up ? hz : -hz;
      // <a| (hx sx + hy sy) |a^mask>: sx -> 1, sy -> -i if a is |0>, +i if |1>.
      out(a, a ^ mask) += cplx(hx, up ? -hy : hy);
    }
  }
  return out;
}

Matrix dissipator(const Matrix& rho, const DephasingSpec& spec) { return spec.apply(rho); }

Matrix lindblad_rhs(const Matrix& rho, const Matrix& hamiltonian, const DephasingSpec& spec) {
  if (rho.rows() != hamiltonian.rows() || rho.cols() != hamiltonian.cols()) {
    throw std::invalid_argument("lindblad_rhs: dimension mismatch");
  }
  Matrix hr = hamiltonian * rho;
  // -i [H, rho] = -i (H rho - (H rho)^dagger) for Hermitian H, rho.
  Matrix out = cplx(0, -1) * (hr - hr.adjoint());
  if (spec.active()) out += spec.apply(rho);
  return out;
}

namespace {

bool all_finite(const Matrix& m) {
  return m.allFinite();
}

}  // namespace

Trajectory propagate(const Matrix& rho0, const RhsFunction& rhs, double t_end, double dt, const Recorder& recorder) {
  if (!(dt > 0) || !std::isfinite(dt)) throw std::invalid_argument("propagate: dt must be positive");
  if (!(t_end >= 0) || !std::isfinite(t_end)) throw std::invalid_argument("propagate: t_end must be >= 0");
  if (!recorder.tau) throw std::invalid_argument("propagate: recorder needs a tau sampler");
  const std::size_t every = recorder.every == 0 ? 1 : recorder.every;

  const auto n_steps = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
  Trajectory traj;
  Matrix rho = rho0;
  std::size_t n_records = 0;

  auto record = [&](std::size_t step, double t) {
    traj.times.push_back(t);
    traj.tau.push_back(recorder.tau(rho));
    traj.purity.push_back((rho * rho).trace().real());
    if (recorder.field) traj.fields.push_back(recorder.field(t, rho));
    if (recorder.snapshot_every > 0 && n_records % recorder.snapshot_every == 0) {
      traj.snapshot_index.push_back(traj.times.size() - 1);
      traj.snapshots.push_back(rho);
    }
    ++n_records;
    traj.steps = step;
  };

  if (!all_finite(rho)) throw NumericalAbort(0, 0.0);
  record(0, 0.0);
  for (std::size_t step = 1; step <= n_steps; ++step) {
    const double t0 = static_cast<double>(step - 1) * dt;
    const double t1 = step == n_steps ? t_end : static_cast<double>(step) * dt;
    const double h = t1 - t0;

    if (recorder.begin_step) recorder.begin_step(t0, rho);
    const Matrix k1 = rhs(t0, rho);
    const Matrix k2 = rhs(t0 + 0.5 * h, rho + (0.5 * h) * k1);
    const Matrix k3 = rhs(t0 + 0.5 * h, rho + (0.5 * h) * k2);
    const Matrix k4 = rhs(t1, rho + h * k3);
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    rho = 0.5 * (rho + rho.adjoint()).eval();
    const cplx tr = rho.trace();
    if (!all_finite(rho) || !std::isfinite(tr.real())) throw NumericalAbort(step, t1);
    if (std::abs(tr - 1.0) > 1e-10) rho /= tr.real();

    if (step % every == 0 || step == n_steps) {
      record(step, t1);
      if (recorder.stop && recorder.stop(traj)) break;
    }
  }
  traj.final_state = rho;
  return traj;
}

}  // namespace lyapctl
