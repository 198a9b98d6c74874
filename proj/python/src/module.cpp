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

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lyapctl/controller.hpp"
#include "lyapctl/entanglement.hpp"
#include "lyapctl/experiments.hpp"
#include "lyapctl/io.hpp"

namespace py = pybind11;
using namespace lyapctl;

namespace {

int qubits_of(const Matrix& rho) {
  int n = 0;
  while ((Eigen::Index{1} << n) < rho.rows()) ++n;
  if ((Eigen::Index{1} << n) != rho.rows() || rho.rows() != rho.cols()) {
    throw std::invalid_argument("expected a square 2^N x 2^N matrix");
  }
  return n;
}

const ConcurrenceKernel& kernel_for(int n) {
  // One kernel per size; they are immutable after construction.
  static std::vector<std::unique_ptr<ConcurrenceKernel>> cache(kMaxQubits + 1);
  if (n < kMinQubits || n > kMaxQubits) throw std::invalid_argument("unsupported number of qubits");
  if (!cache[n]) cache[n] = std::make_unique<ConcurrenceKernel>(QubitSystem(n));
  return *cache[n];
}

DephasingSpec dephasing_for(int n, const std::vector<double>& gamma) {
  if (gamma.empty()) return DephasingSpec::none(QubitSystem(n));
  if (gamma.size() == 1) return DephasingSpec::uniform(QubitSystem(n), gamma.front());
  return DephasingSpec::with_rates(QubitSystem(n), gamma);
}

LocalField field_from(const Eigen::MatrixXd& h) {
  if (h.cols() != 3) throw std::invalid_argument("field must be N x 3");
  return LocalField{h};
}

py::dict trajectory_dict(const Trajectory& tr) {
  py::dict d;
  d["times"] = tr.times;
  d["tau"] = tr.tau;
  d["purity"] = tr.purity;
  std::vector<Eigen::MatrixXd> fields;
  for (const LocalField& f : tr.fields) fields.emplace_back(f.h);
  d["fields"] = fields;
  d["final_state"] = tr.final_state;
  d["steps"] = tr.steps;
  return d;
}

}  // namespace

PYBIND11_MODULE(_lyapctl, m) {
  m.doc() = "Time-local control of multi-qubit entanglement";
  m.attr("__version__") = std::string(code_version());

  py::register_exception<NumericalAbort>(m, "NumericalAbort", PyExc_ArithmeticError);

  m.def("pauli", [](const std::string& axis) { return pauli(axis); }, py::arg("axis"));
  m.def("kron", &kron, py::arg("a"), py::arg("b"));
  m.def(
      "embed_local", [](const Matrix& op, int site, int n) { return embed_local(op, site, QubitSystem(n)); },
      py::arg("op"), py::arg("site"), py::arg("n_qubits"));
  m.def(
      "haar_local_unitaries",
      [](int n, std::uint64_t seed, std::uint64_t stream) {
        RngStream rng(seed, stream);
        return haar_local_unitaries(QubitSystem(n), rng);
      },
      py::arg("n_qubits"), py::arg("seed") = 0, py::arg("stream") = 0);

  m.def(
      "ising_hamiltonian",
      [](const Eigen::MatrixXd& lambda) {
        const CouplingMatrix c(lambda);
        return ising_hamiltonian(c, QubitSystem(c.n_qubits()));
      },
      py::arg("couplings"));
  m.def("reference_couplings", [] { return CouplingMatrix::reference_four_spin().matrix(); });
  m.def(
      "local_field_hamiltonian",
      [](const Eigen::MatrixXd& h) {
        const LocalField f = field_from(h);
        return local_field_hamiltonian(f, QubitSystem(f.n_qubits()));
      },
      py::arg("field"));

  m.def("tau", [](const Matrix& rho) { return tau(rho, kernel_for(qubits_of(rho))); }, py::arg("rho"));
  m.def(
      "pure_concurrence",
      [](const Vector& psi) {
        const PureState s = PureState::from_amplitudes(psi);
        return pure_concurrence(s, kernel_for(s.n_qubits()));
      },
      py::arg("psi"));
  m.def(
      "tau_dot",
      [](const Matrix& rho, const Matrix& h, const std::vector<double>& gamma) {
        const int n = qubits_of(rho);
        return tau_dot(rho, h, dephasing_for(n, gamma), kernel_for(n));
      },
      py::arg("rho"), py::arg("hamiltonian"), py::arg("gamma") = std::vector<double>{});
  m.def(
      "tau_ddot",
      [](const Matrix& rho, const Matrix& h_sys, const Eigen::MatrixXd& field, const std::vector<double>& gamma) {
        const int n = qubits_of(rho);
        return tau_ddot(rho, h_sys, field_from(field), dephasing_for(n, gamma), kernel_for(n));
      },
      py::arg("rho"), py::arg("h_sys"), py::arg("field"), py::arg("gamma") = std::vector<double>{});
  m.def(
      "gradient_x",
      [](const Matrix& rho, const Matrix& h_sys, const std::vector<double>& gamma) {
        const int n = qubits_of(rho);
        return Eigen::MatrixXd(gradient_x(rho, h_sys, dephasing_for(n, gamma), kernel_for(n)).x);
      },
      py::arg("rho"), py::arg("h_sys"), py::arg("gamma") = std::vector<double>{});
  m.def(
      "control_field",
      [](const Eigen::MatrixXd& x, double h_max, double tol) {
        ControlPolicy p;
        p.h_max = h_max;
        p.x_tolerance = tol;
        return Eigen::MatrixXd(control_field(ControlGradient{x}, p).h);
      },
      py::arg("x"), py::arg("h_max"), py::arg("x_tolerance") = 1e-9);
  m.def(
      "build_concurrence_operator",
      [](int n) {
        const ConcurrenceOperator op = build_concurrence_operator(QubitSystem(n));
        py::dict d;
        d["a"] = op.a;
        d["v"] = op.v;
        d["p_minus"] = op.p_minus;
        d["normalization"] = op.normalization;
        d["n_patterns"] = op.n_patterns;
        return d;
      },
      py::arg("n_qubits"));

  m.def("optimal_four_qubit_state", [] { return optimal_four_qubit_state().amplitudes(); });
  m.def(
      "find_state_with_tau",
      [](double target, int n) {
        const GhzFamilyState s = find_state_with_tau(target, kernel_for(n));
        return py::make_tuple(s.state.amplitudes(), s.p);
      },
      py::arg("target"), py::arg("n_qubits") = 4);
  m.def(
      "lu_fidelity",
      [](const Vector& phi, const Vector& psi, std::size_t n_starts, std::uint64_t seed) {
        RngStream rng(seed, 0);
        return lu_fidelity(PureState::from_amplitudes(phi), PureState::from_amplitudes(psi), n_starts, rng);
      },
      py::arg("phi"), py::arg("psi"), py::arg("n_starts") = 32, py::arg("seed") = 0);

  m.def("default_config", [] { return emit_config(parse_config("{}")); });
  m.def(
      "normalize_config", [](const std::string& text) { return emit_config(parse_config(text)); }, py::arg("json"),
      "Parses a JSON config (defaults filled in, unknown keys rejected) and returns the canonical form.");
  m.def(
      "run",
      [](const std::string& text, unsigned threads) {
        const ScenarioConfig c = parse_config(text);
        RunOptions o;
        o.threads = threads;
        Trajectory tr;
        {
          py::gil_scoped_release release;
          tr = c.scenario == Scenario::Coherent ? run_coherent(c, o) : run_dissipative(c, o);
        }
        return trajectory_dict(tr);
      },
      py::arg("config_json") = "{}", py::arg("threads") = 1,
      "Single closed-loop trajectory for the given JSON config.");
  m.def(
      "fidelity_track",
      [](const std::string& text, std::size_t n_starts, unsigned threads) {
        const ScenarioConfig c = parse_config(text);
        RunOptions o;
        o.threads = threads;
        FidelityTrack ft;
        {
          py::gil_scoped_release release;
          ft = run_fidelity_track(c, n_starts, o);
        }
        py::dict d = trajectory_dict(ft.trajectory);
        d["fidelity_times"] = ft.times;
        d["fidelity"] = std::vector<std::vector<double>>(ft.fidelity.begin(), ft.fidelity.end());
        return d;
      },
      py::arg("config_json") = "{}", py::arg("n_starts") = 32, py::arg("threads") = 1);
}
