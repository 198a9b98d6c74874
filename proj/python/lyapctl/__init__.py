# Copyright 2026 The lyapctl Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Time-local control of multi-qubit entanglement (Python bindings)."""

from ._lyapctl import (
    NumericalAbort,
    __version__,
    build_concurrence_operator,
    control_field,
    default_config,
    embed_local,
    fidelity_track,
    find_state_with_tau,
    gradient_x,
    haar_local_unitaries,
    ising_hamiltonian,
    kron,
    local_field_hamiltonian,
    lu_fidelity,
    normalize_config,
    optimal_four_qubit_state,
    pauli,
    pure_concurrence,
    reference_couplings,
    run,
    tau,
    tau_ddot,
    tau_dot,
)

__all__ = [
    "NumericalAbort",
    "__version__",
    "build_concurrence_operator",
    "control_field",
    "default_config",
    "embed_local",
    "fidelity_track",
    "find_state_with_tau",
    "gradient_x",
    "haar_local_unitaries",
    "ising_hamiltonian",
    "kron",
    "local_field_hamiltonian",
    "lu_fidelity",
    "normalize_config",
    "optimal_four_qubit_state",
    "pauli",
    "pure_concurrence",
    "reference_couplings",
    "run",
    "tau",
    "tau_ddot",
    "tau_dot",
]
