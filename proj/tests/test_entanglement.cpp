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

#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "lyapctl/controller.hpp"
#include "lyapctl/entanglement.hpp"
#include "lyapctl/experiments.hpp"
#include "lyapctl/rng.hpp"
#include "oracles.hpp"

namespace lyapctl {
namespace {

using namespace oracle;

Matrix product_rotation(int n, RngStream& rng) { return tensor_product(haar_local_unitaries(QubitSystem(n), rng)); }

TEST(Operator, DenseAndMatrixFreeAgree) {
  RngStream rng(1, 0);
  for (int n = 2; n <= 5; ++n) {
    const QubitSystem sys(n);
    const ConcurrenceOperator op = build_concurrence_operator(sys);
    const ConcurrenceKernel kernel(sys);
    EXPECT_EQ(op.n_patterns, (std::size_t{1} << (n - 1)) - 1);
    EXPECT_DOUBLE_EQ(op.normalization, std::pow(2.0, 1.0 - n / 2.0));
    EXPECT_TRUE(is_hermitian(op.a, 1e-13));
    for (int k = 0; k < 3; ++k) {
      const Matrix p = random_state(n, rng), q = random_state(n, rng);
      EXPECT_NEAR(tau(p, op), tau(p, kernel), 1e-12);
      EXPECT_LT((op.contract(q) - kernel.contract(q)).cwiseAbs().maxCoeff(), 1e-12);
      EXPECT_LT(std::abs(kernel.bilinear(p, q) - kernel.bilinear(q, p)), 1e-13);
    }
  }
}

TEST(Tau, ReferenceStates) {
  const QubitSystem sys(4);
  const ConcurrenceKernel k(sys);
  EXPECT_NEAR(tau(PureState::basis_state(sys, 0).projector(), k), 0.0, 1e-14);
  EXPECT_NEAR(tau(PureState::uniform_product(sys, 0.73, 0.51 * std::numbers::pi).projector(), k), 0.0, 1e-14);
  EXPECT_NEAR(tau(optimal_four_qubit_state().projector(), k), 1.0, 1e-13);
  Vector bell00 = Vector::Zero(16);
  bell00(0b0000) = bell00(0b1100) = 1 / std::sqrt(2.0);
  EXPECT_NEAR(tau(PureState::from_amplitudes(bell00).projector(), k), 0.5, 1e-13);
  Vector ghz = Vector::Zero(16);
  ghz(0) = ghz(15) = 1 / std::sqrt(2.0);
  EXPECT_NEAR(tau(PureState::from_amplitudes(ghz).projector(), k), 0.875, 1e-13);
}

TEST(Tau, EqualsSquaredPureConcurrence) {
  RngStream rng(2, 0);
  for (int n = 2; n <= 5; ++n) {
    const ConcurrenceKernel k{QubitSystem(n)};
    for (int s = 0; s < 25; ++s) {
      const PureState psi = random_pure(n, rng);
      const double t = tau(psi.projector(), k);
      EXPECT_NEAR(t, std::pow(pure_concurrence(psi, k), 2), 1e-9);
      EXPECT_NEAR(t, purity_tau(psi), 1e-9);
    }
  }
}

TEST(Tau, TwoQubitWootters) {
  RngStream rng(3, 0);
  const ConcurrenceKernel k{QubitSystem(2)};
  for (int s = 0; s < 50; ++s) {
    const PureState psi = random_pure(2, rng);
    EXPECT_NEAR(tau(psi.projector(), k), std::pow(wootters(psi), 2), 1e-8);
    EXPECT_NEAR(wootters(psi), wootters(psi.projector()), 1e-7);
  }
  // Lower bound on mixed states.
  for (int s = 0; s < 50; ++s) {
    const Matrix rho = random_state(2, rng, 2);
    EXPECT_LE(tau(rho, k), std::pow(wootters(rho), 2) + 1e-7);
  }
}

TEST(Tau, LocalUnitaryInvariance) {
  RngStream rng(4, 0);
  const ConcurrenceKernel k{QubitSystem(4)};
  const Matrix rho = random_state(4, rng, 3);
  const double t0 = tau(rho, k);
  for (int s = 0; s < 200; ++s) {
    const Matrix u = product_rotation(4, rng);
    EXPECT_NEAR(tau(u * rho * u.adjoint(), k), t0, 1e-9);
  }
}

// tau along rho(s) = rho + s rho' + s^2/2 rho'' is a quartic in s, so the
// five-point stencils are exact up to rounding.
class DerivativeTest : public ::testing::TestWithParam<double> {};

TEST_P(DerivativeTest, TauDotAndDdotMatchFiniteDifferences) {
  const double gamma = GetParam();
  const QubitSystem sys(4);
  const ConcurrenceKernel k(sys);
  RngStream rng(5, static_cast<std::uint64_t>(gamma * 100));
  const DephasingSpec diss = DephasingSpec::uniform(sys, gamma);
  const Matrix h_sys = ising_hamiltonian(CouplingMatrix::reference_four_spin(), sys);
  for (int s = 0; s < 5; ++s) {
    const Matrix rho = random_state(4, rng, 2);
    const LocalField f = random_field(4, rng, 5.0);
    const Matrix h = h_sys + local_field_hamiltonian(f, sys);
    const Matrix d1 = lindblad_rhs(rho, h, diss);
    const Matrix d2 = lindblad_rhs(d1, h, diss) - lindblad_rhs(Matrix::Zero(16, 16), h, diss);
    const auto path = [&](double x) { return tau(rho + x * d1 + 0.5 * x * x * d2, k); };
    const oracle::Stencil fd = stencil(path, 1e-3);
    const double td = tau_dot(rho, h, diss, k);
    const double tdd = tau_ddot(rho, h_sys, f, diss, k);
    EXPECT_LE(std::abs(td - fd.d1), 1e-4 * std::max(1.0, std::abs(td)));
    EXPECT_LE(std::abs(tdd - fd.d2), 1e-4 * std::max(1.0, std::abs(tdd)));
  }
}

TEST_P(DerivativeTest, GradientXMatchesFiniteDifferences) {
  const double gamma = GetParam();
  const QubitSystem sys(4);
  const ConcurrenceKernel k(sys);
  RngStream rng(6, static_cast<std::uint64_t>(gamma * 100));
  const DephasingSpec diss = DephasingSpec::uniform(sys, gamma);
  const Matrix h_sys = ising_hamiltonian(CouplingMatrix::reference_four_spin(), sys);
  for (int s = 0; s < 3; ++s) {
    const Matrix rho = random_state(4, rng, 2);
    const ControlGradient x = gradient_x(rho, h_sys, diss, k);
    const double scale = x.x.cwiseAbs().maxCoeff();
    for (int i = 0; i < 4; ++i)
      for (int c = 0; c < 3; ++c) {
        LocalField plus = LocalField::zeros(4), minus = LocalField::zeros(4);
        plus.h(i, c) = 1e-3;
        minus.h(i, c) = -1e-3;
        const double fd = (tau_ddot(rho, h_sys, plus, diss, k) - tau_ddot(rho, h_sys, minus, diss, k)) / 2e-3;
        EXPECT_LE(std::abs(fd - x.x(i, c)), 1e-5 * std::max(std::abs(x.x(i, c)), 1e-3 * scale))
            << "qubit " << i << " axis " << c;
      }
  }
}

INSTANTIATE_TEST_SUITE_P(Dephasing, DerivativeTest, ::testing::Values(0.0, 0.2));

TEST(Curvature, LocalFieldsAloneDoNotChangeTau) {
  const QubitSystem sys(4);
  const ConcurrenceKernel k(sys);
  RngStream rng(7, 0);
  const Matrix zero = Matrix::Zero(16, 16);
  const DephasingSpec none = DephasingSpec::none(sys);
  for (int s = 0; s < 10; ++s) {
    const Matrix rho = random_state(4, rng, 2);
    const LocalField f = random_field(4, rng, 20.0);
    EXPECT_LE(std::abs(tau_ddot(rho, zero, f, none, k)), 1e-9);
    EXPECT_LE(std::abs(tau_dot(rho, local_field_hamiltonian(f, sys), none, k)), 1e-9);
  }
}

TEST(Curvature, NaturalCurvatureIsTauDdotWithoutField) {
  const QubitSystem sys(4);
  const ConcurrenceKernel k(sys);
  RngStream rng(8, 0);
  const Matrix h_sys = ising_hamiltonian(CouplingMatrix::reference_four_spin(), sys);
  const DephasingSpec diss = DephasingSpec::uniform(sys, 0.2);
  const Matrix rho = random_state(4, rng, 2);
  EXPECT_NEAR(natural_curvature(rho, h_sys, diss, k), tau_ddot(rho, h_sys, LocalField::zeros(4), diss, k), 1e-10);
}

// tau_ddot(h) - tau_ddot(0) = h_max sum_i ||X_i|| cos(alpha_i) for fields of
// norm h_max at angle alpha_i from X_i.
TEST(Curvature, CosineLinearity) {
  const QubitSystem sys(4);
  const ConcurrenceKernel k(sys);
  RngStream rng(9, 0);
  const Matrix h_sys = ising_hamiltonian(CouplingMatrix::reference_four_spin(), sys);
  const DephasingSpec diss = DephasingSpec::uniform(sys, 0.02);
  const Matrix rho = random_state(4, rng, 1);
  const ControlGradient x = gradient_x(rho, h_sys, diss, k);
  const double base = tau_ddot(rho, h_sys, LocalField::zeros(4), diss, k);
  const double h_max = 17.0;
  for (int s = 0; s < 20; ++s) {
    LocalField f = LocalField::zeros(4);
    double predicted = 0;
    for (int i = 0; i < 4; ++i) {
      const Eigen::Vector3d xi = x.x.row(i).transpose().normalized();
      Eigen::Vector3d perp(rng.normal(), rng.normal(), rng.normal());
      perp = (perp - perp.dot(xi) * xi).normalized();
      const double alpha = rng.uniform(0, std::numbers::pi);
      f.h.row(i) = h_max * (std::cos(alpha) * xi + std::sin(alpha) * perp).transpose();
      predicted += h_max * x.qubit_norm(i) * std::cos(alpha);
    }
    const double scale = std::max(1.0, h_max * x.x.norm());
    EXPECT_LE(std::abs(tau_ddot(rho, h_sys, f, diss, k) - base - predicted), 1e-8 * scale);
  }
}

TEST(Control, ParallelFieldIsOptimal) {
  const QubitSystem sys(4);
  const ConcurrenceKernel k(sys);
  RngStream rng(10, 0);
  const Matrix h_sys = ising_hamiltonian(CouplingMatrix::reference_four_spin(), sys);
  for (double gamma : {0.0, 0.2}) {
    const DephasingSpec diss = DephasingSpec::uniform(sys, gamma);
    const Matrix rho = random_state(4, rng, gamma > 0 ? 3 : 1);
    ControlPolicy policy;
    const OptimalityReport rep = optimality_check(rho, h_sys, diss, policy, rng, 1000, k);
    EXPECT_EQ(rep.n_violations, 0u);
    EXPECT_GT(rep.tau_ddot_optimal, rep.tau_ddot_antipodal);
    EXPECT_NEAR(rep.tau_ddot_optimal - rep.tau_ddot_antipodal, rep.predicted_gap,
                1e-8 * std::max(1.0, rep.predicted_gap));
  }
}

TEST(GradientY, MatchesFiniteDifferences) {
  const QubitSystem sys(2);
  const ConcurrenceKernel k(sys);
  RngStream rng(11, 0);
  const Matrix rho = random_state(2, rng, 2);
  const OperatorBasis basis = product_pauli_basis(sys);
  ASSERT_EQ(basis.operators.size(), 15u);
  const GeneralGradient y = gradient_y(rho, basis, k);
  const DephasingSpec none = DephasingSpec::none(sys);
  for (std::size_t b = 0; b < basis.operators.size(); ++b) {
    const double fd =
        (tau_dot(rho, 1e-4 * basis.operators[b], none, k) - tau_dot(rho, -1e-4 * basis.operators[b], none, k)) / 2e-4;
    EXPECT_NEAR(y.y(static_cast<Eigen::Index>(b)), fd, 1e-8) << basis.labels[b];
  }
  // Local terms carry no first-order entanglement change.
  for (std::size_t b = 0; b < basis.labels.size(); ++b) {
    const auto& l = basis.labels[b];
    if (std::count(l.begin(), l.end(), 'I') == 1) EXPECT_NEAR(y.y(static_cast<Eigen::Index>(b)), 0.0, 1e-12) << l;
  }
}

}  // namespace
}  // namespace lyapctl
