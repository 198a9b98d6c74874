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

namespace lyapctl {
namespace {

TEST(ControlField, NormalizedPerQubit) {
  ControlGradient x{Eigen::MatrixX3d(3, 3)};
  x.x << 3, 4, 0, 0, 0, 0, 1e-12, 0, 0;
  ControlPolicy policy;
  const LocalField h = control_field(x, policy);
  EXPECT_NEAR(h.qubit_norm(0), 17.0, 1e-12);
  EXPECT_NEAR(h.h(0, 0) / h.h(0, 1), 0.75, 1e-15);
  EXPECT_EQ(h.qubit_norm(1), 0.0);
  EXPECT_EQ(h.qubit_norm(2), 0.0);  // below x_tolerance
  policy.h_max = 0;
  EXPECT_EQ(control_field(x, policy).h.norm(), 0.0);
}

TEST(ControlPolicy, Validation) {
  ControlPolicy p;
  p.h_max = -1;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.h_max = 1;
  p.x_tolerance = -1;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Kick, DefaultAngleAndUnitary) {
  const KickSpec k;
  EXPECT_NEAR(k.angle(), 0.05 * std::numbers::pi, 1e-15);
  const QubitSystem sys(4);
  const Matrix u = kick_unitary(k, sys);
  EXPECT_LT((u * u.adjoint() - Matrix::Identity(16, 16)).cwiseAbs().maxCoeff(), 1e-14);
  // Single factor is exp(-i theta sigma_x).
  const Matrix u2 = kick_unitary(k, QubitSystem(2));
  const double th = k.angle();
  EXPECT_NEAR(u2(0, 0).real(), std::cos(th) * std::cos(th), 1e-14);
  KickSpec zero = k;
  zero.amplitude = 0;
  EXPECT_TRUE(kick_unitary(zero, sys).isIdentity(1e-15));
}

TEST(Kick, OnlyOnStall) {
  const QubitSystem sys(4);
  const ConcurrenceKernel kernel(sys);
  const DephasingSpec none = DephasingSpec::none(sys);
  ControlPolicy policy;
  // |0000> under the Ising Hamiltonian: X = 0 and zero curvature.
  const Matrix stalled = PureState::basis_state(sys, 0).projector();
  const Matrix h = ising_hamiltonian(CouplingMatrix::reference_four_spin(), sys);
  const Matrix kicked = initial_kick(stalled, h, none, policy, kernel);
  EXPECT_GT((kicked - stalled).norm(), 1e-3);
  const Matrix u = kick_unitary(*policy.kick, sys);
  EXPECT_LT((kicked - u * stalled * u.adjoint()).norm(), 1e-14);
  // A generic product state is left alone.
  const Matrix generic = PureState::uniform_product(sys, 0.73, 0.51 * std::numbers::pi).projector();
  EXPECT_EQ(initial_kick(generic, h, none, policy, kernel), generic);
  policy.kick.reset();
  EXPECT_EQ(initial_kick(stalled, h, none, policy, kernel), stalled);
}

TEST(Perturbation, KindNames) {
  for (auto k : {PerturbationKind::None, PerturbationKind::WhiteNoise, PerturbationKind::ConstantOffset,
                 PerturbationKind::CouplingError}) {
    EXPECT_EQ(parse_perturbation_kind(perturbation_kind_name(k)), k);
  }
  EXPECT_THROW(parse_perturbation_kind("pink_noise"), std::invalid_argument);
}

TEST(WhiteNoise, HeldWithinBinsAndDeterministic) {
  PerturbationSpec spec;
  spec.kind = PerturbationKind::WhiteNoise;
  spec.epsilon = 0.1;
  spec.seed = 42;
  const double dtn = spec.noise_interval();
  EXPECT_NEAR(dtn, 0.01, 1e-15);
  for (int bin = 0; bin < 50; ++bin) {
    const double a = white_noise_value(spec, 4, 2, 1, (bin + 0.1) * dtn);
    const double b = white_noise_value(spec, 4, 2, 1, (bin + 0.9) * dtn);
    EXPECT_EQ(a, b);
    EXPECT_GE(a, -1.0);
    EXPECT_LE(a, 1.0);
  }
  PerturbationSpec other = spec;
  other.stream = 1;
  EXPECT_NE(white_noise_value(spec, 4, 0, 0, 0.0), white_noise_value(other, 4, 0, 0, 0.0));
}

TEST(WhiteNoise, FlatAndUniform) {
  PerturbationSpec spec;
  spec.kind = PerturbationKind::WhiteNoise;
  spec.epsilon = 0.1;
  spec.seed = 7;
  const double dtn = spec.noise_interval();
  const int n = 20000;
  std::vector<double> v(n);
  for (int k = 0; k < n; ++k) v[k] = white_noise_value(spec, 4, 1, 2, (k + 0.5) * dtn);
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double var = 0;
  for (double x : v) var += (x - mean) * (x - mean) / n;
  EXPECT_NEAR(mean, 0.0, 4.0 / std::sqrt(3.0 * n));
  EXPECT_NEAR(std::sqrt(var), 1.0 / std::sqrt(3.0), 0.01);
  // Consecutive bins uncorrelated.
  for (int lag : {1, 2, 5}) {
    double c = 0;
    for (int k = 0; k + lag < n; ++k) c += (v[k] - mean) * (v[k + lag] - mean);
    c /= (n - lag) * var;
    EXPECT_LT(std::abs(c), 4.0 / std::sqrt(static_cast<double>(n))) << "lag " << lag;
  }
  // Applied field: h + eps h_max n.
  const LocalField h = apply_white_noise(LocalField::zeros(4), spec, 17.0, 0.5 * dtn);
  EXPECT_NEAR(h.h(1, 2), 0.1 * 17.0 * v[0], 1e-15);
}

TEST(Offset, FixedSignsAndMagnitude) {
  PerturbationSpec spec;
  spec.kind = PerturbationKind::ConstantOffset;
  spec.epsilon = 0.05;
  spec.seed = 3;
  const Eigen::MatrixX3d s = offset_signs(spec, 4);
  EXPECT_EQ(s.cwiseAbs().minCoeff(), 1.0);
  EXPECT_EQ(s.cwiseAbs().maxCoeff(), 1.0);
  const LocalField h = apply_offset(LocalField::zeros(4), spec, 17.0);
  EXPECT_NEAR(h.h.cwiseAbs().maxCoeff(), 0.05 * 17.0, 1e-15);
  EXPECT_EQ(offset_signs(spec, 4), s);
}

TEST(CouplingError, SymmetricAndBounded) {
  PerturbationSpec spec;
  spec.kind = PerturbationKind::CouplingError;
  spec.epsilon = 0.1;
  spec.seed = 9;
  const CouplingMatrix ref = CouplingMatrix::reference_four_spin();
  const CouplingMatrix p = perturb_couplings(ref, spec);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(p(i, i), 0.0);
    for (int j = i + 1; j < 4; ++j) {
      EXPECT_EQ(p(i, j), p(j, i));
      EXPECT_LE(std::abs(p(i, j) / ref(i, j) - 1.0), 0.1 + 1e-15);
    }
  }
  spec.epsilon = 0;
  EXPECT_EQ(perturb_couplings(ref, spec), ref);
}

}  // namespace
}  // namespace lyapctl
