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

// Independent reference computations shared by the unit and acceptance tests.
// None of these call into the library's entanglement code.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Eigenvalues>

#include "lyapctl/dynamics.hpp"
#include "lyapctl/hilbert.hpp"
#include "lyapctl/rng.hpp"

namespace lyapctl::oracle {

/// Random density matrix G G^dagger / Tr, rank `rank` (full rank if negative).
inline Matrix random_state(int n, RngStream& rng, int rank = -1) {
  const Eigen::Index d = Eigen::Index{1} << n;
  const Eigen::Index r = rank < 0 ? d : rank;
  Matrix g(d, r);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < r; ++j) g(i, j) = cplx(rng.normal(), rng.normal());
  Matrix rho = g * g.adjoint();
  return rho / rho.trace();
}

inline PureState random_pure(int n, RngStream& rng) {
  Vector v(Eigen::Index{1} << n);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = cplx(rng.normal(), rng.normal());
  return PureState::normalized(v);
}

inline LocalField random_field(int n, RngStream& rng, double scale) {
  LocalField h = LocalField::zeros(n);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) h.h(i, c) = scale * rng.normal();
  return h;
}

/// Squared multipartite concurrence of a pure state from the purities of all
/// bipartitions, 2^(2-N) [(2^N - 2) - sum_A Tr rho_A^2], times 2^(1-N/2).
inline double purity_tau(const PureState& psi) {
  const int n = psi.n_qubits();
  const Eigen::Index d = Eigen::Index{1} << n;
  double sum = 0;
  for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
    // qubit i <-> bit n-1-i of the label
    std::vector<int> in, out;
    for (int i = 0; i < n; ++i) ((mask >> i) & 1 ? in : out).push_back(i);
    const Eigen::Index da = Eigen::Index{1} << in.size(), db = Eigen::Index{1} << out.size();
    Matrix m = Matrix::Zero(da, db);
    for (Eigen::Index label = 0; label < d; ++label) {
      Eigen::Index a = 0, b = 0;
      for (int q : in) a = 2 * a + ((label >> (n - 1 - q)) & 1);
      for (int q : out) b = 2 * b + ((label >> (n - 1 - q)) & 1);
      m(a, b) = psi.amplitudes()(label);
    }
    const Matrix rho_a = m * m.adjoint();
    sum += (rho_a * rho_a).trace().real();
  }
  const double c2 = std::pow(2.0, 2 - n) * (static_cast<double>(d - 2) - sum);
  return std::pow(2.0, 1.0 - n / 2.0) * c2;
}

/// Wootters concurrence of a two-qubit pure state, |<psi| sigma_y sigma_y |psi*>|.
inline double wootters(const PureState& psi) {
  const Matrix yy = kron(pauli(Axis::Y), pauli(Axis::Y));
  return std::abs(psi.amplitudes().dot(yy * psi.amplitudes().conjugate()));
}

/// Wootters concurrence of a two-qubit density matrix. The square roots of
/// near-zero eigenvalues limit this route to ~1e-8 on low-rank states.
inline double wootters(const Matrix& rho) {
  const Matrix yy = kron(pauli(Axis::Y), pauli(Axis::Y));
  const Matrix tilde = yy * rho.conjugate() * yy;
  Eigen::ComplexEigenSolver<Matrix> es(rho * tilde);
  std::vector<double> l;
  for (int k = 0; k < 4; ++k) l.push_back(std::sqrt(std::max(0.0, es.eigenvalues()(k).real())));
  std::sort(l.rbegin(), l.rend());
  return std::max(0.0, l[0] - l[1] - l[2] - l[3]);
}

/// Five-point first and second derivatives at 0.
struct Stencil {
  double d1, d2;
};
inline Stencil stencil(const std::function<double(double)>& f, double h) {
  const double fm2 = f(-2 * h), fm1 = f(-h), f0 = f(0), fp1 = f(h), fp2 = f(2 * h);
  return {(fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h), (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h)};
}

/// max |<a_1 (x) ... (x) a_N | psi>| over product states, by alternating
/// single-factor updates (higher-order power iteration) from random starts.
inline double product_overlap(const Vector& psi, int n, RngStream& rng, int n_starts = 64) {
  double best = 0;
  for (int start = 0; start < n_starts; ++start) {
    std::vector<Eigen::Vector2cd> f(n);
    for (auto& v : f) v = Eigen::Vector2cd(cplx(rng.normal(), rng.normal()), cplx(rng.normal(), rng.normal())).normalized();
    double value = 0;
    for (int it = 0; it < 500; ++it) {
      for (int q = 0; q < n; ++q) {
        Eigen::Vector2cd g = Eigen::Vector2cd::Zero();
        for (Eigen::Index label = 0; label < psi.size(); ++label) {
          cplx w = psi(label);
          for (int r = 0; r < n; ++r) {
            if (r != q) w *= std::conj(f[r]((label >> (n - 1 - r)) & 1));
          }
          g((label >> (n - 1 - q)) & 1) += w;
        }
        value = g.norm();
        f[q] = g / value;
      }
    }
    best = std::max(best, value);
  }
  return best;
}

}  // namespace lyapctl::oracle
