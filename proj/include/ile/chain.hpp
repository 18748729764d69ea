// Copyright 2026 The ile Authors
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

// Linear ion crystal in a harmonic trap. Lengths are in the Coulomb-harmonic
// scale, so the potential is V(u) = sum_i u_i^2/2 + sum_{i<j} 1/|u_i - u_j|
// and frequencies come out in units of the COM frequency.

#ifndef ILE_CHAIN_HPP
#define ILE_CHAIN_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "ile/errors.hpp"

namespace ile::chain {

inline constexpr std::size_t kMaxIons = 64;

struct ChainGeometry {
  std::size_t n_ions = 0;
  std::vector<double> positions;  // ascending
};

/// mu_l = nu_l / nu ascending; column l of `vectors` is b^l.
struct ModeTable {
  std::vector<double> frequencies;
  Eigen::MatrixXd vectors;
  std::vector<double> positions;

  std::size_t size() const { return frequencies.size(); }
  double b(std::size_t ion, std::size_t mode) const {
    return vectors(static_cast<Eigen::Index>(ion), static_cast<Eigen::Index>(mode));
  }
};

/// eta_{i,l} = eta * sqrt(N) * b_i^l / sqrt(mu_l).
struct LambDickeTable {
  double eta_com = 0.0;
  Eigen::MatrixXd entries;
};

namespace detail {

inline double potential(const Eigen::VectorXd& u) {
  double v = 0.5 * u.squaredNorm();
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    for (Eigen::Index j = i + 1; j < u.size(); ++j) v += 1.0 / std::abs(u(i) - u(j));
  }
  return v;
}

inline Eigen::VectorXd gradient(const Eigen::VectorXd& u) {
  Eigen::VectorXd g = u;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    for (Eigen::Index j = 0; j < u.size(); ++j) {
      if (i == j) continue;
      const double d = u(i) - u(j);
      g(i) -= (d > 0 ? 1.0 : -1.0) / (d * d);
    }
  }
  return g;
}

inline Eigen::MatrixXd hessian(const Eigen::VectorXd& u) {
  const Eigen::Index n = u.size();
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double c = 2.0 / std::pow(std::abs(u(i) - u(j)), 3);
      h(i, i) += c;
      h(i, j) -= c;
    }
  }
  return h;
}

inline bool strictly_ascending(const Eigen::VectorXd& u) {
  for (Eigen::Index i = 1; i < u.size(); ++i) {
    if (!(u(i) > u(i - 1))) return false;
  }
  return true;
}

}  // namespace detail

/// Max-norm of the potential gradient at the given positions.
inline double gradient_residual(const ChainGeometry& g) {
  const Eigen::VectorXd u = Eigen::Map<const Eigen::VectorXd>(
      g.positions.data(), static_cast<Eigen::Index>(g.positions.size()));
  return detail::gradient(u).cwiseAbs().maxCoeff();
}

/// Damped Newton on the gradient, started from a uniform spacing of
/// half-extent N^0.56. Steps are halved until the ordering is kept and the
/// potential does not increase.
inline ChainGeometry equilibrium_positions(std::size_t n_ions) {
  if (n_ions < 1 || n_ions > kMaxIons) {
    throw InputError("equilibrium_positions: need 1 <= N <= 64");
  }
  const auto n = static_cast<Eigen::Index>(n_ions);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  if (n_ions > 1) {
    const double half = std::pow(static_cast<double>(n_ions), 0.56);
    u = Eigen::VectorXd::LinSpaced(n, -half, half);
  }

  constexpr int kMaxIter = 200;
  constexpr double kTol = 1e-13;
  double residual = detail::gradient(u).cwiseAbs().maxCoeff();
  for (int iter = 0; iter < kMaxIter && residual > kTol; ++iter) {
    const Eigen::VectorXd g = detail::gradient(u);
    const Eigen::VectorXd step = detail::hessian(u).ldlt().solve(g);
    const double v0 = detail::potential(u);
    double lambda = 1.0;
    Eigen::VectorXd trial = u - step;
    for (int halving = 0; halving < 60; ++halving) {
      if (detail::strictly_ascending(trial) && detail::potential(trial) <= v0 + 1e-14 * std::abs(v0)) {
        break;
      }
      lambda *= 0.5;
      trial = u - lambda * step;
    }
    u = trial;
    residual = detail::gradient(u).cwiseAbs().maxCoeff();
  }

  // Enforce mirror symmetry exactly; the equilibrium is symmetric about 0.
  Eigen::VectorXd sym(n);
  for (Eigen::Index i = 0; i < n; ++i) sym(i) = 0.5 * (u(i) - u(n - 1 - i));
  u = sym;
  residual = detail::gradient(u).cwiseAbs().maxCoeff();
  if (residual > 1e-10) {
    std::ostringstream msg;
    msg << "equilibrium_positions: Newton did not converge for N=" << n_ions
        << ", gradient residual " << residual;
    throw SolverError(msg.str());
  }
  return ChainGeometry{n_ions, std::vector<double>(u.data(), u.data() + u.size())};
}

/// Hessian eigen-decomposition at equilibrium. Eigenvectors are signed so
/// that their first non-negligible entry is positive.
inline ModeTable normal_modes(const ChainGeometry& geometry) {
  const std::size_t n_ions = geometry.positions.size();
  if (n_ions == 0 || n_ions != geometry.n_ions) throw InputError("normal_modes: bad geometry");
  const Eigen::VectorXd u = Eigen::Map<const Eigen::VectorXd>(
      geometry.positions.data(), static_cast<Eigen::Index>(n_ions));
  if (!detail::strictly_ascending(u)) throw InputError("normal_modes: positions not ascending");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(detail::hessian(u));
  if (eig.info() != Eigen::Success) throw SolverError("normal_modes: eigensolver failed");
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  Eigen::MatrixXd vecs = eig.eigenvectors();

  ModeTable table;
  table.positions = geometry.positions;
  table.frequencies.resize(n_ions);
  for (Eigen::Index l = 0; l < lambda.size(); ++l) {
    if (!(lambda(l) > 0.0)) throw SolverError("normal_modes: non-positive Hessian eigenvalue");
    if (l > 0 && lambda(l) - lambda(l - 1) < 1e-6) {
      throw SolverError("normal_modes: degenerate mode frequencies");
    }
    table.frequencies[static_cast<std::size_t>(l)] = std::sqrt(lambda(l));
    for (Eigen::Index i = 0; i < vecs.rows(); ++i) {
      if (std::abs(vecs(i, l)) > 1e-9) {
        if (vecs(i, l) < 0) vecs.col(l) *= -1.0;
        break;
      }
    }
  }
  // The COM pair is exact (every Hessian row sums to 1): check it, then
  // replace the eigensolver's rounding noise with the exact values.
  const double root_inv = 1.0 / std::sqrt(static_cast<double>(n_ions));
  if (std::abs(table.frequencies[0] - 1.0) > 1e-8 ||
      (vecs.col(0).array() - root_inv).abs().maxCoeff() > 1e-8) {
    throw SolverError("normal_modes: lowest mode is not the centre-of-mass mode");
  }
  table.frequencies[0] = 1.0;
  vecs.col(0).setConstant(root_inv);
  table.vectors = std::move(vecs);
  return table;
}

inline LambDickeTable lamb_dicke(const ModeTable& modes, double eta) {
  if (!(eta > 0.0)) throw InputError("lamb_dicke: eta must be positive");
  const auto n = static_cast<Eigen::Index>(modes.size());
  LambDickeTable out{eta, Eigen::MatrixXd(n, n)};
  const double root_n = std::sqrt(static_cast<double>(n));
  for (Eigen::Index l = 0; l < n; ++l) {
    const double scale = eta * root_n / std::sqrt(modes.frequencies[static_cast<std::size_t>(l)]);
    out.entries.col(l) = scale * modes.vectors.col(l);
  }
  return out;
}

}  // namespace ile::chain

#endif  // ILE_CHAIN_HPP
