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

// Brute-force time stepping of spin (x) Fock under the interaction-picture
// Hamiltonian
//
//   H(t) = sum_l Theta_l [f_l(t) x_l + g_l(t) p_l]  (+ 4 Omega cos(delta t) J_x),
//   Theta_l = sqrt(N) sum_i b_i^l sigma_yi / 2,
//   f_l + i g_l = -2 sqrt(2) eta Omega / sqrt(mu_l) (e^{i(mu_l-delta)t} [+ e^{i(mu_l+delta)t}]).
//
// The spin factor is held in the sigma_y product basis, where the
// displacement part is diagonal: each step applies, per spin configuration,
// one exact single-mode displacement per mode evaluated at the step
// midpoint. The optional carrier term is Strang-split around it. Both pieces
// are second order in the step.

#ifndef ILE_TROTTER_HPP
#define ILE_TROTTER_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ile/chain.hpp"
#include "ile/errors.hpp"
#include "ile/fock.hpp"
#include "ile/multimode.hpp"
#include "ile/protocol.hpp"

namespace ile::multimode {

struct TrotterConfig {
  std::size_t cutoff = 12;  // per mode
  std::size_t steps = 200;  // coarsest run; 2x and 4x are also run
  bool include_full_terms = false;
  std::vector<Complex> weights;  // internal weights p_i; empty means all zero
};

struct TrotterReport {
  std::size_t n_ions = 0;
  std::size_t cutoff = 0;
  std::size_t steps = 0;
  double t = 0.0;
  bool full_terms = false;
  double fidelity_integrated = 0.0;  // vs analytic prediction with integrated betas
  double fidelity_printed = 0.0;       // vs analytic prediction with printed betas
  double p_conditional = 0.0;        // all-|1> probability from the time stepping
  double p_predicted_integrated = 0.0;
  double p_predicted_printed = 0.0;
  double deviation_coarse = 0.0;  // |psi(S) - psi_Richardson|
  double deviation_fine = 0.0;    // |psi(2S) - psi_Richardson|
  double convergence_ratio = 0.0;
  bool roundoff_limited = false;
  std::optional<double> full_terms_effect;  // 1 - F(conditional with vs without the extra terms)
  double tail_weight = 0.0;  // max truncation tail over modes at the finest run
};

inline constexpr std::size_t kTrotterMaxDim = 10000;

namespace detail {

struct Stepper {
  std::size_t n_ions;
  std::size_t dim;    // per mode
  std::size_t mdim;   // motional block size
  std::vector<double> mu;
  Eigen::MatrixXd b;  // ions x modes
  protocol::PhysicalParams params;
  bool full;

  std::size_t configs() const { return std::size_t{1} << n_ions; }

  // sigma_y eigenvalue of ion i in configuration s: bit clear -> +1.
  static double spin(std::size_t s, std::size_t i) { return ((s >> i) & 1U) ? -1.0 : 1.0; }

  void apply_mode_matrix(Complex* block, std::size_t mode, const Eigen::MatrixXcd& m) const {
    std::size_t inner = 1;
    for (std::size_t l = mode + 1; l < n_ions; ++l) inner *= dim;
    const std::size_t outer = mdim / (inner * dim);
    Eigen::VectorXcd tmp(static_cast<Eigen::Index>(dim));
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t q = 0; q < inner; ++q) {
        const std::size_t base = o * dim * inner + q;
        for (std::size_t k = 0; k < dim; ++k) tmp(static_cast<Eigen::Index>(k)) = block[base + k * inner];
        const Eigen::VectorXcd out = m * tmp;
        for (std::size_t k = 0; k < dim; ++k) block[base + k * inner] = out(static_cast<Eigen::Index>(k));
      }
    }
  }

  // exp(-i phi sigma_x) on ion i, written in the (+y, -y) basis.
  void rotate_x(Eigen::VectorXcd& psi, std::size_t ion, double phi) const {
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    const std::size_t bit = std::size_t{1} << ion;
    for (std::size_t cfg = 0; cfg < configs(); ++cfg) {
      if (cfg & bit) continue;
      Complex* plus = psi.data() + cfg * mdim;
      Complex* minus = psi.data() + (cfg | bit) * mdim;
      for (std::size_t k = 0; k < mdim; ++k) {
        const Complex a = plus[k];
        const Complex m = minus[k];
        plus[k] = c * a - s * m;
        minus[k] = s * a + c * m;
      }
    }
  }

  void step(Eigen::VectorXcd& psi, double t_mid, double dt) const {
    const Complex i_unit{0.0, 1.0};
    if (full) {
      const double phi = 2.0 * params.omega * std::cos(params.delta * t_mid) * 0.5 * dt;
      for (std::size_t i = 0; i < n_ions; ++i) rotate_x(psi, i, phi);
    }
    const double root_n = std::sqrt(static_cast<double>(n_ions));
    for (std::size_t cfg = 0; cfg < configs(); ++cfg) {
      Complex* block = psi.data() + cfg * mdim;
      for (std::size_t l = 0; l < n_ions; ++l) {
        double theta = 0.0;
        for (std::size_t i = 0; i < n_ions; ++i) theta += b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) * spin(cfg, i);
        theta *= 0.5 * root_n;
        Complex drive = std::exp(i_unit * (mu[l] - params.delta) * t_mid);
        if (full) drive += std::exp(i_unit * (mu[l] + params.delta) * t_mid);
        // exp(-i theta dt (f x + g p)) = D(eps), eps = -i theta dt (f + i g)/sqrt(2).
        const Complex eps = 2.0 * i_unit * theta * dt * params.eta * params.omega / std::sqrt(mu[l]) * drive;
        if (eps == Complex{0.0, 0.0}) continue;
        apply_mode_matrix(block, l, fock::displacement_matrix(eps, dim - 1).matrix());
      }
    }
    if (full) {
      const double phi = 2.0 * params.omega * std::cos(params.delta * t_mid) * 0.5 * dt;
      for (std::size_t i = 0; i < n_ions; ++i) rotate_x(psi, i, phi);
    }
  }

  Eigen::VectorXcd initial(const std::vector<Complex>& weights) const {
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(configs() * mdim));
    const Complex i_unit{0.0, 1.0};
    const double r2 = std::sqrt(0.5);
    for (std::size_t cfg = 0; cfg < configs(); ++cfg) {
      Complex amp{1.0, 0.0};
      for (std::size_t i = 0; i < n_ions; ++i) {
        const double norm = std::sqrt(1.0 + std::norm(weights[i]));
        const Complex zero = i_unit * weights[i] / norm;  // <0|psi_i>
        const Complex one = 1.0 / norm;                   // <1|psi_i>
        amp *= spin(cfg, i) > 0 ? r2 * (zero - i_unit * one) : r2 * (zero + i_unit * one);
      }
      psi(static_cast<Eigen::Index>(cfg * mdim)) = amp;
    }
    return psi;
  }

  // Motional state conditioned on every ion in |1>: <1|+y> = i/sqrt2, <1|-y> = -i/sqrt2.
  Eigen::VectorXcd project_all_one(const Eigen::VectorXcd& psi) const {
    const Complex i_unit{0.0, 1.0};
    const double r2 = std::sqrt(0.5);
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(mdim));
    for (std::size_t cfg = 0; cfg < configs(); ++cfg) {
      Complex amp{1.0, 0.0};
      for (std::size_t i = 0; i < n_ions; ++i) amp *= spin(cfg, i) > 0 ? i_unit * r2 : -i_unit * r2;
      out += amp * psi.segment(static_cast<Eigen::Index>(cfg * mdim), static_cast<Eigen::Index>(mdim));
    }
    return out;
  }

  Eigen::VectorXcd evolve(const std::vector<Complex>& weights, double t, std::size_t steps) const {
    Eigen::VectorXcd psi = initial(weights);
    const double dt = t / static_cast<double>(steps);
    for (std::size_t j = 0; j < steps; ++j) step(psi, (static_cast<double>(j) + 0.5) * dt, dt);
    return psi;
  }
};

inline double vector_fidelity(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  const double na = a.squaredNorm();
  const double nb = b.squaredNorm();
  if (!(na > 0.0) || !(nb > 0.0)) throw InputError("fidelity: zero-norm state");
  return std::min(1.0, std::norm(a.dot(b)) / (na * nb));
}

// Largest weight in the top three levels of any single mode.
inline double max_mode_tail(const Eigen::VectorXcd& state, std::size_t modes, std::size_t dim) {
  double worst = 0.0;
  const double total = state.squaredNorm();
  if (!(total > 0.0)) return 0.0;
  for (std::size_t l = 0; l < modes; ++l) {
    std::size_t inner = 1;
    for (std::size_t m = l + 1; m < modes; ++m) inner *= dim;
    double tail = 0.0;
    for (Eigen::Index idx = 0; idx < state.size(); ++idx) {
      const std::size_t level = (static_cast<std::size_t>(idx) / inner) % dim;
      if (level + 3 >= dim) tail += std::norm(state(idx));
    }
    worst = std::max(worst, tail / total);
  }
  return worst;
}

}  // namespace detail

/// Runs the stepper at S, 2S and 4S steps, checks second-order convergence
/// against the Richardson limit, and compares the finest conditional motional
/// state with the analytic predictions of both beta variants.
inline TrotterReport trotter_validate(const protocol::PhysicalParams& params, const chain::ModeTable& modes, double t,
                                      const TrotterConfig& cfg) {
  protocol::validate(params);
  const std::size_t n = params.n_ions;
  if (n > 2) throw InputError("trotter_validate: at most 2 ions");
  if (modes.size() != n) throw InputError("trotter_validate: mode table does not match n_ions");
  if (!(t > 0.0)) throw InputError("trotter_validate: t must be positive");
  if (cfg.steps < 10) throw InputError("trotter_validate: steps must be >= 10");
  if (cfg.cutoff < 1) throw InputError("trotter_validate: cutoff must be >= 1");
  const std::size_t dim = cfg.cutoff + 1;
  std::size_t mdim = 1;
  for (std::size_t l = 0; l < n; ++l) mdim *= dim;
  if (mdim > kTrotterMaxDim) throw InputError("trotter_validate: (cutoff+1)^modes exceeds 10^4");
  std::vector<Complex> weights = cfg.weights.empty() ? std::vector<Complex>(n, Complex{0.0, 0.0}) : cfg.weights;
  if (weights.size() != n) throw InputError("trotter_validate: need one weight per ion");

  detail::Stepper stepper{n, dim, mdim, modes.frequencies, modes.vectors, params, cfg.include_full_terms};
  const auto psi1 = stepper.evolve(weights, t, cfg.steps);
  const auto psi2 = stepper.evolve(weights, t, 2 * cfg.steps);
  const auto psi4 = stepper.evolve(weights, t, 4 * cfg.steps);
  const Eigen::VectorXcd richardson = psi4 + (psi4 - psi2) / 3.0;

  TrotterReport rep;
  rep.n_ions = n;
  rep.cutoff = cfg.cutoff;
  rep.steps = cfg.steps;
  rep.t = t;
  rep.full_terms = cfg.include_full_terms;
  rep.deviation_coarse = (psi1 - richardson).norm();
  rep.deviation_fine = (psi2 - richardson).norm();
  rep.roundoff_limited = rep.deviation_coarse < 1e-12;
  rep.convergence_ratio = rep.deviation_fine > 0.0 ? rep.deviation_coarse / rep.deviation_fine : 0.0;
  if (!rep.roundoff_limited && (rep.convergence_ratio < 2.0 || rep.convergence_ratio > 8.0)) {
    std::ostringstream msg;
    msg << "trotter_validate: step-halving ratio " << rep.convergence_ratio
        << " is far from 4 (second order); increase --steps";
    throw IntegratorError(msg.str());
  }

  const Eigen::VectorXcd conditional = stepper.project_all_one(psi4);
  rep.p_conditional = conditional.squaredNorm();
  rep.tail_weight = detail::max_mode_tail(conditional, n, dim);

  protocol::ProtocolPlan plan{params, Complex{0.0, 0.0}, {protocol::Cycle{t, weights}}};
  const auto predicted_int = run_conditional_exact(plan, modes, BetaVariant::integrated);
  const auto predicted_printed = run_conditional_exact(plan, modes, BetaVariant::printed);
  rep.p_predicted_integrated = predicted_int.p_exact;
  rep.p_predicted_printed = predicted_printed.p_exact;
  rep.fidelity_integrated = detail::vector_fidelity(to_fock(predicted_int.state, cfg.cutoff), conditional);
  rep.fidelity_printed = detail::vector_fidelity(to_fock(predicted_printed.state, cfg.cutoff), conditional);

  if (cfg.include_full_terms) {
    detail::Stepper reduced = stepper;
    reduced.full = false;
    const auto cond_reduced = reduced.project_all_one(reduced.evolve(weights, t, 4 * cfg.steps));
    rep.full_terms_effect = 1.0 - detail::vector_fidelity(conditional, cond_reduced);
  }
  return rep;
}

}  // namespace ile::multimode

#endif  // ILE_TROTTER_HPP
