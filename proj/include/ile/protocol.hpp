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

// COM-only engineering protocol: each measurement cycle prepares every ion
// in (|1> + i p|0>)/sqrt(1+|p|^2), applies the spin-dependent displacement
// and post-selects all ions in |1>. The surviving motional state is the line
// superposition sum_k C^k D[(2k-n) beta]|alpha>.
//
// Units: the COM frequency is 1, so times are in 1/nu.

#ifndef ILE_PROTOCOL_HPP
#define ILE_PROTOCOL_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ile/errors.hpp"
#include "ile/fock.hpp"

namespace ile::protocol {

struct PhysicalParams {
  double eta = 0.1;    // COM Lamb-Dicke parameter
  double omega = 0.01;  // Rabi frequency
  double delta = 1.0;  // laser detuning from the carrier
  std::size_t n_ions = 1;
};

inline constexpr double kEtaMax = 0.25;
inline constexpr double kEtaWarn = 0.1;

/// Throws InputError on hard violations and returns soft warnings.
inline std::vector<std::string> validate(const PhysicalParams& p) {
  std::vector<std::string> warnings;
  if (!(p.eta > 0.0) || !std::isfinite(p.eta)) throw InputError("eta must be positive");
  if (p.eta > kEtaMax) throw InputError("eta above 0.25 leaves the Lamb-Dicke regime");
  if (p.eta > kEtaWarn) warnings.emplace_back("eta > 0.1: first-order Lamb-Dicke expansion is marginal");
  if (!(p.omega > 0.0) || !std::isfinite(p.omega)) throw InputError("omega must be positive");
  if (!(p.delta > 0.0) || !std::isfinite(p.delta)) throw InputError("delta must be positive");
  if (!(p.omega < p.delta)) throw InputError("omega must be below delta");
  if (p.omega > p.delta / 10.0) warnings.emplace_back("omega > delta/10: carrier (J_x) term not negligible");
  if (p.n_ions < 1) throw InputError("n_ions must be >= 1");
  return warnings;
}

/// beta = i eta Omega t e^{i (1 - delta) t}.
inline Complex beta_of(const PhysicalParams& p, double t) {
  return Complex{0.0, 1.0} * p.eta * p.omega * t * std::exp(Complex{0.0, (1.0 - p.delta) * t});
}

struct Cycle {
  double duration = 0.0;
  std::vector<Complex> weights;  // one per ion
};

struct ProtocolPlan {
  PhysicalParams params;
  Complex alpha{0.0, 0.0};
  std::vector<Cycle> cycles;
};

/// Checks plan invariants (common cycle duration, one weight per ion).
inline std::vector<std::string> validate(const ProtocolPlan& plan) {
  auto warnings = validate(plan.params);
  if (!is_finite(plan.alpha)) throw InputError("alpha must be finite");
  if (plan.cycles.empty()) throw InputError("plan has no cycles");
  const double t0 = plan.cycles.front().duration;
  for (std::size_t c = 0; c < plan.cycles.size(); ++c) {
    const auto& cycle = plan.cycles[c];
    if (!(cycle.duration > 0.0) || !std::isfinite(cycle.duration)) {
      throw InputError("cycle " + std::to_string(c) + ": duration must be positive");
    }
    if (std::abs(cycle.duration - t0) > 1e-12 * std::max(1.0, std::abs(t0))) {
      throw InputError("cycle durations differ; a line superposition needs one common beta");
    }
    if (cycle.weights.size() != plan.params.n_ions) {
      throw InputError("cycle " + std::to_string(c) + ": expected " +
                       std::to_string(plan.params.n_ions) + " weights");
    }
    for (const auto& w : cycle.weights) {
      if (!is_finite(w)) throw InputError("cycle " + std::to_string(c) + ": non-finite weight");
    }
  }
  return warnings;
}

/// All weights in application order: cycle by cycle, ion by ion.
inline std::vector<Complex> all_weights(const ProtocolPlan& plan) {
  std::vector<Complex> out;
  for (const auto& c : plan.cycles) out.insert(out.end(), c.weights.begin(), c.weights.end());
  return out;
}

/// Unnormalized sum_k coeffs[k] D[(2k-n) beta]|alpha>.
struct LineSuperposition {
  Complex alpha{0.0, 0.0};
  Complex beta{0.0, 0.0};
  std::vector<Complex> coeffs;

  std::size_t n() const { return coeffs.size() - 1; }
  Complex shift(std::size_t k) const {
    return (2.0 * static_cast<double>(k) - static_cast<double>(n())) * beta;
  }
  /// Center of component k in phase space.
  Complex label(std::size_t k) const { return alpha + shift(k); }
  /// Component k equals phase(k) |label(k)>.
  Complex phase(std::size_t k) const { return fock::displacement_phase(shift(k), alpha); }
};

/// Coefficients of prod_i [(1-p_i) D(beta) + (1+p_i) D(-beta)], index k
/// counting the (1-p) factors, by the recurrence
///   C_n^k = (1+p_n) C_{n-1}^k + (1-p_n) C_{n-1}^{k-1}.
inline std::vector<Complex> forward_coeffs(std::span<const Complex> weights) {
  std::vector<Complex> c{Complex{1.0, 0.0}};
  c.reserve(weights.size() + 1);
  for (const Complex& p : weights) {
    c.push_back(Complex{0.0, 0.0});
    for (std::size_t k = c.size() - 1; k > 0; --k) {
      c[k] = (1.0 + p) * c[k] + (1.0 - p) * c[k - 1];
    }
    c[0] *= (1.0 + p);
  }
  return c;
}

/// (1/4)^n prod_i 1/(1+|p_i|^2).
inline double success_probability_nominal(std::span<const Complex> weights) {
  double p = 1.0;
  for (const Complex& w : weights) p *= 0.25 / (1.0 + std::norm(w));
  return p;
}

/// Normalization prefactor prod_i 1/(2 sqrt(1+|p_i|^2)) of the conditional state.
inline double conditional_prefactor(std::span<const Complex> weights) {
  double a = 1.0;
  for (const Complex& w : weights) a *= 0.5 / std::sqrt(1.0 + std::norm(w));
  return a;
}

/// Gram matrix of the line components (including their displacement phases).
inline Eigen::MatrixXcd line_gram(const LineSuperposition& s) {
  const auto dim = static_cast<Eigen::Index>(s.coeffs.size());
  Eigen::MatrixXcd g(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    for (Eigen::Index k = 0; k < dim; ++k) {
      const auto uj = static_cast<std::size_t>(j);
      const auto uk = static_cast<std::size_t>(k);
      g(j, k) = std::conj(s.phase(uj)) * s.phase(uk) *
                fock::coherent_overlap(s.label(uj), s.label(uk));
    }
  }
  return g;
}

/// Squared norm of the line state, analytic (no truncation).
inline double norm_squared(const LineSuperposition& s) {
  const Eigen::VectorXcd c = Eigen::Map<const Eigen::VectorXcd>(
      s.coeffs.data(), static_cast<Eigen::Index>(s.coeffs.size()));
  return std::real(c.dot(line_gram(s) * c));
}

struct ExactProbability {
  double total = 1.0;
  std::vector<double> per_cycle;
};

/// True post-selection probability: squared norm of the conditional state
/// after each cycle divided by the norm before it. Keeps every overlap
/// between displaced components, which the nominal formula drops.
inline ExactProbability success_probability_exact(const ProtocolPlan& plan) {
  validate(plan);
  const Complex beta = beta_of(plan.params, plan.cycles.front().duration);
  ExactProbability out;
  std::vector<Complex> weights;
  double previous = 1.0;
  for (const auto& cycle : plan.cycles) {
    weights.insert(weights.end(), cycle.weights.begin(), cycle.weights.end());
    const double pref = conditional_prefactor(weights);
    const LineSuperposition s{plan.alpha, beta, forward_coeffs(weights)};
    const double now = pref * pref * norm_squared(s);
    out.per_cycle.push_back(previous > 0.0 ? now / previous : 0.0);
    previous = now;
  }
  out.total = previous;
  return out;
}

struct ProtocolResult {
  LineSuperposition state;
  double prefactor = 1.0;  // multiplies state to give the conditional state
  double p_nominal = 0.0;
  double p_exact = 0.0;
  std::vector<double> per_cycle_p_exact;
  std::vector<std::string> warnings;
};

/// Concatenates all weights (N ions x cycles) into one line superposition.
/// Since every displacement is a real multiple of the same beta, the
/// product-to-sum step carries no composition phase.
inline ProtocolResult run_ideal(const ProtocolPlan& plan) {
  ProtocolResult r;
  r.warnings = validate(plan);
  const auto weights = all_weights(plan);
  r.state = LineSuperposition{plan.alpha, beta_of(plan.params, plan.cycles.front().duration),
                              forward_coeffs(weights)};
  r.prefactor = conditional_prefactor(weights);
  r.p_nominal = success_probability_nominal(weights);
  const auto exact = success_probability_exact(plan);
  r.p_exact = exact.total;
  r.per_cycle_p_exact = exact.per_cycle;
  return r;
}

inline double max_displacement(const LineSuperposition& s) {
  double m = 0.0;
  for (std::size_t k = 0; k < s.coeffs.size(); ++k) m = std::max(m, std::abs(s.label(k)));
  return m;
}

inline fock::FockVector to_fock(const LineSuperposition& s, std::size_t cutoff) {
  if (s.coeffs.empty()) throw InputError("to_fock: empty superposition");
  std::vector<Complex> amps(cutoff + 1, Complex{0.0, 0.0});
  bool warn = false;
  for (std::size_t k = 0; k < s.coeffs.size(); ++k) {
    if (s.coeffs[k] == Complex{0.0, 0.0}) continue;
    const auto comp = fock::coherent_fock(s.label(k), cutoff);
    warn = warn || comp.truncation_warning();
    const Complex w = s.coeffs[k] * s.phase(k);
    for (std::size_t n = 0; n <= cutoff; ++n) amps[n] += w * comp[n];
  }
  return fock::FockVector(std::move(amps), warn);
}

/// <target|state> evaluated component-wise against the Fock target.
inline Complex overlap_with(const fock::FockVector& target, const LineSuperposition& s) {
  return fock::inner(target, to_fock(s, target.cutoff()));
}

inline double fidelity_to_target(const LineSuperposition& s, const fock::FockVector& target) {
  const double nt = std::real(fock::inner(target, target));
  if (!(nt > 0.0)) throw InputError("fidelity_to_target: zero target");
  const double ns = norm_squared(s);
  if (!(ns > 0.0)) throw InputError("fidelity_to_target: zero state");
  const double f = std::norm(overlap_with(target, s)) / (nt * ns);
  return std::min(f, 1.0);
}

}  // namespace ile::protocol

#endif  // ILE_PROTOCOL_HPP
