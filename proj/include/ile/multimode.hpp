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

// Conditional evolution of all N longitudinal modes.
//
// States are sums of products of coherent states, sum_t c_t (x)_l |g_{t,l}>,
// so norms, phonon numbers and reduced COM quantities follow from products
// of analytic overlaps; nothing here truncates a Fock space except to_fock.

#ifndef ILE_MULTIMODE_HPP
#define ILE_MULTIMODE_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ile/chain.hpp"
#include "ile/errors.hpp"
#include "ile/fock.hpp"
#include "ile/protocol.hpp"

namespace ile::multimode {

/// Printed closed-form beta_i^l (grows linearly in t) or the first-order time
/// integral of the interaction-picture Hamiltonian (bounded in t).
enum class BetaVariant { printed, integrated };

inline const char* to_string(BetaVariant v) { return v == BetaVariant::printed ? "printed" : "integrated"; }

struct MultimodeTerm {
  Complex coeff{0.0, 0.0};
  std::vector<Complex> labels;  // one coherent amplitude per mode, COM first
};

struct MultimodeSuperposition {
  std::size_t n_modes = 0;
  std::vector<MultimodeTerm> terms;
};

struct TermOptions {
  std::size_t max_terms = std::size_t{1} << 20;
  double merge_tolerance = 1e-10;
  bool prune = false;
  double prune_threshold = 1e-12;  // relative to the largest |coefficient|
};

/// Reads ILE_MAX_TERMS; falls back to 2^20.
inline TermOptions term_options_from_env() {
  TermOptions opts;
  if (const char* env = std::getenv("ILE_MAX_TERMS")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0' || v == 0) {
      throw InputError("ILE_MAX_TERMS must be a positive integer");
    }
    opts.max_terms = static_cast<std::size_t>(v);
  }
  return opts;
}

inline Complex product_overlap(std::span<const Complex> a, std::span<const Complex> b) {
  Complex acc{1.0, 0.0};
  for (std::size_t l = 0; l < a.size(); ++l) acc *= fock::coherent_overlap(a[l], b[l]);
  return acc;
}

inline Complex inner(const MultimodeSuperposition& a, const MultimodeSuperposition& b) {
  if (a.n_modes != b.n_modes) throw InputError("multimode inner: mode count mismatch");
  Complex acc{0.0, 0.0};
  for (const auto& ta : a.terms) {
    for (const auto& tb : b.terms) {
      acc += std::conj(ta.coeff) * tb.coeff * product_overlap(ta.labels, tb.labels);
    }
  }
  return acc;
}

inline double norm_squared(const MultimodeSuperposition& s) { return std::real(inner(s, s)); }

inline double fidelity(const MultimodeSuperposition& a, const MultimodeSuperposition& b) {
  const double na = norm_squared(a);
  const double nb = norm_squared(b);
  if (!(na > 0.0) || !(nb > 0.0)) throw InputError("multimode fidelity: zero-norm input");
  return std::min(1.0, std::norm(inner(a, b)) / (na * nb));
}

/// Flattened Fock tensor, mode 0 most significant, each mode truncated at
/// `cutoff`.
inline Eigen::VectorXcd to_fock(const MultimodeSuperposition& s, std::size_t cutoff) {
  const std::size_t d = cutoff + 1;
  std::size_t total = 1;
  for (std::size_t l = 0; l < s.n_modes; ++l) total *= d;
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(total));
  for (const auto& term : s.terms) {
    Eigen::VectorXcd prod = Eigen::VectorXcd::Constant(1, term.coeff);
    for (std::size_t l = 0; l < s.n_modes; ++l) {
      const auto amps = fock::coherent_fock(term.labels[l], cutoff).to_eigen();
      Eigen::VectorXcd next(prod.size() * amps.size());
      for (Eigen::Index i = 0; i < prod.size(); ++i) next.segment(i * amps.size(), amps.size()) = prod(i) * amps;
      prod = std::move(next);
    }
    out += prod;
  }
  return out;
}

namespace detail {

inline std::int64_t quantize(double x, double tol) { return std::llround(x / tol); }

inline std::vector<std::int64_t> label_key(const MultimodeTerm& t, double tol) {
  std::vector<std::int64_t> key;
  key.reserve(2 * t.labels.size());
  for (const auto& g : t.labels) {
    key.push_back(quantize(g.real(), tol));
    key.push_back(quantize(g.imag(), tol));
  }
  return key;
}

}  // namespace detail

/// Sums terms whose labels agree to `merge_tolerance`; output sorted by
/// label so the result does not depend on expansion order.
inline void merge_terms(MultimodeSuperposition& s, double tol) {
  std::vector<std::pair<std::vector<std::int64_t>, MultimodeTerm>> keyed;
  keyed.reserve(s.terms.size());
  for (auto& t : s.terms) {
    if (t.coeff == Complex{0.0, 0.0}) continue;
    keyed.emplace_back(detail::label_key(t, tol), std::move(t));
  }
  std::stable_sort(keyed.begin(), keyed.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<MultimodeTerm> merged;
  for (std::size_t i = 0; i < keyed.size();) {
    MultimodeTerm acc = std::move(keyed[i].second);
    std::size_t j = i + 1;
    for (; j < keyed.size() && keyed[j].first == keyed[i].first; ++j) {
      acc.coeff += keyed[j].second.coeff;
    }
    merged.push_back(std::move(acc));
    i = j;
  }
  s.terms = std::move(merged);
}

/// Drops terms with |c| below threshold * max|c|; returns the dropped share
/// of sum |c|^2.
inline double prune_terms(MultimodeSuperposition& s, double threshold) {
  double cmax = 0.0;
  double total = 0.0;
  for (const auto& t : s.terms) {
    cmax = std::max(cmax, std::abs(t.coeff));
    total += std::norm(t.coeff);
  }
  double dropped = 0.0;
  std::erase_if(s.terms, [&](const MultimodeTerm& t) {
    if (std::abs(t.coeff) < threshold * cmax) {
      dropped += std::norm(t.coeff);
      return true;
    }
    return false;
  });
  return total > 0.0 ? dropped / total : 0.0;
}

/// beta_i^l for one cycle of duration t; rows are ions, columns modes.
struct DisplacementPlanEntry {
  Eigen::MatrixXcd betas;
};

///   printed:    beta_i^l = i eta Omega t sqrt(N/mu_l) b_i^l e^{i (mu_l - delta) t}
///   integrated: beta_i^l = eta Omega sqrt(N/mu_l) b_i^l (e^{i (mu_l - delta) t} - 1)/(mu_l - delta)
/// The two agree as (mu_l - delta) t -> 0.
inline DisplacementPlanEntry cycle_displacements(const chain::ModeTable& modes,
                                                 const protocol::PhysicalParams& params, double t,
                                                 BetaVariant variant) {
  if (!(t > 0.0)) throw InputError("cycle_displacements: t must be positive");
  const std::size_t n = modes.size();
  if (n != params.n_ions) throw InputError("cycle_displacements: mode table does not match n_ions");
  const Complex i_unit{0.0, 1.0};
  DisplacementPlanEntry out{Eigen::MatrixXcd(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n))};
  for (std::size_t l = 0; l < n; ++l) {
    const double mu = modes.frequencies[l];
    const double detune = mu - params.delta;
    const double scale = params.eta * params.omega * std::sqrt(static_cast<double>(n) / mu);
    Complex time_factor;
    if (variant == BetaVariant::printed) {
      time_factor = i_unit * t * std::exp(i_unit * detune * t);
    } else if (std::abs(detune * t) < 1e-8) {
      time_factor = i_unit * t * (1.0 + 0.5 * i_unit * detune * t);
    } else {
      time_factor = (std::exp(i_unit * detune * t) - 1.0) / detune;
    }
    for (std::size_t i = 0; i < n; ++i) {
      out.betas(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) = scale * modes.b(i, l) * time_factor;
    }
  }
  return out;
}

/// Same table with every l >= 2 column cleared, leaving only the COM drive.
inline DisplacementPlanEntry zero_spectators(DisplacementPlanEntry entry) {
  if (entry.betas.cols() > 1) entry.betas.rightCols(entry.betas.cols() - 1).setZero();
  return entry;
}

struct ExactRun {
  MultimodeSuperposition state;  // conditional state including all prefactors
  double p_exact = 0.0;
  double dropped_weight = 0.0;
};

namespace detail {

inline void check_plan(const protocol::ProtocolPlan& plan, const chain::ModeTable& modes) {
  protocol::validate(plan);
  if (modes.size() != plan.params.n_ions) {
    throw InputError("plan has " + std::to_string(plan.params.n_ions) + " ions but mode table has " +
                     std::to_string(modes.size()) + " modes");
  }
}

inline void check_table(const protocol::ProtocolPlan& plan, const DisplacementPlanEntry& table) {
  protocol::validate(plan);
  const auto n = static_cast<Eigen::Index>(plan.params.n_ions);
  if (table.betas.rows() != n || table.betas.cols() != n) {
    throw InputError("displacement table does not match n_ions");
  }
  if (!table.betas.allFinite()) throw InputError("displacement table has non-finite entries");
}

inline void check_cap(std::size_t count, const TermOptions& opts) {
  if (count > opts.max_terms) {
    throw TermCapExceeded("multimode expansion needs " + std::to_string(count) +
                          " terms, above the cap of " + std::to_string(opts.max_terms) +
                          " (raise ILE_MAX_TERMS or enable pruning)");
  }
}

// Applies one ion's conditional operator
//   (1-p)/(2 sqrt(1+|p|^2)) prod_l D_l(beta_l) + (1+p)/(2 sqrt(1+|p|^2)) prod_l D_l(-beta_l)
// to every term, restricted to the modes listed in `mode_ids`.
inline void apply_ion(MultimodeSuperposition& s, Complex p, std::span<const Complex> betas,
                      std::span<const std::size_t> mode_ids, const TermOptions& opts) {
  check_cap(2 * s.terms.size(), opts);
  const double pref = 0.5 / std::sqrt(1.0 + std::norm(p));
  std::vector<MultimodeTerm> next;
  next.reserve(2 * s.terms.size());
  for (const auto& term : s.terms) {
    for (int sign : {+1, -1}) {
      const Complex w = sign > 0 ? (1.0 - p) : (1.0 + p);
      if (w == Complex{0.0, 0.0}) continue;
      MultimodeTerm child{term.coeff * pref * w, term.labels};
      for (std::size_t j = 0; j < mode_ids.size(); ++j) {
        const Complex shift = static_cast<double>(sign) * betas[j];
        Complex& label = child.labels[mode_ids[j]];
        child.coeff *= fock::displacement_phase(shift, label);
        label += shift;
      }
      next.push_back(std::move(child));
    }
  }
  s.terms = std::move(next);
  merge_terms(s, opts.merge_tolerance);
  check_cap(s.terms.size(), opts);
}

inline MultimodeSuperposition initial_state(std::size_t n_modes, Complex alpha) {
  MultimodeSuperposition s{n_modes, {}};
  MultimodeTerm t{Complex{1.0, 0.0}, std::vector<Complex>(n_modes, Complex{0.0, 0.0})};
  t.labels[0] = alpha;
  s.terms.push_back(std::move(t));
  return s;
}

}  // namespace detail

/// Expands the product over ions and cycles of the spin-conditioned
/// operators. Every ion displaces every mode at once, so branches entangle
/// the modes; the result is a sum over branches of products across modes.
inline ExactRun run_conditional_exact(const protocol::ProtocolPlan& plan, const DisplacementPlanEntry& table,
                                      const TermOptions& opts = {}) {
  detail::check_table(plan, table);
  const std::size_t n = plan.params.n_ions;
  std::vector<std::size_t> all_modes(n);
  for (std::size_t l = 0; l < n; ++l) all_modes[l] = l;

  ExactRun run;
  run.state = detail::initial_state(n, plan.alpha);
  std::vector<Complex> betas(n);
  for (const auto& cycle : plan.cycles) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t l = 0; l < n; ++l) {
        betas[l] = table.betas(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l));
      }
      detail::apply_ion(run.state, cycle.weights[i], betas, all_modes, opts);
      if (opts.prune) run.dropped_weight += prune_terms(run.state, opts.prune_threshold);
    }
  }
  run.p_exact = norm_squared(run.state);
  return run;
}

inline ExactRun run_conditional_exact(const protocol::ProtocolPlan& plan, const chain::ModeTable& modes,
                                      BetaVariant variant, const TermOptions& opts = {}) {
  detail::check_plan(plan, modes);
  return run_conditional_exact(plan, cycle_displacements(modes, plan.params, plan.cycles.front().duration, variant),
                               opts);
}

/// The mode-factorized form: per mode l, prod_i [(1-p_i) D(beta_i^l) +
/// (1+p_i) D(-beta_i^l)] acting on that mode alone, then the tensor product
/// over modes. The per-ion normalization is applied once overall. Every
/// undisplaced mode contributes a factor 2 per ion, so the norm of this state
/// is not a probability; compare it to the exact state by fidelity only.
inline MultimodeSuperposition run_conditional_factorized(const protocol::ProtocolPlan& plan,
                                                         const DisplacementPlanEntry& table,
                                                         const TermOptions& opts = {}) {
  detail::check_table(plan, table);
  const std::size_t n = plan.params.n_ions;

  std::vector<MultimodeSuperposition> per_mode;
  for (std::size_t l = 0; l < n; ++l) {
    MultimodeSuperposition single = detail::initial_state(1, l == 0 ? plan.alpha : Complex{0.0, 0.0});
    const std::size_t only[] = {0};
    for (const auto& cycle : plan.cycles) {
      for (std::size_t i = 0; i < n; ++i) {
        const Complex b[] = {table.betas(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l))};
        const Complex p = cycle.weights[i];
        // Undo the per-ion prefactor here; it is applied once below.
        detail::apply_ion(single, p, b, only, opts);
        const double pref = 0.5 / std::sqrt(1.0 + std::norm(p));
        for (auto& t : single.terms) t.coeff /= pref;
      }
    }
    per_mode.push_back(std::move(single));
  }

  std::size_t count = 1;
  for (const auto& m : per_mode) {
    count *= m.terms.size();
    detail::check_cap(count, opts);
  }
  const double pref = protocol::conditional_prefactor(protocol::all_weights(plan));
  MultimodeSuperposition out{n, {MultimodeTerm{Complex{pref, 0.0}, {}}}};
  for (const auto& m : per_mode) {
    std::vector<MultimodeTerm> next;
    next.reserve(out.terms.size() * m.terms.size());
    for (const auto& a : out.terms) {
      for (const auto& b : m.terms) {
        MultimodeTerm t{a.coeff * b.coeff, a.labels};
        t.labels.push_back(b.labels[0]);
        next.push_back(std::move(t));
      }
    }
    out.terms = std::move(next);
  }
  merge_terms(out, opts.merge_tolerance);
  return out;
}

inline MultimodeSuperposition run_conditional_factorized(const protocol::ProtocolPlan& plan,
                                                         const chain::ModeTable& modes, BetaVariant variant,
                                                         const TermOptions& opts = {}) {
  detail::check_plan(plan, modes);
  return run_conditional_factorized(
      plan, cycle_displacements(modes, plan.params, plan.cycles.front().duration, variant), opts);
}

/// Single-mode line superposition the protocol aims for, with the COM
/// displacement of the chosen variant.
inline protocol::LineSuperposition ideal_line(const protocol::ProtocolPlan& plan, const DisplacementPlanEntry& table) {
  detail::check_table(plan, table);
  return protocol::LineSuperposition{plan.alpha, table.betas(0, 0),
                                     protocol::forward_coeffs(protocol::all_weights(plan))};
}

inline protocol::LineSuperposition ideal_line(const protocol::ProtocolPlan& plan, const chain::ModeTable& modes,
                                              BetaVariant variant) {
  detail::check_plan(plan, modes);
  return ideal_line(plan, cycle_displacements(modes, plan.params, plan.cycles.front().duration, variant));
}

struct LeakageReport {
  std::vector<double> per_mode_mean_phonon;
  double com_fidelity_vs_ideal = 0.0;
  double com_purity = 0.0;
  double factorization_gap = 0.0;
  double p_exact = 0.0;
};

/// Analytic reduced quantities from the coherent-product representation.
/// rho_COM = sum_{t,t'} c_t conj(c_t') prod_{l>=2} <g_{t',l}|g_{t,l}> |g_{t,1}><g_{t',1}| / norm.
inline LeakageReport leakage_report(const MultimodeSuperposition& exact, const MultimodeSuperposition& factorized,
                                    const protocol::LineSuperposition& ideal) {
  if (exact.terms.empty() || exact.n_modes == 0) throw InputError("leakage_report: empty state");
  if (factorized.n_modes != exact.n_modes) throw InputError("leakage_report: factorized state has wrong mode count");
  for (const auto& t : exact.terms) {
    bool on_grid = false;
    for (std::size_t k = 0; k < ideal.coeffs.size() && !on_grid; ++k) {
      on_grid = std::abs(t.labels[0] - ideal.label(k)) <= 1e-8 * std::max(1.0, std::abs(ideal.label(k)));
    }
    if (!on_grid) throw InputError("leakage_report: exact COM components are not on the ideal line grid");
  }

  const std::size_t nt = exact.terms.size();
  const std::size_t nm = exact.n_modes;
  const auto ti = [](std::size_t i) { return static_cast<Eigen::Index>(i); };

  // Per-mode overlap tables <g_{t,l}|g_{u,l}>.
  std::vector<Eigen::MatrixXcd> overlaps(nm, Eigen::MatrixXcd(ti(nt), ti(nt)));
  for (std::size_t l = 0; l < nm; ++l) {
    for (std::size_t t = 0; t < nt; ++t) {
      for (std::size_t u = 0; u < nt; ++u) {
        overlaps[l](ti(t), ti(u)) = fock::coherent_overlap(exact.terms[t].labels[l], exact.terms[u].labels[l]);
      }
    }
  }
  Eigen::VectorXcd c(ti(nt));
  for (std::size_t t = 0; t < nt; ++t) c(ti(t)) = exact.terms[t].coeff;
  Eigen::MatrixXcd full = Eigen::MatrixXcd::Ones(ti(nt), ti(nt));
  Eigen::MatrixXcd spectators = Eigen::MatrixXcd::Ones(ti(nt), ti(nt));
  for (std::size_t l = 0; l < nm; ++l) {
    full = full.cwiseProduct(overlaps[l]);
    if (l > 0) spectators = spectators.cwiseProduct(overlaps[l]);
  }
  const double norm = std::real(c.dot(full * c));
  if (!(norm > 0.0)) throw InputError("leakage_report: zero-norm state");

  LeakageReport rep;
  rep.p_exact = norm;
  for (std::size_t l = 0; l < nm; ++l) {
    Complex acc{0.0, 0.0};
    for (std::size_t t = 0; t < nt; ++t) {
      for (std::size_t u = 0; u < nt; ++u) {
        acc += std::conj(c(ti(t))) * c(ti(u)) * std::conj(exact.terms[t].labels[l]) * exact.terms[u].labels[l] *
               full(ti(t), ti(u));
      }
    }
    rep.per_mode_mean_phonon.push_back(std::real(acc) / norm);
  }

  // R_{t,t'} = c_t conj(c_t') <g_{t'}|g_t>_spectators so rho = sum R_{tt'} |g_t><g_t'|.
  const Eigen::MatrixXcd r = (c * c.adjoint()).cwiseProduct(spectators.transpose()) / norm;
  const Eigen::MatrixXcd& g = overlaps[0];
  const Eigen::MatrixXcd rg = r * g;
  rep.com_purity = std::clamp(std::real((rg * rg).trace()), 0.0, 1.0);

  // <phi|g_t> for the ideal line state phi.
  Eigen::VectorXcd phi_g(ti(nt));
  for (std::size_t t = 0; t < nt; ++t) {
    Complex acc{0.0, 0.0};
    for (std::size_t k = 0; k < ideal.coeffs.size(); ++k) {
      acc += std::conj(ideal.coeffs[k] * ideal.phase(k)) *
             fock::coherent_overlap(ideal.label(k), exact.terms[t].labels[0]);
    }
    phi_g(ti(t)) = acc;
  }
  const double phi_norm = protocol::norm_squared(ideal);
  if (!(phi_norm > 0.0)) throw InputError("leakage_report: ideal state has zero norm");
  const Complex f = phi_g.transpose() * r * phi_g.conjugate();
  rep.com_fidelity_vs_ideal = std::clamp(std::real(f) / phi_norm, 0.0, 1.0);
  rep.factorization_gap = std::max(0.0, 1.0 - fidelity(exact, factorized));
  return rep;
}

}  // namespace ile::multimode

#endif  // ILE_MULTIMODE_HPP
