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

// Planner: recover internal-state weights from target line coefficients.
//
// The last weight solves sum_k C_n^{n-k} x^k = 0 with p = (1+x)/(1-x); the
// recurrence is then run backwards to get C_{n-1}, and so on down to n = 0.
// Every distinct root at every level opens a branch.

#ifndef ILE_INVERSE_HPP
#define ILE_INVERSE_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ile/errors.hpp"
#include "ile/fock.hpp"
#include "ile/protocol.hpp"

namespace ile::inverse {

struct SolveOptions {
  std::size_t max_branches = 64;
  double root_tolerance = 1e-12;
  double residual_tolerance = 1e-9;
  bool enumerate_all = false;
};

struct WeightSolution {
  std::vector<Complex> weights;  // p_1..p_n in application order
  std::vector<int> branch_id;    // root index chosen at each peel step
  double p_nominal = 0.0;
  double residual = 0.0;  // relative projective reconstruction error
  double max_abs_weight = 0.0;
};

struct DegenerateReport {
  std::vector<Complex> forced_weights;  // +-1 factors stripped from the ends
  std::vector<Complex> reduced;         // remaining coefficients, both ends nonzero
};

/// Relative L2 distance between `candidate` and `target` after fitting the
/// best complex scale onto candidate.
inline double projective_residual(std::span<const Complex> candidate,
                                  std::span<const Complex> target) {
  if (candidate.size() != target.size()) return std::numeric_limits<double>::infinity();
  Complex num{0.0, 0.0};
  double den = 0.0;
  double tn = 0.0;
  for (std::size_t k = 0; k < target.size(); ++k) {
    num += std::conj(candidate[k]) * target[k];
    den += std::norm(candidate[k]);
    tn += std::norm(target[k]);
  }
  if (!(den > 0.0) || !(tn > 0.0)) return std::numeric_limits<double>::infinity();
  const Complex s = num / den;
  double err = 0.0;
  for (std::size_t k = 0; k < target.size(); ++k) err += std::norm(s * candidate[k] - target[k]);
  return std::sqrt(err / tn);
}

inline std::vector<Complex> normalized_max(std::span<const Complex> c) {
  double m = 0.0;
  for (const auto& z : c) m = std::max(m, std::abs(z));
  std::vector<Complex> out(c.begin(), c.end());
  if (m > 0.0) {
    for (auto& z : out) z /= m;
  }
  return out;
}

inline void validate_target(std::span<const Complex> coeffs) {
  if (coeffs.size() < 2) throw InputError("target needs at least two coefficients (n >= 1)");
  bool any = false;
  for (const auto& z : coeffs) {
    if (!is_finite(z)) throw InputError("target has a non-finite coefficient");
    any = any || z != Complex{0.0, 0.0};
  }
  if (!any) throw InputError("target coefficients are all zero");
}

/// Strips vanishing leading coefficients (each forces p = -1, the factor
/// 2 D(beta)) and vanishing trailing ones (p = +1, factor 2 D(-beta)).
inline DegenerateReport handle_degenerate(std::span<const Complex> target, double zero_tol = 1e-12) {
  validate_target(target);
  auto c = normalized_max(target);
  DegenerateReport rep;
  while (c.size() > 1 && std::abs(c.front()) <= zero_tol) {
    rep.forced_weights.push_back(Complex{-1.0, 0.0});
    c.erase(c.begin());
    for (auto& z : c) z *= 0.5;
  }
  while (c.size() > 1 && std::abs(c.back()) <= zero_tol) {
    rep.forced_weights.push_back(Complex{1.0, 0.0});
    c.pop_back();
    for (auto& z : c) z *= 0.5;
  }
  rep.reduced = std::move(c);
  return rep;
}

namespace detail {

inline Complex horner(std::span<const Complex> ascending, Complex x) {
  Complex acc{0.0, 0.0};
  for (std::size_t k = ascending.size(); k-- > 0;) acc = acc * x + ascending[k];
  return acc;
}

inline Complex horner_derivative(std::span<const Complex> ascending, Complex x) {
  Complex acc{0.0, 0.0};
  for (std::size_t k = ascending.size(); k-- > 1;) {
    acc = acc * x + static_cast<double>(k) * ascending[k];
  }
  return acc;
}

inline void newton_polish(std::span<const Complex> ascending, Complex& x, double tol) {
  for (int it = 0; it < 3; ++it) {
    const Complex d = horner_derivative(ascending, x);
    if (std::abs(d) == 0.0) return;
    const Complex step = horner(ascending, x) / d;
    if (!is_finite(step)) return;
    const Complex trial = x - step;
    if (std::abs(horner(ascending, trial)) > std::abs(horner(ascending, x))) return;
    x = trial;
    if (std::abs(step) <= tol * std::max(1.0, std::abs(x))) return;
  }
}

// Position on the circle measured counterclockwise from the positive real
// axis, with near-real roots snapped onto the axis.
inline double canonical_arg(Complex x) {
  if (std::abs(x.imag()) <= 1e-12 * std::max(1.0, std::abs(x))) {
    return x.real() >= 0.0 ? 0.0 : std::numbers::pi;
  }
  const double a = std::arg(x);
  return a < 0.0 ? a + 2.0 * std::numbers::pi : a;
}

inline bool canonical_less(Complex a, Complex b) {
  const double aa = canonical_arg(a);
  const double ab = canonical_arg(b);
  if (std::abs(aa - ab) > 1e-9) return aa < ab;
  return std::abs(a) < std::abs(b);
}

}  // namespace detail

/// Distinct roots of sum_k ascending[k] x^k from the companion-matrix
/// eigenvalues. Clusters (multiple roots) are replaced by their mean; simple
/// roots get Newton polishing. Output is sorted counterclockwise by argument.
inline std::vector<Complex> polynomial_roots(std::span<const Complex> ascending, double tol = 1e-12) {
  std::size_t deg = ascending.size();
  while (deg > 0 && ascending[deg - 1] == Complex{0.0, 0.0}) --deg;
  if (deg <= 1) return {};
  const std::size_t n = deg - 1;
  const Complex lead = ascending[n];
  Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n),
                                                       static_cast<Eigen::Index>(n));
  for (std::size_t i = 1; i < n; ++i) {
    companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n - 1)) = -ascending[i] / lead;
  }
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> eig(companion, false);
  if (eig.info() != Eigen::Success) throw SolverError("polynomial_roots: eigensolver failed");
  std::vector<Complex> raw(eig.eigenvalues().data(), eig.eigenvalues().data() + n);

  // A k-fold root comes back from the eigensolver as k points spread by
  // ~eps^{1/k}; their mean is accurate. Members are only merged when the mean
  // is not a worse root than the members themselves.
  const auto poly = ascending.first(deg);
  std::vector<Complex> roots;
  std::vector<bool> used(raw.size(), false);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (used[i]) continue;
    std::vector<std::size_t> members{i};
    Complex sum = raw[i];
    double worst = std::abs(detail::horner(poly, raw[i]));
    for (std::size_t j = i + 1; j < raw.size(); ++j) {
      if (!used[j] && std::abs(raw[j] - raw[i]) <= 1e-4 * std::max(1.0, std::abs(raw[i]))) {
        members.push_back(j);
        sum += raw[j];
        worst = std::max(worst, std::abs(detail::horner(poly, raw[j])));
      }
    }
    const Complex mean = sum / static_cast<double>(members.size());
    const double scale = std::abs(lead) * std::numeric_limits<double>::epsilon();
    if (members.size() > 1 && std::abs(detail::horner(poly, mean)) <= 100.0 * worst + scale) {
      for (auto j : members) used[j] = true;
      roots.push_back(mean);
    } else {
      used[i] = true;
      Complex r = raw[i];
      detail::newton_polish(poly, r, tol);
      roots.push_back(r);
    }
  }
  std::sort(roots.begin(), roots.end(), detail::canonical_less);
  return roots;
}

namespace detail {

struct Node {
  std::vector<Complex> coeffs;  // current C^k, k = 0..m
  std::vector<Complex> peeled;  // p_n, p_{n-1}, ... in peel order
  std::vector<int> branch;
  double running_nominal = 1.0;
};

inline bool branch_less(const std::vector<int>& a, const std::vector<int>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

inline bool same_multiset(std::vector<Complex> a, std::vector<Complex> b, double tol) {
  if (a.size() != b.size()) return false;
  std::sort(a.begin(), a.end(), canonical_less);
  for (const auto& z : a) {
    auto it = std::find_if(b.begin(), b.end(),
                           [&](Complex w) { return std::abs(w - z) <= tol * std::max(1.0, std::abs(z)); });
    if (it == b.end()) return false;
    b.erase(it);
  }
  return true;
}

}  // namespace detail

/// Peel-back solver. Returns every surviving branch sorted by branch_id.
inline std::vector<WeightSolution> solve_weights(std::span<const Complex> target,
                                                 const SolveOptions& opts = {}) {
  if (opts.max_branches < 1) throw InputError("max_branches must be >= 1");
  validate_target(target);
  const auto normalized = normalized_max(target);
  const auto degenerate = handle_degenerate(normalized, opts.root_tolerance);

  // Original reduced polynomial in x (ascending coefficient a_k = C^{m-k}),
  // used to polish roots found on deflated levels.
  std::vector<Complex> original_poly(degenerate.reduced.rbegin(), degenerate.reduced.rend());

  std::vector<detail::Node> frontier{detail::Node{degenerate.reduced, {}, {}, 1.0}};
  std::size_t m = degenerate.reduced.size() - 1;
  std::size_t infinite_weight_branches = 0;
  while (m > 0) {
    std::vector<detail::Node> next;
    for (const auto& node : frontier) {
      std::vector<Complex> poly(node.coeffs.rbegin(), node.coeffs.rend());
      const auto roots = polynomial_roots(poly, opts.root_tolerance);
      for (std::size_t r = 0; r < roots.size(); ++r) {
        Complex x = roots[r];
        detail::newton_polish(original_poly, x, opts.root_tolerance);
        if (std::abs(1.0 - x) <= 1e-10) {
          ++infinite_weight_branches;  // p = infinity: only the bare |0> state realizes it
          continue;
        }
        const Complex p = (1.0 + x) / (1.0 - x);
        if (std::abs(1.0 + p) <= 1e-14) continue;
        std::vector<Complex> prev(m);
        prev[0] = node.coeffs[0] / (1.0 + p);
        for (std::size_t k = 1; k < m; ++k) {
          prev[k] = (node.coeffs[k] - (1.0 - p) * prev[k - 1]) / (1.0 + p);
        }
        detail::Node child;
        child.coeffs = normalized_max(prev);
        child.peeled = node.peeled;
        child.peeled.push_back(p);
        child.branch = node.branch;
        child.branch.push_back(static_cast<int>(r));
        child.running_nominal = node.running_nominal * 0.25 / (1.0 + std::norm(p));
        next.push_back(std::move(child));
      }
    }
    std::sort(next.begin(), next.end(), [](const detail::Node& a, const detail::Node& b) {
      return detail::branch_less(a.branch, b.branch);
    });
    if (!opts.enumerate_all) {
      std::vector<detail::Node> unique;
      for (auto& node : next) {
        const bool dup = std::any_of(unique.begin(), unique.end(), [&](const detail::Node& u) {
          return detail::same_multiset(u.peeled, node.peeled, 1e-9);
        });
        if (!dup) unique.push_back(std::move(node));
      }
      next = std::move(unique);
    }
    if (next.size() > opts.max_branches) {
      std::stable_sort(next.begin(), next.end(), [](const detail::Node& a, const detail::Node& b) {
        return a.running_nominal > b.running_nominal * (1.0 + 1e-12);
      });
      next.resize(opts.max_branches);
      std::sort(next.begin(), next.end(), [](const detail::Node& a, const detail::Node& b) {
        return detail::branch_less(a.branch, b.branch);
      });
    }
    frontier = std::move(next);
    --m;
    if (frontier.empty()) break;
  }

  std::vector<WeightSolution> out;
  double best_residual = std::numeric_limits<double>::infinity();
  for (const auto& node : frontier) {
    if (node.peeled.size() + 1 != degenerate.reduced.size()) continue;
    WeightSolution s;
    s.weights = degenerate.forced_weights;
    s.weights.insert(s.weights.end(), node.peeled.rbegin(), node.peeled.rend());
    s.branch_id.assign(degenerate.forced_weights.size(), 0);
    s.branch_id.insert(s.branch_id.end(), node.branch.begin(), node.branch.end());
    s.p_nominal = protocol::success_probability_nominal(s.weights);
    s.residual = projective_residual(protocol::forward_coeffs(s.weights), normalized);
    for (const auto& w : s.weights) s.max_abs_weight = std::max(s.max_abs_weight, std::abs(w));
    best_residual = std::min(best_residual, s.residual);
    if (s.residual <= opts.residual_tolerance) out.push_back(std::move(s));
  }
  if (out.empty()) {
    std::ostringstream msg;
    msg << "solve_weights: no branch reached residual " << opts.residual_tolerance;
    if (std::isfinite(best_residual)) msg << " (best " << best_residual << ")";
    if (infinite_weight_branches > 0) {
      msg << "; " << infinite_weight_branches
          << " branch(es) need an infinite weight (root x = 1), i.e. the bare |0> internal state";
    }
    throw SolverError(msg.str());
  }
  return out;
}

/// Highest nominal success probability; ties go to the lexicographically
/// smallest branch_id.
inline WeightSolution best_realization(std::span<const WeightSolution> solutions) {
  if (solutions.empty()) throw InputError("best_realization: no solutions");
  const WeightSolution* best = &solutions[0];
  for (const auto& s : solutions.subspan(1)) {
    const double tol = 1e-12 * std::max(s.p_nominal, best->p_nominal);
    if (s.p_nominal > best->p_nominal + tol ||
        (std::abs(s.p_nominal - best->p_nominal) <= tol && detail::branch_less(s.branch_id, best->branch_id))) {
      best = &s;
    }
  }
  return *best;
}

struct FitResult {
  std::vector<Complex> coeffs;
  double fidelity = 0.0;
  std::size_t rank = 0;  // number of Gram eigenvalues kept
};

/// Least-squares projection of a Fock target onto span{D[(2k-n) beta]|alpha>}:
/// c = S^+ v with S the analytic Gram matrix and v_k = <phi_k|target>.
inline FitResult fit_target(const fock::FockVector& target, std::size_t n, Complex alpha, Complex beta) {
  const double tn = std::real(fock::inner(target, target));
  if (!(tn > 0.0)) throw InputError("fit_target: zero target");
  if (std::abs(beta) == 0.0) throw InputError("fit_target: beta must be nonzero");

  protocol::LineSuperposition grid{alpha, beta, std::vector<Complex>(n + 1, Complex{1.0, 0.0})};
  const Eigen::MatrixXcd gram = protocol::line_gram(grid);
  Eigen::VectorXcd v(static_cast<Eigen::Index>(n + 1));
  for (std::size_t k = 0; k <= n; ++k) {
    const auto comp = fock::coherent_fock(grid.label(k), target.cutoff());
    v(static_cast<Eigen::Index>(k)) = std::conj(grid.phase(k)) * fock::inner(comp, target);
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram);
  if (eig.info() != Eigen::Success) throw SolverError("fit_target: Gram eigensolver failed");
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double lmax = lambda.maxCoeff();
  if (!(lmax > 0.0) || !std::isfinite(lmax)) {
    throw SolverError("fit_target: Gram matrix is singular; try a larger |beta|");
  }
  const double floor = 1e-12 * lmax;
  const Eigen::MatrixXcd& u = eig.eigenvectors();
  const Eigen::VectorXcd uv = u.adjoint() * v;
  Eigen::VectorXcd scaled = Eigen::VectorXcd::Zero(uv.size());
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) > floor) {
      scaled(i) = uv(i) / lambda(i);
      ++rank;
    }
  }
  const Eigen::VectorXcd c = u * scaled;
  FitResult out;
  out.coeffs.assign(c.data(), c.data() + c.size());
  out.rank = rank;
  out.fidelity = std::clamp(std::real(v.dot(c)) / tn, 0.0, 1.0);
  return out;
}

}  // namespace ile::inverse

#endif  // ILE_INVERSE_HPP
