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

// Single-mode primitives in a truncated number basis: coherent states,
// displacement operators, overlaps and fidelities. Every other module
// cross-checks against these.

#ifndef ILE_FOCK_HPP
#define ILE_FOCK_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ile/errors.hpp"

namespace ile {

using Complex = std::complex<double>;

inline bool is_finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

namespace fock {

/// Truncated pure state of one mode, amplitudes indexed by phonon number
/// 0..cutoff. States are kept unnormalized.
class FockVector {
 public:
  explicit FockVector(std::size_t cutoff) : amplitudes_(cutoff + 1, Complex{0.0, 0.0}) {
    if (cutoff < 1) throw InputError("FockVector: cutoff must be >= 1");
  }

  explicit FockVector(std::vector<Complex> amplitudes, bool truncation_warning = false)
      : amplitudes_(std::move(amplitudes)), truncation_warning_(truncation_warning) {
    if (amplitudes_.size() < 2) throw InputError("FockVector: need at least two amplitudes");
    for (const auto& a : amplitudes_) {
      if (!is_finite(a)) throw InputError("FockVector: non-finite amplitude");
    }
  }

  std::size_t cutoff() const { return amplitudes_.size() - 1; }
  std::size_t size() const { return amplitudes_.size(); }
  std::span<const Complex> amplitudes() const { return amplitudes_; }
  Complex operator[](std::size_t n) const { return amplitudes_[n]; }

  /// Weight held in the top three levels (n >= cutoff-2). Large values mean
  /// the truncation is cutting into the state.
  double tail_weight() const {
    const std::size_t m = cutoff();
    const std::size_t first = m >= 2 ? m - 2 : 0;
    double w = 0.0;
    for (std::size_t n = first; n <= m; ++n) w += std::norm(amplitudes_[n]);
    return w;
  }

  /// Set when the state was built from a displacement too large for the cutoff.
  bool truncation_warning() const { return truncation_warning_; }

  Eigen::VectorXcd to_eigen() const {
    return Eigen::Map<const Eigen::VectorXcd>(amplitudes_.data(),
                                              static_cast<Eigen::Index>(amplitudes_.size()));
  }

 private:
  std::vector<Complex> amplitudes_;
  bool truncation_warning_ = false;
};

/// Cutoff keeping Poisson tails below ~1e-10 for displacements up to max_abs.
inline std::size_t recommended_cutoff(double max_abs) {
  const double g = std::abs(max_abs);
  return static_cast<std::size_t>(std::ceil(g * g + 6.0 * g + 10.0));
}

/// |alpha|^2 > cutoff/2 makes the truncated expansion unreliable.
inline bool truncation_unreliable(Complex alpha, std::size_t cutoff) {
  return std::norm(alpha) > static_cast<double>(cutoff) / 2.0;
}

namespace detail {

// e^{-|a|^2/2} a^n / sqrt(n!) for n = 0..count-1, built multiplicatively.
inline std::vector<Complex> coherent_amplitudes(Complex alpha, std::size_t count) {
  std::vector<Complex> out(count);
  out[0] = Complex{std::exp(-0.5 * std::norm(alpha)), 0.0};
  for (std::size_t n = 1; n < count; ++n) {
    out[n] = out[n - 1] * alpha / std::sqrt(static_cast<double>(n));
  }
  return out;
}

}  // namespace detail

inline FockVector coherent_fock(Complex alpha, std::size_t cutoff) {
  if (cutoff < 1) throw InputError("coherent_fock: cutoff must be >= 1");
  if (!is_finite(alpha)) throw InputError("coherent_fock: non-finite alpha");
  return FockVector(detail::coherent_amplitudes(alpha, cutoff + 1),
                    truncation_unreliable(alpha, cutoff));
}

/// Dense <m|D(beta)|n> on the truncated space.
class DisplacementMatrix {
 public:
  DisplacementMatrix(Complex beta, Eigen::MatrixXcd entries)
      : beta_(beta), entries_(std::move(entries)) {}

  std::size_t cutoff() const { return static_cast<std::size_t>(entries_.rows()) - 1; }
  Complex beta() const { return beta_; }
  Complex entry(std::size_t m, std::size_t n) const {
    return entries_(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  }
  const Eigen::MatrixXcd& matrix() const { return entries_; }

 private:
  Complex beta_;
  Eigen::MatrixXcd entries_;
};

/// Matrix elements from the associated-Laguerre closed form
///   <m|D(b)|n> = e^{-|b|^2/2} b^{m-n} sqrt(n!/m!) L_n^{(m-n)}(|b|^2),  m >= n,
/// and <m|D(b)|n> = conj(<n|D(-b)|m>) above the diagonal. The Laguerre factor
/// runs the three-term recurrence in n on the factorial-normalized
/// polynomial, so no factorial ratio is ever formed explicitly.
inline DisplacementMatrix displacement_matrix(Complex beta, std::size_t cutoff) {
  if (cutoff < 1) throw InputError("displacement_matrix: cutoff must be >= 1");
  if (!is_finite(beta)) throw InputError("displacement_matrix: non-finite beta");
  const std::size_t dim = cutoff + 1;
  const double x = std::norm(beta);
  const auto lower = detail::coherent_amplitudes(beta, dim);
  const auto upper = detail::coherent_amplitudes(-beta, dim);

  Eigen::MatrixXcd d(dim, dim);
  std::vector<double> ell(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    const std::size_t len = dim - k;
    const double kd = static_cast<double>(k);
    ell[0] = 1.0;
    if (len > 1) ell[1] = (1.0 + kd - x) / std::sqrt(1.0 + kd);
    for (std::size_t j = 1; j + 1 < len; ++j) {
      const double jd = static_cast<double>(j);
      ell[j + 1] = ((2.0 * jd + 1.0 + kd - x) * ell[j] - std::sqrt(jd * (jd + kd)) * ell[j - 1]) /
                   std::sqrt((jd + 1.0) * (jd + 1.0 + kd));
    }
    for (std::size_t j = 0; j < len; ++j) {
      const auto row = static_cast<Eigen::Index>(j + k);
      const auto col = static_cast<Eigen::Index>(j);
      d(row, col) = lower[k] * ell[j];
      if (k > 0) d(col, row) = std::conj(upper[k]) * ell[j];
    }
  }
  return DisplacementMatrix(beta, std::move(d));
}

inline FockVector apply(const DisplacementMatrix& op, const FockVector& state) {
  if (op.cutoff() != state.cutoff()) {
    throw InputError("apply_displacement: cutoff mismatch (" + std::to_string(op.cutoff()) +
                     " vs " + std::to_string(state.cutoff()) + ")");
  }
  const Eigen::VectorXcd out = op.matrix() * state.to_eigen();
  return FockVector(std::vector<Complex>(out.data(), out.data() + out.size()),
                    state.truncation_warning() || truncation_unreliable(op.beta(), op.cutoff()));
}

inline FockVector apply_displacement(const FockVector& state, Complex beta) {
  return apply(displacement_matrix(beta, state.cutoff()), state);
}

/// <g1|g2> for normalized coherent states, no truncation.
inline Complex coherent_overlap(Complex g1, Complex g2) {
  return std::exp(-0.5 * std::norm(g1) - 0.5 * std::norm(g2) + std::conj(g1) * g2);
}

/// Phase picked up by D(gamma)|alpha> = phase * |alpha + gamma>.
inline Complex displacement_phase(Complex gamma, Complex alpha) {
  return std::exp(0.5 * (gamma * std::conj(alpha) - std::conj(gamma) * alpha));
}

inline Complex inner(const FockVector& a, const FockVector& b) {
  if (a.cutoff() != b.cutoff()) throw InputError("inner: cutoff mismatch");
  Complex acc{0.0, 0.0};
  for (std::size_t n = 0; n < a.size(); ++n) acc += std::conj(a[n]) * b[n];
  return acc;
}

inline double norm(const FockVector& a) { return std::sqrt(std::real(inner(a, a))); }

/// |<a|b>|^2 / (|a|^2 |b|^2); inputs need not be normalized.
inline double fidelity_pure(const FockVector& a, const FockVector& b) {
  const double na = std::real(inner(a, a));
  const double nb = std::real(inner(b, b));
  if (na <= 0.0 || nb <= 0.0) throw InputError("fidelity_pure: zero-norm input");
  const double f = std::norm(inner(a, b)) / (na * nb);
  return f > 1.0 ? 1.0 : f;
}

}  // namespace fock
}  // namespace ile

#endif  // ILE_FOCK_HPP
