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

// JSON wire formats. Complex numbers are [re, im] pairs throughout.

#ifndef ILE_IO_HPP
#define ILE_IO_HPP

#include <charconv>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "json.hpp"

#include "ile/chain.hpp"
#include "ile/errors.hpp"
#include "ile/fock.hpp"
#include "ile/inverse.hpp"
#include "ile/multimode.hpp"
#include "ile/protocol.hpp"
#include "ile/trotter.hpp"

namespace ile::io {

using json = nlohmann::ordered_json;

inline json complex_to_json(Complex z) { return json::array({z.real(), z.imag()}); }

inline Complex complex_from_json(const json& j, const std::string& what) {
  if (j.is_number()) return Complex{j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw InputError(what + ": expected [re, im]");
  }
  const Complex z{j[0].get<double>(), j[1].get<double>()};
  if (!is_finite(z)) throw InputError(what + ": non-finite value");
  return z;
}

inline json complex_list(std::span<const Complex> zs) {
  json out = json::array();
  for (const auto& z : zs) out.push_back(complex_to_json(z));
  return out;
}

inline std::vector<Complex> complex_list_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw InputError(what + ": expected an array of [re, im] pairs");
  std::vector<Complex> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(complex_from_json(j[k], what + "[" + std::to_string(k) + "]"));
  return out;
}

inline double number_field(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) throw InputError(std::string("missing numeric field '") + key + "'");
  return j[key].get<double>();
}

// --- fock ---------------------------------------------------------------

inline json to_json(const fock::FockVector& v) { return complex_list(v.amplitudes()); }

/// Accepts either a bare array of [re, im] pairs or {"amplitudes": [...]}.
inline fock::FockVector fock_from_json(const json& j) {
  const json& arr = j.is_object() && j.contains("amplitudes") ? j["amplitudes"] : j;
  auto amps = complex_list_from_json(arr, "amplitudes");
  if (amps.size() < 2) throw InputError("Fock vector needs at least two amplitudes");
  return fock::FockVector(std::move(amps));
}

// --- protocol -----------------------------------------------------------

inline json params_to_json(const protocol::PhysicalParams& p) {
  return json{{"eta", p.eta}, {"omega", p.omega}, {"delta", p.delta}, {"n_ions", p.n_ions}};
}

inline protocol::ProtocolPlan plan_from_json(const json& j) {
  if (!j.is_object()) throw InputError("plan must be a JSON object");
  protocol::ProtocolPlan plan;
  plan.params.eta = number_field(j, "eta");
  plan.params.omega = number_field(j, "omega");
  plan.params.delta = number_field(j, "delta");
  if (!j.contains("n_ions") || !j["n_ions"].is_number_integer() || j["n_ions"].get<long long>() < 1) {
    throw InputError("missing positive integer field 'n_ions'");
  }
  plan.params.n_ions = j["n_ions"].get<std::size_t>();
  plan.alpha = j.contains("alpha") ? complex_from_json(j["alpha"], "alpha") : Complex{0.0, 0.0};
  if (!j.contains("cycles") || !j["cycles"].is_array()) throw InputError("missing array field 'cycles'");
  for (const auto& c : j["cycles"]) {
    if (!c.is_object()) throw InputError("cycle must be an object");
    plan.cycles.push_back(protocol::Cycle{number_field(c, "t"), c.contains("p") ? complex_list_from_json(c["p"], "p")
                                                                                 : std::vector<Complex>{}});
  }
  return plan;
}

inline json plan_to_json(const protocol::ProtocolPlan& plan) {
  json j = params_to_json(plan.params);
  j["alpha"] = complex_to_json(plan.alpha);
  json cycles = json::array();
  for (const auto& c : plan.cycles) cycles.push_back(json{{"t", c.duration}, {"p", complex_list(c.weights)}});
  j["cycles"] = cycles;
  return j;
}

inline json result_to_json(const protocol::ProtocolResult& r) {
  return json{{"beta", complex_to_json(r.state.beta)},
              {"coeffs", complex_list(r.state.coeffs)},
              {"p_nominal", r.p_nominal},
              {"p_exact", r.p_exact},
              {"per_cycle", r.per_cycle_p_exact}};
}

// --- inverse ------------------------------------------------------------

inline std::vector<Complex> target_from_json(const json& j) {
  if (!j.is_object() || !j.contains("coeffs")) throw InputError("target must be {\"coeffs\": [[re, im], ...]}");
  auto c = complex_list_from_json(j["coeffs"], "coeffs");
  inverse::validate_target(c);
  return c;
}

inline json solution_to_json(const inverse::WeightSolution& s) {
  return json{{"weights", complex_list(s.weights)},
              {"branch", s.branch_id},
              {"p_nominal", s.p_nominal},
              {"residual", s.residual},
              {"max_abs_weight", s.max_abs_weight}};
}

inline inverse::WeightSolution solution_from_json(const json& j) {
  inverse::WeightSolution s;
  s.weights = complex_list_from_json(j.at("weights"), "weights");
  s.branch_id = j.at("branch").get<std::vector<int>>();
  s.p_nominal = j.at("p_nominal").get<double>();
  s.residual = j.at("residual").get<double>();
  return s;
}

// --- chain / multimode --------------------------------------------------

inline json modes_to_json(const chain::ModeTable& m) {
  json b = json::array();
  for (Eigen::Index i = 0; i < m.vectors.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index l = 0; l < m.vectors.cols(); ++l) row.push_back(m.vectors(i, l));
    b.push_back(row);
  }
  return json{{"mu", m.frequencies}, {"b", b}, {"positions", m.positions}};
}

inline json leakage_to_json(const multimode::LeakageReport& r) {
  return json{{"mean_phonon", r.per_mode_mean_phonon},
              {"com_fidelity", r.com_fidelity_vs_ideal},
              {"com_purity", r.com_purity},
              {"factorization_gap", r.factorization_gap},
              {"p_exact", r.p_exact}};
}

inline json trotter_to_json(const multimode::TrotterReport& r) {
  json j{{"n_ions", r.n_ions},
         {"t", r.t},
         {"cutoff", r.cutoff},
         {"steps", r.steps},
         {"full_terms", r.full_terms},
         {"fidelity_integrated", r.fidelity_integrated},
         {"fidelity_printed", r.fidelity_printed},
         {"p_conditional", r.p_conditional},
         {"p_predicted_integrated", r.p_predicted_integrated},
         {"p_predicted_printed", r.p_predicted_printed},
         {"deviation_coarse", r.deviation_coarse},
         {"deviation_fine", r.deviation_fine},
         {"convergence_ratio", r.convergence_ratio},
         {"roundoff_limited", r.roundoff_limited},
         {"tail_weight", r.tail_weight}};
  j["full_terms_effect"] = r.full_terms_effect ? json(*r.full_terms_effect) : json(nullptr);
  return j;
}

/// Shortest round-trip decimal form of a double (at most 17 digits).
inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

}  // namespace ile::io

#endif  // ILE_IO_HPP
