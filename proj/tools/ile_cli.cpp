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

// Command-line front end. Every command builds its whole output in memory
// and writes it only on success, so a failed run never leaves a partial file.
//
// Exit codes: 0 success, 2 invalid input, 3 numerical or solver failure.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "ile/ile.hpp"
#include "ile/io.hpp"

namespace {

using ile::Complex;
using ile::io::json;
namespace chain = ile::chain;
namespace inverse = ile::inverse;
namespace io = ile::io;
namespace mm = ile::multimode;
namespace protocol = ile::protocol;

constexpr int kExitInput = 2;
constexpr int kExitSolver = 3;

// --- small parsers -------------------------------------------------------

double parse_double(const std::string& text, const std::string& what) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last || !std::isfinite(v)) {
    throw ile::InputError(what + ": '" + text + "' is not a finite number");
  }
  return v;
}

/// "re,im" or a bare real number.
Complex parse_complex(const std::string& text, const std::string& what) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) return Complex{parse_double(text, what), 0.0};
  return Complex{parse_double(text.substr(0, comma), what), parse_double(text.substr(comma + 1), what)};
}

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ile::InputError("cannot open input file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ile::InputError("'" + path + "' is not valid JSON: " + e.what());
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json header(const char* command) { return json{{"version", ile::kVersion}, {"command", command}}; }

// --- parameter overrides -------------------------------------------------

struct Overrides {
  std::optional<double> eta, omega, delta, t;
};

Overrides parse_overrides(const std::vector<std::string>& sets) {
  Overrides o;
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ile::InputError("--set expects KEY=VALUE, got '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    const double v = parse_double(kv.substr(eq + 1), "--set " + key);
    if (key == "eta") {
      o.eta = v;
    } else if (key == "omega") {
      o.omega = v;
    } else if (key == "delta") {
      o.delta = v;
    } else if (key == "t") {
      o.t = v;
    } else {
      throw ile::InputError("--set: unknown parameter '" + key + "' (expected eta, omega, delta or t)");
    }
  }
  return o;
}

void apply_overrides(protocol::PhysicalParams& p, const Overrides& o) {
  if (o.eta) p.eta = *o.eta;
  if (o.omega) p.omega = *o.omega;
  if (o.delta) p.delta = *o.delta;
}

void set_duration(protocol::ProtocolPlan& plan, double t) {
  for (auto& c : plan.cycles) c.duration = t;
}

void apply_overrides(protocol::ProtocolPlan& plan, const Overrides& o) {
  apply_overrides(plan.params, o);
  if (o.t) set_duration(plan, *o.t);
}

// --- sweeps --------------------------------------------------------------

struct Sweep {
  std::string name;
  double start = 0.0;
  double stop = 0.0;
  std::size_t count = 0;

  double at(std::size_t k) const {
    if (k + 1 == count) return stop;
    return start + (stop - start) * static_cast<double>(k) / static_cast<double>(count - 1);
  }
};

Sweep parse_sweep(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ile::InputError("--sweep expects NAME=START:STOP:COUNT");
  Sweep s;
  s.name = text.substr(0, eq);
  if (s.name != "delta" && s.name != "t") throw ile::InputError("--sweep: parameter must be delta or t");
  const std::string rest = text.substr(eq + 1);
  const auto c1 = rest.find(':');
  const auto c2 = c1 == std::string::npos ? std::string::npos : rest.find(':', c1 + 1);
  if (c2 == std::string::npos || rest.find(':', c2 + 1) != std::string::npos) {
    throw ile::InputError("--sweep expects NAME=START:STOP:COUNT");
  }
  s.start = parse_double(rest.substr(0, c1), "--sweep start");
  s.stop = parse_double(rest.substr(c1 + 1, c2 - c1 - 1), "--sweep stop");
  const std::string count = rest.substr(c2 + 1);
  unsigned long long n = 0;
  const auto res = std::from_chars(count.data(), count.data() + count.size(), n);
  if (res.ec != std::errc{} || res.ptr != count.data() + count.size()) {
    throw ile::InputError("--sweep count '" + count + "' is not an integer");
  }
  if (n < 2) throw ile::InputError("--sweep count must be >= 2");
  s.count = static_cast<std::size_t>(n);
  return s;
}

// --- CSV -----------------------------------------------------------------

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

void csv_row(std::string& out, const std::vector<std::string>& fields) {
  for (std::size_t k = 0; k < fields.size(); ++k) {
    if (k) out += ',';
    out += csv_field(fields[k]);
  }
  out += "\r\n";
}

// --- worker pool ---------------------------------------------------------

/// Runs job(k) for k in [0, count) on up to `workers` threads. Results land
/// in their own slots, so the caller assembles output in index order. The
/// first exception by index is rethrown after all threads join.
template <class Job>
void parallel_for(std::size_t count, std::size_t workers, const Job& job) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < count; k = next++) {
      try {
        job(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, count);
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// --- commands ------------------------------------------------------------

struct Common {
  std::string input;
  std::string output;
  std::vector<std::string> sets;
};

struct PlanArgs {
  bool all = false;
  std::size_t max_branches = inverse::SolveOptions{}.max_branches;
  double tolerance = inverse::SolveOptions{}.residual_tolerance;
};

/// The target file may carry eta, omega, delta, t and alpha; together with
/// --set they fix the emitted single-ion plan, which feeds `simulate`.
std::string cmd_plan(const Common& c, const PlanArgs& a) {
  const json in = read_json_file(c.input);
  const auto target = io::target_from_json(in);

  protocol::ProtocolPlan plan;
  plan.params.n_ions = 1;
  double t = 1.0;
  if (in.contains("eta")) plan.params.eta = io::number_field(in, "eta");
  if (in.contains("omega")) plan.params.omega = io::number_field(in, "omega");
  if (in.contains("delta")) plan.params.delta = io::number_field(in, "delta");
  if (in.contains("t")) t = io::number_field(in, "t");
  if (in.contains("alpha")) plan.alpha = io::complex_from_json(in["alpha"], "alpha");
  const auto o = parse_overrides(c.sets);
  apply_overrides(plan.params, o);
  if (o.t) t = *o.t;

  inverse::SolveOptions opts;
  opts.max_branches = a.max_branches;
  opts.residual_tolerance = a.tolerance;
  opts.enumerate_all = a.all;
  const auto solutions = inverse::solve_weights(target, opts);
  const auto best = inverse::best_realization(solutions);

  for (const auto& w : best.weights) plan.cycles.push_back(protocol::Cycle{t, {w}});
  const auto warnings = protocol::validate(plan);

  json h = header("plan");
  h["target"] = io::complex_list(target);
  h["max_branches"] = a.max_branches;
  h["tolerance"] = a.tolerance;
  h["all"] = a.all;
  json out{{"header", h}, {"best", io::solution_to_json(best)}};
  if (a.all) {
    json branches = json::array();
    for (const auto& s : solutions) branches.push_back(io::solution_to_json(s));
    out["branches"] = branches;
  }
  out["plan"] = io::plan_to_json(plan);
  out["warnings"] = warnings;
  return dump(out);
}

std::string cmd_simulate(const Common& c, std::optional<std::size_t> fock_cutoff) {
  auto plan = io::plan_from_json(read_json_file(c.input));
  apply_overrides(plan, parse_overrides(c.sets));
  const auto r = protocol::run_ideal(plan);

  json h = header("simulate");
  h["plan"] = io::plan_to_json(plan);
  json res = io::result_to_json(r);
  res["alpha"] = io::complex_to_json(r.state.alpha);
  res["prefactor"] = r.prefactor;
  res["gram_norm_squared"] = protocol::norm_squared(r.state);
  json out{{"header", h}, {"result", res}};
  if (fock_cutoff) {
    if (*fock_cutoff < 1) throw ile::InputError("--fock cutoff must be >= 1");
    const auto v = protocol::to_fock(r.state, *fock_cutoff);
    out["fock"] = json{{"cutoff", *fock_cutoff},
                       {"norm_squared", ile::fock::norm(v) * ile::fock::norm(v)},
                       {"tail_weight", v.tail_weight()},
                       {"amplitudes", io::to_json(v)}};
  }
  out["warnings"] = r.warnings;
  return dump(out);
}

struct LeakageArgs {
  std::string sweep;
  bool integrated = false;
  bool printed = false;
  std::size_t jobs = 0;
};

struct LeakagePoint {
  protocol::ProtocolPlan plan;
  mm::BetaVariant variant = mm::BetaVariant::integrated;
  std::optional<mm::LeakageReport> report;  // empty when the term cap was hit
  double dropped_weight = 0.0;
  std::string note;
};

void run_point(LeakagePoint& pt, const chain::ModeTable& modes, const mm::TermOptions& opts) {
  const auto table = mm::cycle_displacements(modes, pt.plan.params, pt.plan.cycles.front().duration, pt.variant);
  try {
    const auto exact = mm::run_conditional_exact(pt.plan, table, opts);
    const auto fact = mm::run_conditional_factorized(pt.plan, table, opts);
    pt.report = mm::leakage_report(exact.state, fact, mm::ideal_line(pt.plan, table));
    pt.dropped_weight = exact.dropped_weight;
  } catch (const ile::TermCapExceeded& e) {
    pt.report.reset();
    pt.note = e.what();
  }
}

std::string cmd_leakage(const Common& c, const LeakageArgs& a) {
  auto base = io::plan_from_json(read_json_file(c.input));
  apply_overrides(base, parse_overrides(c.sets));
  const auto warnings = protocol::validate(base);
  const auto opts = mm::term_options_from_env();
  const auto modes = chain::normal_modes(chain::equilibrium_positions(base.params.n_ions));

  std::vector<mm::BetaVariant> variants;
  if (a.integrated || !a.printed) variants.push_back(mm::BetaVariant::integrated);
  if (a.printed) variants.push_back(mm::BetaVariant::printed);

  std::optional<Sweep> sweep;
  if (!a.sweep.empty()) sweep = parse_sweep(a.sweep);
  const std::size_t n_points = sweep ? sweep->count : 1;

  std::vector<LeakagePoint> points;
  for (std::size_t k = 0; k < n_points; ++k) {
    auto plan = base;
    if (sweep && sweep->name == "delta") plan.params.delta = sweep->at(k);
    if (sweep && sweep->name == "t") set_duration(plan, sweep->at(k));
    protocol::validate(plan);
    for (auto v : variants) points.push_back(LeakagePoint{plan, v, std::nullopt, 0.0, {}});
  }

  const std::size_t workers = a.jobs ? a.jobs : std::max(1U, std::thread::hardware_concurrency());
  parallel_for(points.size(), workers, [&](std::size_t k) { run_point(points[k], modes, opts); });

  const std::size_t n = base.params.n_ions;
  if (!sweep) {
    json reports = json::array();
    for (const auto& pt : points) {
      if (!pt.report) throw ile::TermCapExceeded(pt.note);
      json r{{"variant", mm::to_string(pt.variant)}};
      const json fields = io::leakage_to_json(*pt.report);
      for (const auto& [k, v] : fields.items()) r[k] = v;
      r["dropped_weight"] = pt.dropped_weight;
      reports.push_back(r);
    }
    json h = header("leakage");
    h["plan"] = io::plan_to_json(base);
    h["max_terms"] = opts.max_terms;
    return dump(json{{"header", h}, {"reports", reports}, {"warnings", warnings}});
  }

  std::string out;
  std::vector<std::string> head{"version", "variant", "eta", "omega", "n_ions", "delta", "t", "alpha_re", "alpha_im",
                                "weights"};
  for (std::size_t l = 1; l <= n; ++l) head.push_back("mean_phonon_" + std::to_string(l));
  for (const char* col : {"com_fidelity", "com_purity", "factorization_gap", "p_exact", "status"}) head.emplace_back(col);
  csv_row(out, head);
  for (const auto& pt : points) {
    const auto& p = pt.plan.params;
    std::vector<std::string> row{ile::kVersion,
                                 mm::to_string(pt.variant),
                                 io::format_double(p.eta),
                                 io::format_double(p.omega),
                                 std::to_string(n),
                                 io::format_double(p.delta),
                                 io::format_double(pt.plan.cycles.front().duration),
                                 io::format_double(pt.plan.alpha.real()),
                                 io::format_double(pt.plan.alpha.imag()),
                                 io::complex_list(protocol::all_weights(pt.plan)).dump()};
    if (pt.report) {
      for (double m : pt.report->per_mode_mean_phonon) row.push_back(io::format_double(m));
      row.push_back(io::format_double(pt.report->com_fidelity_vs_ideal));
      row.push_back(io::format_double(pt.report->com_purity));
      row.push_back(io::format_double(pt.report->factorization_gap));
      row.push_back(io::format_double(pt.report->p_exact));
      row.emplace_back("ok");
    } else {
      std::cerr << "ile: " << pt.note << "\n";
      row.resize(head.size() - 1);
      row.emplace_back("incomplete");
    }
    csv_row(out, row);
  }
  return out;
}

std::string cmd_modes(std::size_t n, const std::string& format) {
  const auto modes = chain::normal_modes(chain::equilibrium_positions(n));
  if (format == "json") {
    json out = io::modes_to_json(modes);
    json h = header("modes");
    h["n_ions"] = n;
    return dump(json{{"header", h}, {"mu", out["mu"]}, {"b", out["b"]}, {"positions", out["positions"]}});
  }
  std::string out;
  std::vector<std::string> head{"version", "n_ions", "mode", "mu"};
  for (std::size_t i = 1; i <= n; ++i) head.push_back("b_" + std::to_string(i));
  csv_row(out, head);
  for (std::size_t l = 0; l < n; ++l) {
    std::vector<std::string> row{ile::kVersion, std::to_string(n), std::to_string(l + 1),
                                 io::format_double(modes.frequencies[l])};
    for (std::size_t i = 0; i < n; ++i) row.push_back(io::format_double(modes.b(i, l)));
    csv_row(out, row);
  }
  return out;
}

struct FitArgs {
  std::size_t n = 0;
  std::string alpha = "0,0";
  std::string beta;
};

std::string cmd_fit(const Common& c, const FitArgs& a) {
  const auto target = io::fock_from_json(read_json_file(c.input));
  const Complex alpha = parse_complex(a.alpha, "--alpha");
  const Complex beta = parse_complex(a.beta, "--beta");
  if (a.n < 1) throw ile::InputError("--n must be >= 1");
  const auto fit = inverse::fit_target(target, a.n, alpha, beta);

  json h = header("fit");
  h["n"] = a.n;
  h["alpha"] = io::complex_to_json(alpha);
  h["beta"] = io::complex_to_json(beta);
  h["target_cutoff"] = target.cutoff();
  return dump(json{{"header", h}, {"coeffs", io::complex_list(fit.coeffs)}, {"fidelity", fit.fidelity},
                   {"rank", fit.rank}});
}

struct ValidateArgs {
  std::size_t cutoff = mm::TrotterConfig{}.cutoff;
  std::size_t steps = mm::TrotterConfig{}.steps;
  bool full_terms = false;
};

/// Input: a plan with one cycle, or {eta, omega, delta, n_ions, t, weights?}.
std::string cmd_validate(const Common& c, const ValidateArgs& a) {
  const json in = read_json_file(c.input);
  protocol::PhysicalParams params;
  double t = 0.0;
  std::vector<Complex> weights;
  if (in.is_object() && in.contains("cycles")) {
    const auto plan = io::plan_from_json(in);
    if (plan.cycles.size() != 1) throw ile::InputError("validate simulates exactly one cycle");
    params = plan.params;
    t = plan.cycles.front().duration;
    weights = plan.cycles.front().weights;
  } else {
    if (!in.is_object()) throw ile::InputError("validate input must be a JSON object");
    params.eta = io::number_field(in, "eta");
    params.omega = io::number_field(in, "omega");
    params.delta = io::number_field(in, "delta");
    if (!in.contains("n_ions") || !in["n_ions"].is_number_integer() || in["n_ions"].get<long long>() < 1) {
      throw ile::InputError("missing positive integer field 'n_ions'");
    }
    params.n_ions = in["n_ions"].get<std::size_t>();
    t = io::number_field(in, "t");
    if (in.contains("weights")) weights = io::complex_list_from_json(in["weights"], "weights");
  }
  const auto o = parse_overrides(c.sets);
  apply_overrides(params, o);
  if (o.t) t = *o.t;
  const auto warnings = protocol::validate(params);

  mm::TrotterConfig cfg;
  cfg.cutoff = a.cutoff;
  cfg.steps = a.steps;
  cfg.include_full_terms = a.full_terms;
  cfg.weights = weights;
  if (params.n_ions > 2) throw ile::InputError("validate supports at most two ions");
  const auto modes = chain::normal_modes(chain::equilibrium_positions(params.n_ions));
  const auto rep = mm::trotter_validate(params, modes, t, cfg);

  json h = header("validate");
  h["params"] = io::params_to_json(params);
  h["t"] = t;
  h["weights"] = io::complex_list(weights.empty() ? std::vector<Complex>(params.n_ions, Complex{}) : weights);
  h["cutoff"] = a.cutoff;
  h["steps"] = a.steps;
  h["full_terms"] = a.full_terms;
  return dump(json{{"header", h}, {"report", io::trotter_to_json(rep)}, {"warnings", warnings}});
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ile::InputError("cannot open output file '" + path + "'");
  out << text;
  if (!out.flush()) throw ile::InputError("failed writing output file '" + path + "'");
}

void add_common(CLI::App* sub, Common& c, bool input_required, bool overrides) {
  auto* opt = sub->add_option("-i,--input", c.input, "Input JSON file");
  if (input_required) opt->required();
  sub->add_option("-o,--output", c.output, "Output file (default: standard output)");
  if (overrides) {
    sub->add_option("--set", c.sets, "Override a parameter: eta, omega, delta or t (KEY=VALUE, repeatable)")
        ->allow_extra_args(false);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Line superpositions of coherent states on a trapped-ion COM mode"};
  app.set_version_flag("--version", std::string(ile::kVersion));
  app.require_subcommand(1);

  Common common;

  PlanArgs plan_args;
  auto* plan = app.add_subcommand("plan", "Solve internal weights for a target coefficient vector");
  add_common(plan, common, true, true);
  plan->add_flag("--all", plan_args.all, "Emit every surviving branch");
  plan->add_option("--max-branches", plan_args.max_branches, "Branch cap")->check(CLI::PositiveNumber);
  plan->add_option("--tolerance", plan_args.tolerance, "Residual tolerance")->check(CLI::PositiveNumber);

  std::optional<std::size_t> fock_cutoff;
  auto* simulate = app.add_subcommand("simulate", "Run the ideal single-mode protocol for a plan");
  add_common(simulate, common, true, true);
  simulate->add_option("--fock", fock_cutoff, "Also emit the Fock expansion up to this cutoff");

  LeakageArgs leak_args;
  auto* leakage = app.add_subcommand("leakage", "Multimode leakage report, optionally over a sweep");
  add_common(leakage, common, true, true);
  leakage->add_option("--sweep", leak_args.sweep, "NAME=START:STOP:COUNT with NAME delta or t (CSV output)");
  leakage->add_flag("--integrated", leak_args.integrated, "Use the time-integrated displacement (default)");
  leakage->add_flag("--paper-beta", leak_args.printed, "Use the printed displacement form");
  leakage->add_option("--jobs", leak_args.jobs, "Worker threads (0: one per core)");

  std::size_t modes_n = 0;
  std::string modes_format = "json";
  auto* modes = app.add_subcommand("modes", "Axial normal modes of an N-ion chain");
  modes->add_option("-n,--n", modes_n, "Number of ions")->required();
  modes->add_option("--format", modes_format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  modes->add_option("-o,--output", common.output, "Output file (default: standard output)");

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "Least-squares fit of a Fock target onto a coherent line");
  add_common(fit, common, true, false);
  fit->add_option("-n,--n", fit_args.n, "Line order n (n+1 coherent states)")->required();
  fit->add_option("--alpha", fit_args.alpha, "Initial amplitude as re,im");
  fit->add_option("--beta", fit_args.beta, "Line step as re,im")->required();

  ValidateArgs val_args;
  auto* validate = app.add_subcommand("validate", "Time-step the spin-motion Hamiltonian and compare");
  add_common(validate, common, true, true);
  validate->add_option("--cutoff", val_args.cutoff, "Fock cutoff per mode");
  validate->add_option("--steps", val_args.steps, "Coarsest step count");
  validate->add_flag("--full-terms", val_args.full_terms, "Keep the terms dropped by the rotating-frame reduction");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    std::string text;
    if (plan->parsed()) {
      text = cmd_plan(common, plan_args);
    } else if (simulate->parsed()) {
      text = cmd_simulate(common, fock_cutoff);
    } else if (leakage->parsed()) {
      text = cmd_leakage(common, leak_args);
    } else if (modes->parsed()) {
      text = cmd_modes(modes_n, modes_format);
    } else if (fit->parsed()) {
      text = cmd_fit(common, fit_args);
    } else {
      text = cmd_validate(common, val_args);
    }
    emit(text, common.output);
  } catch (const ile::SolverError& e) {
    std::cerr << "ile: solver failure: " << e.what() << "\n";
    return kExitSolver;
  } catch (const ile::InputError& e) {
    std::cerr << "ile: invalid input: " << e.what() << "\n";
    return kExitInput;
  } catch (const json::exception& e) {
    std::cerr << "ile: invalid input: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "ile: failure: " << e.what() << "\n";
    return kExitSolver;
  }
  return 0;
}
