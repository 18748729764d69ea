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

// Even cat |2i> + |-2i> from two single-ion cycles: solve the weights, run
// the ideal protocol, then check the result in the Fock basis.

#include <cmath>
#include <cstdio>
#include <vector>

#include "ile/ile.hpp"

int main() {
  using ile::Complex;
  namespace protocol = ile::protocol;

  const std::vector<Complex> target{1.0, 0.0, 1.0};
  const auto best = ile::inverse::best_realization(ile::inverse::solve_weights(target));
  std::printf("weights:");
  for (const auto& p : best.weights) std::printf(" (%+.3f%+.3fi)", p.real(), p.imag());
  std::printf("\nnominal success probability %.6f\n", best.p_nominal);

  // eta Omega t = 1 at delta = 1 gives beta = i.
  protocol::ProtocolPlan plan{{0.1, 0.01, 1.0, 1}, Complex{0.0, 0.0}, {}};
  for (const auto& p : best.weights) plan.cycles.push_back({1000.0, {p}});
  const auto run = protocol::run_ideal(plan);
  std::printf("beta = (%.3f, %.3f), exact success probability %.6f\n", run.state.beta.real(), run.state.beta.imag(),
              run.p_exact);

  const std::size_t cutoff = 40;
  const auto produced = protocol::to_fock(run.state, cutoff);
  const Complex b = run.state.beta;
  std::vector<Complex> cat(cutoff + 1);
  const auto plus = ile::fock::coherent_fock(2.0 * b, cutoff);
  const auto minus = ile::fock::coherent_fock(-2.0 * b, cutoff);
  for (std::size_t k = 0; k <= cutoff; ++k) cat[k] = plus.amplitudes()[k] + minus.amplitudes()[k];
  const double f = ile::fock::fidelity_pure(produced, ile::fock::FockVector(cat));
  std::printf("fidelity with |2beta> + |-2beta>: %.12f\n", f);
  std::printf("odd photon weight: %.3e\n", [&] {
    double w = 0.0;
    for (std::size_t k = 1; k <= cutoff; k += 2) w += std::norm(produced.amplitudes()[k]);
    return w;
  }());
  return f > 1.0 - 1e-12 ? 0 : 1;
}
