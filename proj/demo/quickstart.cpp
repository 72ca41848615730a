// Minimal end-to-end run: build a random graph, draw one Ising realization,
// then estimate beta with and without privacy.

#include <iostream>

#include "prising/prising.hpp"

int main() {
  using namespace prising;

  const std::size_t n = 400;
  const double p = 0.1;
  const double beta_true = 1.5;

  const Network g = generate_erdos_renyi(n, p, /*seed=*/7);
  const CouplingMatrix J = coupling_scaled_adjacency(g, static_cast<double>(n) * p);
  const SpinConfiguration sigma = sample_glauber(J, beta_true, /*sweeps=*/1000, /*seed=*/11);

  const EstimateReport plain = mple(J, sigma);
  std::cout << "non-private beta_hat = " << plain.beta_hat << "\n";

  const PrivacyBudget budget(/*epsilon=*/5.0, /*delta=*/1.0 / n);
  PrisingOptions opts;
  opts.seed = 13;
  const EstimateReport priv = prising(J, sigma, budget, opts);
  std::cout << "private beta_hat     = " << priv.beta_hat << " (noise draw " << *priv.noise_draw << ")\n";
  return 0;
}
