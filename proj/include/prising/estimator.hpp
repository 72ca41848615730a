#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "prising/coupling.hpp"
#include "prising/ising.hpp"
#include "prising/rng.hpp"

namespace prising {

class PrivacyBudget {
 public:
  PrivacyBudget(double epsilon, double delta) : epsilon_(epsilon), delta_(delta) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("PrivacyBudget: epsilon must be > 0");
    if (!(delta >= 0.0 && delta < 1.0)) throw std::invalid_argument("PrivacyBudget: delta must lie in [0, 1)");
  }

  double epsilon() const { return epsilon_; }
  double delta() const { return delta_; }

 private:
  double epsilon_;
  double delta_;
};

// Noise calibration derived from the coupling and the privacy budget.
//   d_i       = n * sum_j J(i,j)
//   zeta      = 8 * max_j d_j / n
//   delta_cap = smallest permitted linear-term coefficient,
//               max_j (24 / (eps n)) sum_i d_i J(i,j)
//   gaussian_sigma = zeta * sqrt(8 log(2/delta) + 4 eps) / eps   (delta > 0)
//   laplace_scale  = 2 zeta / eps                                (delta = 0)
struct Calibration {
  double zeta = 0.0;
  double delta_cap = 0.0;
  double gaussian_sigma = 0.0;
  double laplace_scale = 0.0;
  std::vector<double> d;
  // The density-ratio analysis assumes delta < 2/sqrt(e); larger deltas are
  // accepted but flagged.
  bool delta_above_lemma_range = false;
};

inline Calibration calibrate(const CouplingMatrix& J, const PrivacyBudget& budget) {
  const std::size_t n = J.size();
  Calibration cal;
  cal.d.resize(n);
  for (std::size_t i = 0; i < n; ++i) cal.d[i] = static_cast<double>(n) * J.row_sum(i);
  cal.zeta = 8.0 * J.max_row_sum();

  std::vector<double> col(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& e : J.row(i)) col[e.col] += cal.d[i] * e.value;
  double worst = 0.0;
  for (double c : col) worst = std::max(worst, c);
  cal.delta_cap = 24.0 / (budget.epsilon() * static_cast<double>(n)) * worst;

  if (budget.delta() > 0.0) {
    cal.gaussian_sigma =
        cal.zeta * std::sqrt(8.0 * std::log(2.0 / budget.delta()) + 4.0 * budget.epsilon()) / budget.epsilon();
  } else {
    cal.laplace_scale = 2.0 * cal.zeta / budget.epsilon();
  }
  cal.delta_above_lemma_range = budget.delta() >= 2.0 / std::sqrt(std::exp(1.0));
  return cal;
}

// One draw of the perturbation noise b: N(0, gaussian_sigma^2) when
// delta > 0, Laplace(0, laplace_scale) when delta = 0. Degenerate scales
// (zero coupling) yield b = 0.
inline double sample_noise(const Calibration& cal, const PrivacyBudget& budget, std::uint64_t seed) {
  Rng rng(derive_seed(seed));
  if (budget.delta() > 0.0) return cal.gaussian_sigma * rng.next_gaussian();
  return cal.laplace_scale * rng.next_laplace();
}

// Pseudo-log-likelihood score for one (J, sigma) pair with the local fields
// precomputed:
//   L(x)  = -(1/n) sum_i m_i (sigma_i - tanh(x m_i))
//   L'(x) =  (1/n) sum_i m_i^2 sech^2(x m_i)
// L is non-decreasing in x; sech^2 = 1 - tanh^2 keeps the slope stable for
// large |x m_i|.
class PseudoLikelihood {
 public:
  PseudoLikelihood(const CouplingMatrix& J, const SpinConfiguration& sigma)
      : J_(&J), sigma_(sigma.values()), m_(local_fields(J, sigma)) {}

  double value(double x) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < m_.size(); ++i)
      acc += m_[i] * (sigma_[i] - std::tanh(x * m_[i]));
    return -acc / static_cast<double>(m_.size());
  }

  double slope(double x) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < m_.size(); ++i) {
      const double t = std::tanh(x * m_[i]);
      acc += m_[i] * m_[i] * (1.0 - t * t);
    }
    return acc / static_cast<double>(m_.size());
  }

  const std::vector<double>& fields() const { return m_; }
  int spin(std::size_t i) const { return sigma_[i]; }

  // Adjacent configuration: spin j flipped, fields updated in O(deg j).
  PseudoLikelihood flipped(std::size_t j) const {
    PseudoLikelihood out(*this);
    out.sigma_[j] = static_cast<std::int8_t>(-out.sigma_[j]);
    for (const auto& e : J_->row(j)) out.m_[e.col] += 2.0 * out.sigma_[j] * e.value;
    return out;
  }

 private:
  const CouplingMatrix* J_;
  std::vector<std::int8_t> sigma_;
  std::vector<double> m_;
};

inline double pseudo_likelihood_value(const CouplingMatrix& J, const SpinConfiguration& sigma, double x) {
  return PseudoLikelihood(J, sigma).value(x);
}

inline double pseudo_likelihood_slope(const CouplingMatrix& J, const SpinConfiguration& sigma, double x) {
  return PseudoLikelihood(J, sigma).slope(x);
}

// Root-finder outcome. Exactly one of {interior root, saturated_low,
// saturated_high} holds; saturated estimates are clamped to the search
// interval ends rather than reported as infinities, and the flag carries
// the information.
struct EstimateReport {
  double beta_hat = 0.0;
  bool saturated_low = false;
  bool saturated_high = false;
  std::optional<double> noise_draw;
  std::size_t iterations = 0;
  double bracket_low = 0.0;
  double bracket_high = 0.0;

  bool interior() const { return !saturated_low && !saturated_high; }
};

namespace detail {

// Smallest root of a non-decreasing objective on [0, beta_max] by bisection.
// f(0) > 0: no root, report saturated_low at 0. f(beta_max) < 0: no root in
// range, report saturated_high at beta_max. Otherwise shrink [lo, hi] with
// f(lo) < 0 <= f(hi) until hi - lo <= tol; the infimum root is in [lo, hi].
template <class F>
EstimateReport find_smallest_root(F&& f, double beta_max, double tol) {
  if (!(beta_max > 0.0) || !std::isfinite(beta_max)) throw std::invalid_argument("root search: beta_max must be > 0");
  if (!(tol > 0.0)) throw std::invalid_argument("root search: tol must be > 0");

  EstimateReport rep;
  const double f0 = f(0.0);
  if (f0 > 0.0) {
    rep.saturated_low = true;
    return rep;
  }
  if (f0 == 0.0) return rep;  // root exactly at 0

  if (f(beta_max) < 0.0) {
    rep.saturated_high = true;
    rep.beta_hat = beta_max;
    rep.bracket_low = beta_max;
    rep.bracket_high = beta_max;
    return rep;
  }

  double lo = 0.0, hi = beta_max;
  while (hi - lo > tol && rep.iterations < 200) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
    ++rep.iterations;
  }
  rep.bracket_low = lo;
  rep.bracket_high = hi;
  rep.beta_hat = 0.5 * (lo + hi);
  return rep;
}

}  // namespace detail

// Maximum pseudo-likelihood estimate: the smallest x >= 0 with L(x) = 0.
inline EstimateReport mple(const CouplingMatrix& J, const SpinConfiguration& sigma, double beta_max = 50.0,
                           double tol = 1e-8) {
  const PseudoLikelihood pl(J, sigma);
  return detail::find_smallest_root([&](double x) { return pl.value(x); }, beta_max, tol);
}

struct PrisingOptions {
  double beta_max = 50.0;
  double tol = 1e-8;
  std::uint64_t seed = 0;
  // Ablation knobs. delta_cap_override replaces the smallest permitted
  // coefficient; forced_noise bypasses the noise draw.
  std::optional<double> delta_cap_override;
  std::optional<double> forced_noise;
};

// Private estimate: solves L(beta) + Delta beta / n + b / n = 0 over
// beta >= 0, with Delta the smallest permitted coefficient and b drawn from
// the calibrated noise law. With Delta > 0 the objective is strictly
// increasing, so the root is unique. A zero coupling degenerates to
// beta_hat = 0 (Delta = 0, b = 0); privacy is vacuous for an empty network.
inline EstimateReport prising(const CouplingMatrix& J, const SpinConfiguration& sigma, const PrivacyBudget& budget,
                              const PrisingOptions& opts) {
  check_dims(J, sigma, "prising");
  Calibration cal = calibrate(J, budget);
  if (opts.delta_cap_override) {
    if (!(*opts.delta_cap_override >= 0.0)) throw std::invalid_argument("prising: delta_cap override must be >= 0");
    cal.delta_cap = *opts.delta_cap_override;
  }
  const double b = opts.forced_noise ? *opts.forced_noise : sample_noise(cal, budget, opts.seed);

  const double n = static_cast<double>(J.size());
  const PseudoLikelihood pl(J, sigma);
  EstimateReport rep = detail::find_smallest_root(
      [&](double x) { return pl.value(x) + (cal.delta_cap * x + b) / n; }, opts.beta_max, opts.tol);
  rep.noise_draw = b;
  return rep;
}

inline EstimateReport prising(const CouplingMatrix& J, const SpinConfiguration& sigma, const PrivacyBudget& budget,
                              double beta_max, double tol, std::uint64_t seed) {
  PrisingOptions opts;
  opts.beta_max = beta_max;
  opts.tol = tol;
  opts.seed = seed;
  return prising(J, sigma, budget, opts);
}

}  // namespace prising
