#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "prising/estimator.hpp"

namespace prising {

namespace detail {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace detail

enum class AuditMode { exhaustive, sampled };

struct AuditArgmax {
  std::size_t flip_index = 0;
  double grid_point = 0.0;
  std::uint64_t config_id = 0;  // state bitmask (bit i set: spin i = +1)
};

// Outcome of one audit sweep. worst_gap is the audited statistic at the
// worst (configuration, flip, grid point) triple and bound is what it was
// checked against there; pass holds iff worst_gap <= bound + 1e-12.
struct SensitivityReport {
  double worst_gap = 0.0;
  double bound = 0.0;
  AuditArgmax argmax;
  bool pass = true;
  double tightest_ratio = 0.0;  // max statistic/bound over audited triples
  std::size_t checked = 0;
  // Gaussian density audit only: directions outside the lemma set S are
  // reported here instead of failing.
  std::size_t excluded = 0;
  double worst_excluded_ratio = 0.0;
};

namespace detail {

struct WorstTracker {
  double worst_slack = -std::numeric_limits<double>::infinity();
  SensitivityReport report;

  void observe(double stat, double bound, std::size_t flip, double grid_point, std::uint64_t config_id) {
    ++report.checked;
    if (bound > 0.0) report.tightest_ratio = std::max(report.tightest_ratio, stat / bound);
    const double slack = stat - bound;
    if (slack > worst_slack) {
      worst_slack = slack;
      report.worst_gap = stat;
      report.bound = bound;
      report.argmax = {flip, grid_point, config_id};
    }
  }

  SensitivityReport finish() {
    report.pass = report.checked == 0 || worst_slack <= 1e-12;
    return report;
  }
};

// Runs visit(pl, config_id) over all 2^n configurations (exhaustive) or
// over `samples` uniform draws.
template <class Visit>
void for_each_audited_config(const CouplingMatrix& J, AuditMode mode, std::uint64_t seed, std::size_t samples,
                             Visit&& visit) {
  const std::size_t n = J.size();
  if (mode == AuditMode::exhaustive) {
    if (n > 12) throw std::invalid_argument("audit: exhaustive mode requires n <= 12");
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t c = 0; c < total; ++c)
      visit(PseudoLikelihood(J, SpinConfiguration::from_bits(c, n)), c);
  } else {
    for (std::size_t s = 0; s < samples; ++s) {
      Rng rng(derive_seed(seed, s));
      const SpinConfiguration sigma = SpinConfiguration::uniform_random(n, rng);
      visit(PseudoLikelihood(J, sigma), n <= 64 ? sigma.to_bits() : static_cast<std::uint64_t>(s));
    }
  }
}

}  // namespace detail

// Checks |L_sigma(beta) - L_sigma'(beta)| <= 8 d_j / n^2 over configurations
// adjacent at coordinate j, for every flip coordinate and grid point.
inline SensitivityReport audit_sensitivity(const CouplingMatrix& J, const std::vector<double>& beta_grid,
                                           AuditMode mode, std::uint64_t seed, std::size_t samples = 1000) {
  const std::size_t n = J.size();
  const double nd = static_cast<double>(n);
  detail::WorstTracker track;
  detail::for_each_audited_config(J, mode, seed, samples, [&](const PseudoLikelihood& pl, std::uint64_t cid) {
    for (std::size_t j = 0; j < n; ++j) {
      const PseudoLikelihood flipped = pl.flipped(j);
      const double bound = 8.0 * J.row_sum(j) / nd;  // 8 d_j / n^2
      for (double beta : beta_grid)
        track.observe(std::fabs(pl.value(beta) - flipped.value(beta)), bound, j, beta, cid);
    }
  });
  return track.finish();
}

// Checks the objective-gradient ratio |grad b(alpha; sigma) / grad b(alpha;
// sigma')| <= e^{eps/2}, with grad b = n L'(alpha) + Delta and Delta the
// smallest permitted coefficient unless overridden. Both gradients zero
// (empty coupling, Delta = 0) counts as ratio 1.
inline SensitivityReport audit_jacobian_ratio(const CouplingMatrix& J, const PrivacyBudget& budget,
                                              const std::vector<double>& alpha_grid, AuditMode mode,
                                              std::uint64_t seed, std::size_t samples = 1000,
                                              std::optional<double> delta_cap_override = std::nullopt) {
  const std::size_t n = J.size();
  const double nd = static_cast<double>(n);
  const double delta_cap = delta_cap_override ? *delta_cap_override : calibrate(J, budget).delta_cap;
  const double bound = std::exp(budget.epsilon() / 2.0);

  detail::WorstTracker track;
  detail::for_each_audited_config(J, mode, seed, samples, [&](const PseudoLikelihood& pl, std::uint64_t cid) {
    for (std::size_t j = 0; j < n; ++j) {
      const PseudoLikelihood flipped = pl.flipped(j);
      for (double alpha : alpha_grid) {
        const double g1 = nd * pl.slope(alpha) + delta_cap;
        const double g2 = nd * flipped.slope(alpha) + delta_cap;
        double ratio;
        if (g1 == 0.0 && g2 == 0.0)
          ratio = 1.0;
        else if (g1 == 0.0 || g2 == 0.0)
          ratio = std::numeric_limits<double>::infinity();
        else
          ratio = std::max(g1 / g2, g2 / g1);
        track.observe(ratio, bound, j, alpha, cid);
      }
    }
  });
  return track.finish();
}

// Checks the noise-density ratio nu(b(alpha, sigma)) / nu(b(alpha, sigma'))
// <= e^{eps/2}, with b(alpha, tau) = -(n L_tau(alpha) + Delta alpha). The
// Laplace bound (delta = 0) is unconditional; the Gaussian bound (delta > 0)
// is only asserted when the numerator argument lies in the lemma set
// S = {|b| <= gamma sqrt(2 log(2/delta))}; directions outside S are counted
// and reported, not failed.
inline SensitivityReport audit_density_ratio(const CouplingMatrix& J, const PrivacyBudget& budget,
                                             const std::vector<double>& alpha_grid, AuditMode mode,
                                             std::uint64_t seed, std::size_t samples = 1000) {
  const std::size_t n = J.size();
  const double nd = static_cast<double>(n);
  const Calibration cal = calibrate(J, budget);
  const double bound = std::exp(budget.epsilon() / 2.0);
  const bool gaussian = budget.delta() > 0.0;
  const double s_threshold = gaussian ? cal.gaussian_sigma * std::sqrt(2.0 * std::log(2.0 / budget.delta())) : 0.0;

  detail::WorstTracker track;
  std::size_t excluded = 0;
  double worst_excluded = 0.0;

  detail::for_each_audited_config(J, mode, seed, samples, [&](const PseudoLikelihood& pl, std::uint64_t cid) {
    for (std::size_t j = 0; j < n; ++j) {
      const PseudoLikelihood flipped = pl.flipped(j);
      for (double alpha : alpha_grid) {
        const double b1 = -(nd * pl.value(alpha) + cal.delta_cap * alpha);
        const double b2 = -(nd * flipped.value(alpha) + cal.delta_cap * alpha);
        if (gaussian) {
          const double g = cal.gaussian_sigma;
          // one direction per choice of numerator
          for (int dir = 0; dir < 2; ++dir) {
            const double num = dir == 0 ? b1 : b2;
            const double den = dir == 0 ? b2 : b1;
            const double ratio = g == 0.0 ? 1.0 : std::exp((den * den - num * num) / (2.0 * g * g));
            if (g == 0.0 || std::fabs(num) <= s_threshold) {
              track.observe(ratio, bound, j, alpha, cid);
            } else {
              ++excluded;
              worst_excluded = std::max(worst_excluded, ratio);
            }
          }
        } else {
          const double s = cal.laplace_scale;
          const double ratio = s == 0.0 ? 1.0 : std::exp(std::fabs(std::fabs(b1) - std::fabs(b2)) / s);
          track.observe(ratio, bound, j, alpha, cid);
        }
      }
    }
  });

  SensitivityReport rep = track.finish();
  rep.excluded = excluded;
  rep.worst_excluded_ratio = worst_excluded;
  return rep;
}

struct SmokeOptions {
  double beta_max = 50.0;
  double tol = 1e-8;
  double slack = 0.2;            // multiplicative tolerance on e^eps
  std::size_t noise_floor = 25;  // min count in both histograms for a bin to be compared
};

struct SmokeReport {
  double worst_log_ratio = 0.0;
  double threshold = 0.0;  // e^eps (1 + slack) + delta
  bool advisory_pass = true;
  std::size_t bins_compared = 0;
};

// Monte Carlo differential-privacy smoke test: histograms the private
// estimates from sigma against those from sigma with one flipped coordinate
// (or an independent rerun of sigma itself when flip is absent) and reports
// the worst per-bin count ratio. Finite-sample histogram ratios are noisy;
// this is an advisory diagnostic, not a privacy proof.
inline SmokeReport mc_privacy_smoke(const CouplingMatrix& J, const SpinConfiguration& sigma,
                                    std::optional<std::size_t> flip, const PrivacyBudget& budget, std::size_t draws,
                                    std::size_t bins, std::uint64_t seed, const SmokeOptions& opts = {}) {
  if (draws < 10000) throw std::invalid_argument("mc_privacy_smoke: need at least 1e4 draws");
  if (bins < 1) throw std::invalid_argument("mc_privacy_smoke: need at least one bin");
  check_dims(J, sigma, "mc_privacy_smoke");
  if (flip && *flip >= sigma.size()) throw std::invalid_argument("mc_privacy_smoke: flip index out of range");

  const Calibration cal = calibrate(J, budget);
  const double nd = static_cast<double>(J.size());

  std::vector<std::vector<std::size_t>> counts(2, std::vector<std::size_t>(bins, 0));
  for (int side = 0; side < 2; ++side) {
    const SpinConfiguration& cfg = (side == 1 && flip) ? sigma.flipped(*flip) : sigma;
    const PseudoLikelihood pl(J, cfg);
    for (std::size_t k = 0; k < draws; ++k) {
      const double b = sample_noise(cal, budget, derive_seed(seed, static_cast<std::uint64_t>(side), k));
      const EstimateReport rep = detail::find_smallest_root(
          [&](double x) { return pl.value(x) + (cal.delta_cap * x + b) / nd; }, opts.beta_max, opts.tol);
      auto bin = static_cast<std::size_t>(rep.beta_hat / opts.beta_max * static_cast<double>(bins));
      if (bin >= bins) bin = bins - 1;
      ++counts[side][bin];
    }
  }

  SmokeReport rep;
  rep.threshold = std::exp(budget.epsilon()) * (1.0 + opts.slack) + budget.delta();
  for (std::size_t b = 0; b < bins; ++b) {
    const std::size_t c0 = counts[0][b], c1 = counts[1][b];
    if (std::min(c0, c1) < opts.noise_floor) continue;
    ++rep.bins_compared;
    const double lr = std::fabs(std::log(static_cast<double>(c0) / static_cast<double>(c1)));
    rep.worst_log_ratio = std::max(rep.worst_log_ratio, lr);
  }
  rep.advisory_pass = std::exp(rep.worst_log_ratio) <= rep.threshold;
  return rep;
}

inline std::string audit_csv_header() { return "audit_name,n,worst_gap,bound,pass"; }

inline std::string audit_csv_row(const std::string& name, std::size_t n, const SensitivityReport& r) {
  return name + "," + std::to_string(n) + "," + detail::fmt(r.worst_gap) + "," + detail::fmt(r.bound) + "," +
         (r.pass ? "1" : "0");
}

inline std::string format_audit_report(const std::string& name, std::size_t n, const SensitivityReport& r) {
  std::ostringstream os;
  os << name << ": n=" << n << " " << (r.pass ? "PASS" : "FAIL") << "\n"
     << "  worst " << detail::fmt(r.worst_gap) << " vs bound " << detail::fmt(r.bound) << " (tightest ratio "
     << detail::fmt(r.tightest_ratio) << ", " << r.checked << " triples)\n"
     << "  argmax: flip=" << r.argmax.flip_index << " grid=" << detail::fmt(r.argmax.grid_point)
     << " config=" << r.argmax.config_id << "\n";
  if (r.excluded > 0)
    os << "  outside lemma set S: " << r.excluded << " directions, worst ratio " << detail::fmt(r.worst_excluded_ratio)
       << " (reported, not failed)\n";
  return os.str();
}

}  // namespace prising
