#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "prising/coupling.hpp"
#include "prising/rng.hpp"

namespace prising {

// A +-1 outcome vector, one entry per node.
class SpinConfiguration {
 public:
  SpinConfiguration() = default;

  explicit SpinConfiguration(std::vector<int> values) {
    values_.reserve(values.size());
    for (int v : values) {
      if (v != 1 && v != -1) throw std::invalid_argument("SpinConfiguration: entries must be +1 or -1");
      values_.push_back(static_cast<std::int8_t>(v));
    }
  }

  static SpinConfiguration uniform_random(std::size_t n, Rng& rng) {
    SpinConfiguration s;
    s.values_.resize(n);
    for (auto& v : s.values_) v = static_cast<std::int8_t>(rng.next_spin());
    return s;
  }

  // Decodes a state bitmask: bit i set means spin i is +1.
  static SpinConfiguration from_bits(std::uint64_t bits, std::size_t n) {
    SpinConfiguration s;
    s.values_.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.values_[i] = (bits >> i) & 1u ? 1 : -1;
    return s;
  }

  std::size_t size() const { return values_.size(); }
  int operator[](std::size_t i) const { return values_[i]; }
  const std::vector<std::int8_t>& values() const { return values_; }

  SpinConfiguration flipped(std::size_t j) const {
    SpinConfiguration s(*this);
    s.values_[j] = static_cast<std::int8_t>(-s.values_[j]);
    return s;
  }

  std::uint64_t to_bits() const {
    std::uint64_t b = 0;
    for (std::size_t i = 0; i < values_.size(); ++i)
      if (values_[i] > 0) b |= std::uint64_t{1} << i;
    return b;
  }

 private:
  std::vector<std::int8_t> values_;
};

class IsingModel {
 public:
  IsingModel(CouplingMatrix coupling, double beta) : coupling_(std::move(coupling)), beta_(beta) {
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("IsingModel: beta must be >= 0 and finite");
  }

  const CouplingMatrix& coupling() const { return coupling_; }
  double beta() const { return beta_; }

 private:
  CouplingMatrix coupling_;
  double beta_;
};

inline void check_dims(const CouplingMatrix& J, const SpinConfiguration& sigma, const char* where) {
  if (J.size() != sigma.size())
    throw std::invalid_argument(std::string(where) + ": coupling dimension " + std::to_string(J.size()) +
                                " != configuration length " + std::to_string(sigma.size()));
}

// H(sigma) = sigma^T J sigma, both ordered pairs counted.
inline double hamiltonian(const CouplingMatrix& J, const SpinConfiguration& sigma) {
  check_dims(J, sigma, "hamiltonian");
  double h = 0.0;
  for (std::size_t i = 0; i < J.size(); ++i) {
    double mi = 0.0;
    for (const auto& e : J.row(i)) mi += e.value * sigma[e.col];
    h += mi * sigma[i];
  }
  return h;
}

// m_i = sum_j J(i,j) sigma_j. Independent of sigma_i (zero diagonal).
inline std::vector<double> local_fields(const CouplingMatrix& J, const SpinConfiguration& sigma) {
  check_dims(J, sigma, "local_fields");
  std::vector<double> m(J.size(), 0.0);
  for (std::size_t i = 0; i < J.size(); ++i)
    for (const auto& e : J.row(i)) m[i] += e.value * sigma[e.col];
  return m;
}

namespace detail {

// Walks all 2^n configurations in Gray-code order, keeping the Hamiltonian
// and local fields incrementally up to date. visit(state_bits, H) is called
// once per configuration; state_bits bit i set means spin i is +1.
template <class Visitor>
void for_each_state(const CouplingMatrix& J, Visitor&& visit) {
  const std::size_t n = J.size();
  const std::uint64_t total = std::uint64_t{1} << n;

  std::vector<double> m(n);
  std::vector<std::int8_t> s(n, -1);
  double sum_all = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = -J.row_sum(i);
    sum_all += J.row_sum(i);
  }
  double h = sum_all;  // all-(-1) state: sigma_i sigma_j = 1 everywhere

  visit(std::uint64_t{0}, h);
  for (std::uint64_t k = 1; k < total; ++k) {
    const unsigned b = std::countr_zero(k);
    h -= 4.0 * s[b] * m[b];
    s[b] = static_cast<std::int8_t>(-s[b]);
    for (const auto& e : J.row(b)) m[e.col] += 2.0 * s[b] * e.value;
    visit(k ^ (k >> 1), h);
  }
}

}  // namespace detail

inline constexpr std::size_t kLogPartitionMaxNodes = 24;
inline constexpr std::size_t kExactSamplerMaxNodes = 20;

// F_n(beta) = log( 2^{-n} sum_tau exp(beta H(tau) / 2) ), by exhaustive
// enumeration with a streaming log-sum-exp. Requires n <= 24.
inline double log_partition_exact(const CouplingMatrix& J, double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("log_partition_exact: bad beta");
  const std::size_t n = J.size();
  if (n > kLogPartitionMaxNodes)
    throw std::invalid_argument("log_partition_exact: n > " + std::to_string(kLogPartitionMaxNodes));

  double running_max = -std::numeric_limits<double>::infinity();
  double scaled_sum = 0.0;
  detail::for_each_state(J, [&](std::uint64_t, double h) {
    const double x = 0.5 * beta * h;
    if (x <= running_max) {
      scaled_sum += std::exp(x - running_max);
    } else {
      scaled_sum = scaled_sum * std::exp(running_max - x) + 1.0;
      running_max = x;
    }
  });
  return running_max + std::log(scaled_sum) - static_cast<double>(n) * std::log(2.0);
}

// Exact sampler for small n: enumerates all state weights once, then draws
// by inverse CDF. Requires n <= 20.
class ExactIsingSampler {
 public:
  explicit ExactIsingSampler(const IsingModel& model)
      : n_(model.coupling().size()) {
    if (n_ > kExactSamplerMaxNodes)
      throw std::invalid_argument("ExactIsingSampler: n > " + std::to_string(kExactSamplerMaxNodes));
    const std::uint64_t total = std::uint64_t{1} << n_;

    double max_x = -std::numeric_limits<double>::infinity();
    detail::for_each_state(model.coupling(), [&](std::uint64_t, double h) {
      max_x = std::max(max_x, 0.5 * model.beta() * h);
    });

    cumulative_.resize(total);
    double acc = 0.0;
    std::size_t idx = 0;
    detail::for_each_state(model.coupling(), [&](std::uint64_t, double h) {
      acc += std::exp(0.5 * model.beta() * h - max_x);
      cumulative_[idx++] = acc;
    });
    total_weight_ = acc;
  }

  SpinConfiguration sample(Rng& rng) const {
    const double target = rng.next_double() * total_weight_;
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    std::uint64_t k = static_cast<std::uint64_t>(it - cumulative_.begin());
    if (k >= cumulative_.size()) k = cumulative_.size() - 1;
    return SpinConfiguration::from_bits(k ^ (k >> 1), n_);
  }

  // Probability table indexed by state bitmask (bit i set: spin i = +1).
  std::vector<double> probabilities() const {
    std::vector<double> p(cumulative_.size());
    double prev = 0.0;
    for (std::uint64_t k = 0; k < cumulative_.size(); ++k) {
      p[k ^ (k >> 1)] = (cumulative_[k] - prev) / total_weight_;
      prev = cumulative_[k];
    }
    return p;
  }

 private:
  std::size_t n_;
  std::vector<double> cumulative_;  // walk order
  double total_weight_ = 0.0;
};

inline SpinConfiguration sample_exact(const IsingModel& model, std::uint64_t seed) {
  ExactIsingSampler sampler(model);
  Rng rng(derive_seed(seed));
  return sampler.sample(rng);
}

// Heat-bath (Glauber) dynamics: `sweeps` sequential passes over all sites,
// each site redrawn from its conditional P(s_i = +1 | rest) = 1/(1+e^{-2 beta m_i}).
// Starts from `init` if given, otherwise from a uniform random configuration.
inline SpinConfiguration sample_glauber(const CouplingMatrix& J, double beta, std::size_t sweeps, std::uint64_t seed,
                                        const std::optional<SpinConfiguration>& init = std::nullopt) {
  if (sweeps < 1) throw std::invalid_argument("sample_glauber: sweeps must be >= 1");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw std::invalid_argument("sample_glauber: beta must be >= 0");
  const std::size_t n = J.size();
  if (init) check_dims(J, *init, "sample_glauber");

  Rng rng(derive_seed(seed));
  SpinConfiguration state = init ? *init : SpinConfiguration::uniform_random(n, rng);

  std::vector<std::int8_t> s(state.values());
  const double two_beta = 2.0 * beta;
  for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
    for (std::size_t i = 0; i < n; ++i) {
      double mi = 0.0;
      for (const auto& e : J.row(i)) mi += e.value * s[e.col];
      const double p_up = 1.0 / (1.0 + std::exp(-two_beta * mi));
      s[i] = static_cast<std::int8_t>(rng.next_double() < p_up ? 1 : -1);
    }
  }
  std::vector<int> out(s.begin(), s.end());
  return SpinConfiguration(std::move(out));
}

inline SpinConfiguration sample_glauber(const IsingModel& model, std::size_t sweeps, std::uint64_t seed,
                                        const std::optional<SpinConfiguration>& init = std::nullopt) {
  return sample_glauber(model.coupling(), model.beta(), sweeps, seed, init);
}

// Outcomes file: one value per node per line, "+1", "1" or "-1".
// Blank lines and '#' comments are skipped.
inline SpinConfiguration load_outcomes(std::istream& in) {
  std::vector<int> vals;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t == "+1" || t == "1")
      vals.push_back(1);
    else if (t == "-1")
      vals.push_back(-1);
    else
      throw std::runtime_error("outcomes line " + std::to_string(lineno) + ": expected +1, 1 or -1");
  }
  return SpinConfiguration(std::move(vals));
}

inline void save_outcomes(std::ostream& out, const SpinConfiguration& sigma) {
  for (std::size_t i = 0; i < sigma.size(); ++i) out << (sigma[i] > 0 ? "+1" : "-1") << "\n";
}

}  // namespace prising
