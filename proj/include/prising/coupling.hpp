#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "prising/graph.hpp"

namespace prising {

// Symmetric non-negative interaction matrix with zero diagonal, stored as
// sorted sparse rows (CSR). Row sums are computed once at construction and
// cached. Immutable, safe to share across threads.
class CouplingMatrix {
 public:
  struct Entry {
    std::uint32_t col = 0;
    double value = 0.0;
  };

  struct Triplet {
    std::uint32_t i = 0;
    std::uint32_t j = 0;
    double value = 0.0;
  };

  // `pairs` lists each unordered pair at most once; both (i,j) and (j,i)
  // entries are materialized. Zero values are dropped.
  CouplingMatrix(std::size_t n, const std::vector<Triplet>& pairs) : n_(n) {
    if (n_ < 1) throw std::invalid_argument("CouplingMatrix: dimension must be >= 1");
    std::vector<std::size_t> counts(n_, 0);
    for (const auto& t : pairs) {
      if (t.i == t.j) throw std::invalid_argument("CouplingMatrix: diagonal entry");
      if (t.i >= n_ || t.j >= n_) throw std::invalid_argument("CouplingMatrix: index out of range");
      if (!(t.value >= 0.0) || !std::isfinite(t.value))
        throw std::invalid_argument("CouplingMatrix: entries must be non-negative and finite");
      if (t.value == 0.0) continue;
      ++counts[t.i];
      ++counts[t.j];
    }
    offsets_.assign(n_ + 1, 0);
    for (std::size_t i = 0; i < n_; ++i) offsets_[i + 1] = offsets_[i] + counts[i];
    entries_.resize(offsets_[n_]);
    std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
    for (const auto& t : pairs) {
      if (t.value == 0.0) continue;
      entries_[cursor[t.i]++] = {t.j, t.value};
      entries_[cursor[t.j]++] = {t.i, t.value};
    }
    for (std::size_t i = 0; i < n_; ++i) {
      auto* b = entries_.data() + offsets_[i];
      auto* e = entries_.data() + offsets_[i + 1];
      std::sort(b, e, [](const Entry& a, const Entry& c) { return a.col < c.col; });
      for (auto* p = b; p + 1 < e; ++p)
        if (p->col == (p + 1)->col) throw std::invalid_argument("CouplingMatrix: duplicate pair");
    }
    row_sums_.resize(n_);
    max_row_sum_ = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      double s = 0.0;
      for (const auto& e : row(i)) s += e.value;
      row_sums_[i] = s;
      max_row_sum_ = std::max(max_row_sum_, s);
    }
  }

  std::size_t size() const { return n_; }
  std::size_t nnz() const { return entries_.size(); }

  std::span<const Entry> row(std::size_t i) const {
    return {entries_.data() + offsets_[i], entries_.data() + offsets_[i + 1]};
  }

  double row_sum(std::size_t i) const { return row_sums_[i]; }
  double max_row_sum() const { return max_row_sum_; }

  double at(std::size_t i, std::size_t j) const {
    const auto r = row(i);
    const auto it = std::lower_bound(r.begin(), r.end(), static_cast<std::uint32_t>(j),
                                     [](const Entry& e, std::uint32_t c) { return e.col < c; });
    return (it != r.end() && it->col == j) ? it->value : 0.0;
  }

  // Support of the matrix as sorted unordered pairs (u < v); the edge set of
  // the network the coupling was built from.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> support_pairs() const {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
    for (std::uint32_t i = 0; i < n_; ++i)
      for (const auto& e : row(i))
        if (e.col > i) out.emplace_back(i, e.col);
    return out;
  }

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<Entry> entries_;
  std::vector<double> row_sums_;
  double max_row_sum_ = 0.0;
};

// J(i,j) = w(i,j) / scale. Studies use scale = n*p for Erdos-Renyi graphs
// and scale = d for d-regular graphs.
inline CouplingMatrix coupling_scaled_adjacency(const Network& g, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw std::invalid_argument("coupling_scaled_adjacency: scale must be positive and finite");
  std::vector<CouplingMatrix::Triplet> t;
  t.reserve(g.edge_count());
  for (const auto& e : g.edges()) t.push_back({e.u, e.v, e.weight / scale});
  return CouplingMatrix(g.node_count(), t);
}

// J = D^{-1/2} A D^{-1/2} with weighted degrees; tolerates moderate degree
// heterogeneity. Isolated nodes are rejected.
inline CouplingMatrix coupling_normalized_laplacian(const Network& g) {
  const auto deg = g.weighted_degrees();
  for (std::size_t i = 0; i < deg.size(); ++i)
    if (deg[i] <= 0.0)
      throw std::invalid_argument("coupling_normalized_laplacian: isolated node " + std::to_string(i));
  std::vector<CouplingMatrix::Triplet> t;
  t.reserve(g.edge_count());
  for (const auto& e : g.edges()) t.push_back({e.u, e.v, e.weight / std::sqrt(deg[e.u] * deg[e.v])});
  return CouplingMatrix(g.node_count(), t);
}

// max_i sum_j J(i,j); equals the max column sum by symmetry.
inline double row_sum_max(const CouplingMatrix& J) { return J.max_row_sum(); }

}  // namespace prising
