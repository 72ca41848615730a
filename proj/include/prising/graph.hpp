#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "prising/rng.hpp"

namespace prising {

struct Edge {
  std::uint32_t u = 0;
  std::uint32_t v = 0;
  double weight = 1.0;
};

// Undirected weighted graph on nodes 0..n-1. No self-loops, no duplicate
// unordered pairs, strictly positive finite weights. Immutable once built.
class Network {
 public:
  Network() = default;

  Network(std::size_t n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) {
    for (auto& e : edges_) {
      if (e.u == e.v) throw std::invalid_argument("Network: self-loop at node " + std::to_string(e.u));
      if (e.u >= n_ || e.v >= n_) throw std::invalid_argument("Network: edge endpoint out of range");
      if (!(e.weight > 0.0) || !std::isfinite(e.weight))
        throw std::invalid_argument("Network: edge weight must be positive and finite");
      if (e.u > e.v) std::swap(e.u, e.v);
    }
    std::sort(edges_.begin(), edges_.end(),
              [](const Edge& a, const Edge& b) { return a.u < b.u || (a.u == b.u && a.v < b.v); });
    for (std::size_t i = 1; i < edges_.size(); ++i) {
      if (edges_[i - 1].u == edges_[i].u && edges_[i - 1].v == edges_[i].v)
        throw std::invalid_argument("Network: duplicate edge (" + std::to_string(edges_[i].u) + "," +
                                    std::to_string(edges_[i].v) + ")");
    }
  }

  std::size_t node_count() const { return n_; }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }

  // unweighted degrees (incident edge counts)
  std::vector<std::size_t> degrees() const {
    std::vector<std::size_t> deg(n_, 0);
    for (const auto& e : edges_) {
      ++deg[e.u];
      ++deg[e.v];
    }
    return deg;
  }

  std::vector<double> weighted_degrees() const {
    std::vector<double> deg(n_, 0.0);
    for (const auto& e : edges_) {
      deg[e.u] += e.weight;
      deg[e.v] += e.weight;
    }
    return deg;
  }

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
};

// Erdos-Renyi G(n, p): each unordered pair kept independently with
// probability p, unit weights. Deterministic for a fixed seed.
inline Network generate_erdos_renyi(std::size_t n, double p, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("generate_erdos_renyi: n must be >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("generate_erdos_renyi: p must lie in [0, 1]");
  Rng rng(derive_seed(seed));
  std::vector<Edge> edges;
  for (std::uint32_t u = 0; u + 1 < n; ++u)
    for (std::uint32_t v = u + 1; v < n; ++v)
      if (rng.next_double() < p) edges.push_back({u, v, 1.0});
  return Network(n, std::move(edges));
}

// d-regular graph by the configuration (pairing) model: n*d stubs are
// shuffled and paired; pairings with loops or multi-edges are resampled.
inline Network generate_regular(std::size_t n, std::size_t d, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("generate_regular: n must be >= 1");
  if (d < 1 || d >= n) throw std::invalid_argument("generate_regular: need 1 <= d < n");
  if ((n * d) % 2 != 0) throw std::invalid_argument("generate_regular: n*d must be even");

  constexpr int kMaxRetries = 1000;
  Rng rng(derive_seed(seed));
  std::vector<std::uint32_t> stubs(n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) stubs[i * d + k] = static_cast<std::uint32_t>(i);

  for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
    for (std::size_t i = stubs.size() - 1; i > 0; --i)
      std::swap(stubs[i], stubs[rng.next_below(i + 1)]);

    std::vector<Edge> edges;
    edges.reserve(stubs.size() / 2);
    bool ok = true;
    for (std::size_t k = 0; k + 1 < stubs.size(); k += 2) {
      if (stubs[k] == stubs[k + 1]) {
        ok = false;
        break;
      }
      edges.push_back({stubs[k], stubs[k + 1], 1.0});
    }
    if (!ok) continue;

    auto sorted = edges;
    for (auto& e : sorted)
      if (e.u > e.v) std::swap(e.u, e.v);
    std::sort(sorted.begin(), sorted.end(),
              [](const Edge& a, const Edge& b) { return a.u < b.u || (a.u == b.u && a.v < b.v); });
    for (std::size_t i = 1; ok && i < sorted.size(); ++i)
      if (sorted[i - 1].u == sorted[i].u && sorted[i - 1].v == sorted[i].v) ok = false;
    if (ok) return Network(n, std::move(sorted));
  }
  throw std::runtime_error("generate_regular: no simple pairing found after " + std::to_string(kMaxRetries) +
                           " attempts");
}

namespace detail {

inline bool parse_u32(const std::string& tok, std::uint32_t& out) {
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

inline bool parse_f64(const std::string& tok, double& out) {
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

// Reads the edge-list text format: one "u v [w]" edge per line with 0-based
// integer ids and an optional positive weight (default 1.0). Blank lines and
// lines starting with '#' are ignored. An optional leading "n <count>" line
// fixes the node count; otherwise it is 1 + the largest id seen. Repeats of
// a pair with the same weight are collapsed; conflicting weights are an error.
inline Network load_edge_list(std::istream& in) {
  std::optional<std::size_t> declared_n;
  std::vector<Edge> edges;
  std::uint32_t max_id = 0;
  bool saw_edge = false;
  bool first_content = true;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;

    std::istringstream ls(t);
    std::vector<std::string> tok;
    for (std::string w; ls >> w;) tok.push_back(w);

    if (first_content && tok.size() == 2 && tok[0] == "n") {
      std::uint32_t cnt = 0;
      if (!detail::parse_u32(tok[1], cnt))
        throw std::runtime_error("edge list line " + std::to_string(lineno) + ": bad node count");
      declared_n = cnt;
      first_content = false;
      continue;
    }
    first_content = false;

    if (tok.size() != 2 && tok.size() != 3)
      throw std::runtime_error("edge list line " + std::to_string(lineno) + ": expected 'u v [w]'");
    std::uint32_t u = 0, v = 0;
    if (!detail::parse_u32(tok[0], u) || !detail::parse_u32(tok[1], v))
      throw std::runtime_error("edge list line " + std::to_string(lineno) + ": node ids must be non-negative integers");
    if (u == v) throw std::runtime_error("edge list line " + std::to_string(lineno) + ": self-loop");
    double w = 1.0;
    if (tok.size() == 3) {
      if (!detail::parse_f64(tok[2], w) || !(w > 0.0) || !std::isfinite(w))
        throw std::runtime_error("edge list line " + std::to_string(lineno) + ": weight must be positive");
    }
    if (u > v) std::swap(u, v);
    edges.push_back({u, v, w});
    max_id = std::max(max_id, v);
    saw_edge = true;
  }

  std::sort(edges.begin(), edges.end(),
            [](const Edge& a, const Edge& b) { return a.u < b.u || (a.u == b.u && a.v < b.v); });
  std::vector<Edge> dedup;
  dedup.reserve(edges.size());
  for (const auto& e : edges) {
    if (!dedup.empty() && dedup.back().u == e.u && dedup.back().v == e.v) {
      if (dedup.back().weight != e.weight)
        throw std::runtime_error("edge list: conflicting weights for edge (" + std::to_string(e.u) + "," +
                                 std::to_string(e.v) + ")");
      continue;
    }
    dedup.push_back(e);
  }

  const std::size_t n = declared_n ? *declared_n : (saw_edge ? static_cast<std::size_t>(max_id) + 1 : 0);
  if (declared_n && saw_edge && max_id >= *declared_n)
    throw std::runtime_error("edge list: node id " + std::to_string(max_id) + " exceeds declared count");
  return Network(n, std::move(dedup));
}

inline void save_edge_list(std::ostream& out, const Network& g) {
  out << "n " << g.node_count() << "\n";
  for (const auto& e : g.edges()) out << e.u << " " << e.v << " " << e.weight << "\n";
}

struct PruneResult {
  Network network;
  std::vector<std::uint32_t> kept;  // kept[new_id] = old_id
};

// Drops nodes with (unweighted) degree >= max_degree, then optionally drops
// nodes left isolated, and compacts ids. The mapping back to original ids is
// returned so aligned per-node data can be subset the same way.
inline PruneResult prune(const Network& g, std::optional<std::size_t> max_degree, bool drop_isolated) {
  const std::size_t n = g.node_count();
  std::vector<bool> keep(n, true);
  if (max_degree) {
    const auto deg = g.degrees();
    for (std::size_t i = 0; i < n; ++i)
      if (deg[i] >= *max_degree) keep[i] = false;
  }
  if (drop_isolated) {
    std::vector<std::size_t> deg(n, 0);
    for (const auto& e : g.edges())
      if (keep[e.u] && keep[e.v]) {
        ++deg[e.u];
        ++deg[e.v];
      }
    for (std::size_t i = 0; i < n; ++i)
      if (keep[i] && deg[i] == 0) keep[i] = false;
  }

  std::vector<std::uint32_t> remap(n, 0);
  std::vector<std::uint32_t> kept;
  for (std::size_t i = 0; i < n; ++i)
    if (keep[i]) {
      remap[i] = static_cast<std::uint32_t>(kept.size());
      kept.push_back(static_cast<std::uint32_t>(i));
    }

  std::vector<Edge> edges;
  for (const auto& e : g.edges())
    if (keep[e.u] && keep[e.v]) edges.push_back({remap[e.u], remap[e.v], e.weight});
  return PruneResult{Network(kept.size(), std::move(edges)), std::move(kept)};
}

}  // namespace prising
