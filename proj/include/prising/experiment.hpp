#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "prising/estimator.hpp"
#include "prising/graph.hpp"
#include "prising/ising.hpp"
#include "prising/privacy_audit.hpp"

namespace prising {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class GraphFamily { erdos_renyi, regular, edge_list };
enum class CouplingKind { scaled_adjacency, normalized_laplacian };

// Declarative sweep description, read from a flat "key = value" text file.
struct ExperimentConfig {
  GraphFamily graph_family = GraphFamily::erdos_renyi;
  CouplingKind coupling = CouplingKind::scaled_adjacency;
  std::vector<std::size_t> n_grid;
  std::optional<double> p;           // fixed edge probability
  std::optional<double> p_exponent;  // p_n = n^{-alpha}
  std::vector<double> p_exponent_grid;
  std::size_t degree = 0;  // regular family
  std::vector<double> beta_grid;
  std::vector<double> epsilon_grid;
  bool delta_one_over_n = true;  // "delta = 1/n"
  double delta_fixed = 0.0;
  std::size_t replicates = 500;
  std::size_t sweeps = 1000;
  std::uint64_t seed = 1;
  double beta_max = 50.0;
  double tol = 1e-8;
  bool fix_graph = false;  // reuse one graph across replicates
  std::optional<double> scale;
  std::string edge_list_path;
  std::string outcomes_path;
  std::size_t prune_max_degree = 0;  // 0 = off; drops nodes with degree >= this
  bool prune_drop_isolated = false;
  // audit subcommand
  AuditMode audit_mode = AuditMode::exhaustive;
  std::size_t audit_instances = 10;
  std::size_t audit_samples = 1000;
  std::vector<double> alpha_grid;  // ratio audits; defaults to beta_grid
  std::optional<double> delta_cap_override;
  std::size_t smoke_draws = 0;  // 0 = skip the smoke test
  std::size_t smoke_bins = 20;
  std::optional<std::size_t> smoke_flip;
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline double cfg_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  if (!parse_f64(v, x)) throw ConfigError("config: bad number for '" + key + "': " + v);
  return x;
}

inline std::size_t cfg_size(const std::string& key, const std::string& v) {
  std::uint32_t x = 0;
  if (!parse_u32(v, x)) throw ConfigError("config: bad count for '" + key + "': " + v);
  return x;
}

inline bool cfg_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: bad flag for '" + key + "': " + v);
}

inline std::vector<double> cfg_dlist(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& t : split_list(v)) out.push_back(cfg_double(key, t));
  return out;
}

// First exception wins; remaining tasks are drained.
inline void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const std::size_t workers = std::min(threads, count);
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(count);
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string val = detail::trim(t.substr(eq + 1));
    if (val.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty value for '" + key + "'");

    if (key == "graph_family") {
      if (val == "erdos_renyi")
        cfg.graph_family = GraphFamily::erdos_renyi;
      else if (val == "regular")
        cfg.graph_family = GraphFamily::regular;
      else if (val == "edge_list")
        cfg.graph_family = GraphFamily::edge_list;
      else
        throw ConfigError("config: unknown graph_family '" + val + "'");
    } else if (key == "coupling") {
      if (val == "scaled_adjacency")
        cfg.coupling = CouplingKind::scaled_adjacency;
      else if (val == "normalized_laplacian")
        cfg.coupling = CouplingKind::normalized_laplacian;
      else
        throw ConfigError("config: unknown coupling '" + val + "'");
    } else if (key == "n_grid") {
      cfg.n_grid.clear();
      for (const auto& s : detail::split_list(val)) cfg.n_grid.push_back(detail::cfg_size(key, s));
    } else if (key == "p") {
      cfg.p = detail::cfg_double(key, val);
    } else if (key == "p_exponent") {
      cfg.p_exponent = detail::cfg_double(key, val);
    } else if (key == "p_exponent_grid") {
      cfg.p_exponent_grid = detail::cfg_dlist(key, val);
    } else if (key == "degree") {
      cfg.degree = detail::cfg_size(key, val);
    } else if (key == "beta_grid") {
      cfg.beta_grid = detail::cfg_dlist(key, val);
    } else if (key == "epsilon_grid") {
      cfg.epsilon_grid = detail::cfg_dlist(key, val);
    } else if (key == "delta") {
      if (val == "1/n") {
        cfg.delta_one_over_n = true;
      } else {
        cfg.delta_one_over_n = false;
        cfg.delta_fixed = detail::cfg_double(key, val);
      }
    } else if (key == "replicates") {
      cfg.replicates = detail::cfg_size(key, val);
    } else if (key == "sweeps") {
      cfg.sweeps = detail::cfg_size(key, val);
    } else if (key == "seed") {
      std::uint64_t s = 0;
      auto [ptr, ec] = std::from_chars(val.data(), val.data() + val.size(), s);
      if (ec != std::errc() || ptr != val.data() + val.size()) throw ConfigError("config: bad seed '" + val + "'");
      cfg.seed = s;
    } else if (key == "beta_max") {
      cfg.beta_max = detail::cfg_double(key, val);
    } else if (key == "tol") {
      cfg.tol = detail::cfg_double(key, val);
    } else if (key == "fix_graph") {
      cfg.fix_graph = detail::cfg_bool(key, val);
    } else if (key == "scale") {
      cfg.scale = detail::cfg_double(key, val);
    } else if (key == "edge_list") {
      cfg.edge_list_path = val;
    } else if (key == "outcomes") {
      cfg.outcomes_path = val;
    } else if (key == "prune_max_degree") {
      cfg.prune_max_degree = detail::cfg_size(key, val);
    } else if (key == "prune_drop_isolated") {
      cfg.prune_drop_isolated = detail::cfg_bool(key, val);
    } else if (key == "audit_mode") {
      if (val == "exhaustive")
        cfg.audit_mode = AuditMode::exhaustive;
      else if (val == "sampled")
        cfg.audit_mode = AuditMode::sampled;
      else
        throw ConfigError("config: unknown audit_mode '" + val + "'");
    } else if (key == "audit_instances") {
      cfg.audit_instances = detail::cfg_size(key, val);
    } else if (key == "audit_samples") {
      cfg.audit_samples = detail::cfg_size(key, val);
    } else if (key == "alpha_grid") {
      cfg.alpha_grid = detail::cfg_dlist(key, val);
    } else if (key == "delta_cap_override") {
      cfg.delta_cap_override = detail::cfg_double(key, val);
    } else if (key == "smoke_draws") {
      cfg.smoke_draws = detail::cfg_size(key, val);
    } else if (key == "smoke_bins") {
      cfg.smoke_bins = detail::cfg_size(key, val);
    } else if (key == "smoke_flip") {
      cfg.smoke_flip = detail::cfg_size(key, val);
    } else {
      throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  return parse_config(f);
}

namespace detail {

constexpr std::uint64_t kGraphSalt = 0x67;
constexpr std::uint64_t kSpinSalt = 0x73;
constexpr std::uint64_t kNoiseSalt = 0x6e;
constexpr std::uint64_t kInstanceSalt = 0x69;

inline double delta_for(const ExperimentConfig& cfg, std::size_t n) {
  return cfg.delta_one_over_n ? 1.0 / static_cast<double>(n) : cfg.delta_fixed;
}

inline double p_for(const ExperimentConfig& cfg, std::size_t n) {
  if (cfg.p) return *cfg.p;
  if (cfg.p_exponent) return std::pow(static_cast<double>(n), -*cfg.p_exponent);
  throw ConfigError("config: erdos_renyi family needs 'p' or 'p_exponent'");
}

inline Network make_graph(const ExperimentConfig& cfg, std::size_t n, double p, std::uint64_t seed) {
  if (cfg.graph_family == GraphFamily::erdos_renyi) return generate_erdos_renyi(n, p, seed);
  return generate_regular(n, cfg.degree, seed);
}

inline CouplingMatrix make_coupling(const ExperimentConfig& cfg, const Network& g, double p) {
  if (cfg.coupling == CouplingKind::normalized_laplacian) return coupling_normalized_laplacian(g);
  double scale = 0.0;
  if (cfg.scale) {
    scale = *cfg.scale;
  } else if (cfg.graph_family == GraphFamily::erdos_renyi) {
    scale = static_cast<double>(g.node_count()) * p;
  } else if (cfg.graph_family == GraphFamily::regular) {
    scale = static_cast<double>(cfg.degree);
  } else {
    throw ConfigError("config: scaled_adjacency on an edge list needs an explicit 'scale'");
  }
  return coupling_scaled_adjacency(g, scale);
}

// Loads, prunes and returns the network of an edge-list run together with
// the kept-node map for aligning per-node outcome files.
inline PruneResult load_network(const ExperimentConfig& cfg) {
  if (cfg.edge_list_path.empty()) throw ConfigError("config: edge_list family needs 'edge_list = <path>'");
  std::ifstream f(cfg.edge_list_path);
  if (!f) throw DataError("cannot open edge list: " + cfg.edge_list_path);
  Network g;
  try {
    g = load_edge_list(f);
  } catch (const std::exception& e) {
    throw DataError(std::string(e.what()) + " [" + cfg.edge_list_path + "]");
  }
  std::optional<std::size_t> max_deg;
  if (cfg.prune_max_degree > 0) max_deg = cfg.prune_max_degree;
  if (max_deg || cfg.prune_drop_isolated) return prune(g, max_deg, cfg.prune_drop_isolated);
  return PruneResult{std::move(g), {}};
}

inline const char* kReplicateHeader =
    "study,n,p,beta_true,epsilon,delta,replicate,beta_hat_nonprivate,beta_hat_private,"
    "sat_low_nonprivate,sat_high_nonprivate,sat_low_private,sat_high_private,noise_draw,wall_time";

struct ReplicateResult {
  EstimateReport nonprivate;
  EstimateReport priv;
  double wall_seconds = 0.0;
};

inline ReplicateResult run_replicate(const ExperimentConfig& cfg, const CouplingMatrix& J, double beta_true,
                                     const PrivacyBudget& budget, std::uint64_t spin_seed, std::uint64_t noise_seed) {
  const auto t0 = std::chrono::steady_clock::now();
  const SpinConfiguration sigma = sample_glauber(J, beta_true, cfg.sweeps, spin_seed);
  ReplicateResult out;
  out.nonprivate = mple(J, sigma, cfg.beta_max, cfg.tol);
  PrisingOptions opts;
  opts.beta_max = cfg.beta_max;
  opts.tol = cfg.tol;
  opts.seed = noise_seed;
  out.priv = prising(J, sigma, budget, opts);
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

inline std::string replicate_csv_row(const std::string& study, std::size_t n, double p_param, double beta_true,
                                     const PrivacyBudget& budget, std::size_t replicate, const EstimateReport& np,
                                     const EstimateReport& pr, double wall, bool timing) {
  std::ostringstream os;
  os << study << "," << n << "," << fmt(p_param) << "," << fmt(beta_true) << "," << fmt(budget.epsilon()) << ","
     << fmt(budget.delta()) << "," << replicate << "," << fmt(np.beta_hat) << "," << fmt(pr.beta_hat) << ","
     << (np.saturated_low ? 1 : 0) << "," << (np.saturated_high ? 1 : 0) << "," << (pr.saturated_low ? 1 : 0) << ","
     << (pr.saturated_high ? 1 : 0) << "," << fmt(pr.noise_draw.value_or(0.0)) << ","
     << (timing ? fmt(wall) : std::string("0"));
  return os.str();
}

inline void require(bool ok, const char* msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace detail

// Study 1: both estimators across a grid of true beta values, one CSV row
// per (grid point, replicate). Raw rows keep both error-bar conventions
// (per-replicate sd and sd of the mean) reconstructible.
inline std::string run_study_beta_sweep(const ExperimentConfig& cfg, std::size_t threads, bool timing = false) {
  detail::require(!cfg.beta_grid.empty(), "config: beta_grid must be non-empty");
  detail::require(!cfg.epsilon_grid.empty(), "config: epsilon_grid must be non-empty");
  detail::require(cfg.replicates >= 1, "config: replicates must be >= 1");

  std::vector<std::size_t> n_list = cfg.n_grid;
  std::optional<CouplingMatrix> file_coupling;
  if (cfg.graph_family == GraphFamily::edge_list) {
    const auto loaded = detail::load_network(cfg);
    file_coupling = detail::make_coupling(cfg, loaded.network, 0.0);
    n_list = {loaded.network.node_count()};
  } else {
    detail::require(!cfg.n_grid.empty(), "config: n_grid must be non-empty");
    if (cfg.graph_family == GraphFamily::regular)
      detail::require(cfg.degree >= 1, "config: regular family needs 'degree'");
  }

  // fixed-graph couplings, one per n
  std::vector<std::optional<CouplingMatrix>> fixed(n_list.size());
  if (cfg.fix_graph && cfg.graph_family != GraphFamily::edge_list) {
    for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
      const std::size_t n = n_list[ni];
      const double p = cfg.graph_family == GraphFamily::erdos_renyi ? detail::p_for(cfg, n) : 0.0;
      fixed[ni].emplace(detail::make_coupling(
          cfg, detail::make_graph(cfg, n, p, derive_seed(cfg.seed, detail::kGraphSalt, ni)), p));
    }
  }

  const std::size_t nb = cfg.beta_grid.size(), ne = cfg.epsilon_grid.size(), nr = cfg.replicates;
  const std::size_t count = n_list.size() * nb * ne * nr;
  std::vector<std::string> rows(count);

  detail::parallel_for(count, threads, [&](std::size_t task) {
    std::size_t rest = task;
    const std::size_t r = rest % nr;
    rest /= nr;
    const std::size_t ei = rest % ne;
    rest /= ne;
    const std::size_t bi = rest % nb;
    rest /= nb;
    const std::size_t ni = rest;

    const std::size_t n = n_list[ni];
    const double beta_true = cfg.beta_grid[bi];
    const PrivacyBudget budget(cfg.epsilon_grid[ei], detail::delta_for(cfg, n));
    double p_param = 0.0;

    const CouplingMatrix* J = nullptr;
    std::optional<CouplingMatrix> own;
    if (file_coupling) {
      J = &*file_coupling;
    } else if (cfg.graph_family == GraphFamily::erdos_renyi) {
      p_param = detail::p_for(cfg, n);
      if (fixed[ni])
        J = &*fixed[ni];
      else {
        own.emplace(detail::make_coupling(
            cfg, detail::make_graph(cfg, n, p_param, derive_seed(cfg.seed, detail::kGraphSalt, ni, bi, ei, r)),
            p_param));
        J = &*own;
      }
    } else {
      p_param = static_cast<double>(cfg.degree);
      if (fixed[ni])
        J = &*fixed[ni];
      else {
        own.emplace(detail::make_coupling(
            cfg, detail::make_graph(cfg, n, 0.0, derive_seed(cfg.seed, detail::kGraphSalt, ni, bi, ei, r)), 0.0));
        J = &*own;
      }
    }

    const auto res = detail::run_replicate(cfg, *J, beta_true, budget, derive_seed(cfg.seed, detail::kSpinSalt, ni, bi, ei, r),
                                           derive_seed(cfg.seed, detail::kNoiseSalt, ni, bi, ei, r));
    rows[task] = detail::replicate_csv_row("beta_sweep", n, p_param, beta_true, budget, r, res.nonprivate, res.priv,
                                           res.wall_seconds, timing);
  });

  std::string csv = std::string(detail::kReplicateHeader) + "\n";
  for (const auto& r : rows) {
    csv += r;
    csv += "\n";
  }
  return csv;
}

namespace detail {

struct MseCell {
  double mse_nonprivate = 0.0;
  double mse_private = 0.0;
  std::size_t saturated_nonprivate = 0;
  std::size_t saturated_private = 0;
};

// Shared core of the two MSE studies: replicates of (graph, sigma, both
// estimators) per grid cell, aggregated to squared error against the true
// beta. Saturated estimates enter by their clamped value and are counted.
template <class CellKey>
std::vector<MseCell> mse_cells(const ExperimentConfig& cfg, std::size_t threads, const std::vector<CellKey>& cells,
                               const std::function<std::pair<std::size_t, double>(const CellKey&)>& graph_params,
                               const std::function<double(const CellKey&)>& beta_of,
                               const std::function<double(const CellKey&)>& eps_of) {
  const std::size_t nr = cfg.replicates;
  const std::size_t count = cells.size() * nr;
  struct Slot {
    double se_np = 0.0, se_pr = 0.0;
    bool sat_np = false, sat_pr = false;
  };
  std::vector<Slot> slots(count);

  parallel_for(count, threads, [&](std::size_t task) {
    const std::size_t cell = task / nr;
    const std::size_t r = task % nr;
    const auto [n, p] = graph_params(cells[cell]);
    const double beta_true = beta_of(cells[cell]);
    const PrivacyBudget budget(eps_of(cells[cell]), delta_for(cfg, n));

    const Network g = make_graph(cfg, n, p, derive_seed(cfg.seed, kGraphSalt, cell, r));
    const CouplingMatrix J = make_coupling(cfg, g, p);
    const auto res = run_replicate(cfg, J, beta_true, budget, derive_seed(cfg.seed, kSpinSalt, cell, r),
                                   derive_seed(cfg.seed, kNoiseSalt, cell, r));
    Slot& s = slots[task];
    s.se_np = (res.nonprivate.beta_hat - beta_true) * (res.nonprivate.beta_hat - beta_true);
    s.se_pr = (res.priv.beta_hat - beta_true) * (res.priv.beta_hat - beta_true);
    s.sat_np = !res.nonprivate.interior();
    s.sat_pr = !res.priv.interior();
  });

  std::vector<MseCell> out(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    MseCell& cell = out[c];
    for (std::size_t r = 0; r < nr; ++r) {
      const Slot& s = slots[c * nr + r];
      cell.mse_nonprivate += s.se_np;
      cell.mse_private += s.se_pr;
      cell.saturated_nonprivate += s.sat_np ? 1 : 0;
      cell.saturated_private += s.sat_pr ? 1 : 0;
    }
    cell.mse_nonprivate /= static_cast<double>(nr);
    cell.mse_private /= static_cast<double>(nr);
  }
  return out;
}

}  // namespace detail

// Study 2: MSE of both estimators as n grows, one row per (beta, n, epsilon).
inline std::string run_study_mse_vs_n(const ExperimentConfig& cfg, std::size_t threads) {
  detail::require(cfg.graph_family != GraphFamily::edge_list, "config: mse-n needs a generated graph family");
  detail::require(cfg.n_grid.size() >= 2, "config: mse-n needs an n_grid with at least two entries");
  detail::require(!cfg.beta_grid.empty(), "config: beta_grid must be non-empty");
  detail::require(!cfg.epsilon_grid.empty(), "config: epsilon_grid must be non-empty");
  detail::require(cfg.replicates >= 1, "config: replicates must be >= 1");

  struct Key {
    std::size_t bi, ni, ei;
  };
  std::vector<Key> cells;
  for (std::size_t bi = 0; bi < cfg.beta_grid.size(); ++bi)
    for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni)
      for (std::size_t ei = 0; ei < cfg.epsilon_grid.size(); ++ei) cells.push_back({bi, ni, ei});

  const auto agg = detail::mse_cells<Key>(
      cfg, threads, cells,
      [&](const Key& k) {
        const std::size_t n = cfg.n_grid[k.ni];
        return std::pair<std::size_t, double>(
            n, cfg.graph_family == GraphFamily::erdos_renyi ? detail::p_for(cfg, n) : 0.0);
      },
      [&](const Key& k) { return cfg.beta_grid[k.bi]; }, [&](const Key& k) { return cfg.epsilon_grid[k.ei]; });

  std::string csv =
      "study,n,p,beta_true,epsilon,delta,replicates,mse_nonprivate,mse_private,"
      "saturated_nonprivate,saturated_private\n";
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const Key& k = cells[c];
    const std::size_t n = cfg.n_grid[k.ni];
    const double p = cfg.graph_family == GraphFamily::erdos_renyi ? detail::p_for(cfg, n)
                                                                  : static_cast<double>(cfg.degree);
    csv += "mse_vs_n," + std::to_string(n) + "," + detail::fmt(p) + "," + detail::fmt(cfg.beta_grid[k.bi]) + "," +
           detail::fmt(cfg.epsilon_grid[k.ei]) + "," + detail::fmt(detail::delta_for(cfg, n)) + "," +
           std::to_string(cfg.replicates) + "," + detail::fmt(agg[c].mse_nonprivate) + "," +
           detail::fmt(agg[c].mse_private) + "," + std::to_string(agg[c].saturated_nonprivate) + "," +
           std::to_string(agg[c].saturated_private) + "\n";
  }
  return csv;
}

// Study 3: MSE against edge density p_n = n^{-alpha} at fixed n, one row per
// (beta, alpha, epsilon).
inline std::string run_study_mse_vs_density(const ExperimentConfig& cfg, std::size_t threads) {
  detail::require(cfg.graph_family == GraphFamily::erdos_renyi, "config: mse-density needs the erdos_renyi family");
  detail::require(!cfg.n_grid.empty(), "config: n_grid must be non-empty");
  detail::require(!cfg.p_exponent_grid.empty(), "config: mse-density needs 'p_exponent_grid'");
  detail::require(!cfg.beta_grid.empty(), "config: beta_grid must be non-empty");
  detail::require(!cfg.epsilon_grid.empty(), "config: epsilon_grid must be non-empty");
  detail::require(cfg.replicates >= 1, "config: replicates must be >= 1");

  const std::size_t n = cfg.n_grid.front();
  struct Key {
    std::size_t bi, ai, ei;
  };
  std::vector<Key> cells;
  for (std::size_t bi = 0; bi < cfg.beta_grid.size(); ++bi)
    for (std::size_t ai = 0; ai < cfg.p_exponent_grid.size(); ++ai)
      for (std::size_t ei = 0; ei < cfg.epsilon_grid.size(); ++ei) cells.push_back({bi, ai, ei});

  const auto agg = detail::mse_cells<Key>(
      cfg, threads, cells,
      [&](const Key& k) {
        return std::pair<std::size_t, double>(n, std::pow(static_cast<double>(n), -cfg.p_exponent_grid[k.ai]));
      },
      [&](const Key& k) { return cfg.beta_grid[k.bi]; }, [&](const Key& k) { return cfg.epsilon_grid[k.ei]; });

  std::string csv =
      "study,n,p,alpha,beta_true,epsilon,delta,replicates,mse_nonprivate,mse_private,"
      "saturated_nonprivate,saturated_private\n";
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const Key& k = cells[c];
    const double alpha = cfg.p_exponent_grid[k.ai];
    const double p = std::pow(static_cast<double>(n), -alpha);
    csv += "mse_vs_density," + std::to_string(n) + "," + detail::fmt(p) + "," + detail::fmt(alpha) + "," +
           detail::fmt(cfg.beta_grid[k.bi]) + "," + detail::fmt(cfg.epsilon_grid[k.ei]) + "," +
           detail::fmt(detail::delta_for(cfg, n)) + "," + std::to_string(cfg.replicates) + "," +
           detail::fmt(agg[c].mse_nonprivate) + "," + detail::fmt(agg[c].mse_private) + "," +
           std::to_string(agg[c].saturated_nonprivate) + "," + std::to_string(agg[c].saturated_private) + "\n";
  }
  return csv;
}

struct RealDataResult {
  double beta_hat_nonprivate = 0.0;
  std::size_t n = 0;
  std::string csv;
  std::string summary;
  std::vector<std::pair<double, double>> cost_of_privacy;  // (epsilon, mean squared deviation)
};

// Real-data pipeline: the outcomes are fixed, the non-private estimate is
// computed once, and the Monte Carlo conditional cost of privacy
// E[(beta_priv - beta_np)^2 | sigma, J] is estimated per epsilon by
// rerunning the private mechanism.
inline RealDataResult run_real_data(const ExperimentConfig& cfg, std::size_t threads, bool timing = false) {
  detail::require(!cfg.epsilon_grid.empty(), "config: epsilon_grid must be non-empty");
  detail::require(cfg.replicates >= 1, "config: replicates must be >= 1");
  if (cfg.outcomes_path.empty()) throw ConfigError("config: real-data needs 'outcomes = <path>'");

  const auto loaded = detail::load_network(cfg);
  std::ifstream of(cfg.outcomes_path);
  if (!of) throw DataError("cannot open outcomes: " + cfg.outcomes_path);
  SpinConfiguration all_outcomes;
  try {
    all_outcomes = load_outcomes(of);
  } catch (const std::exception& e) {
    throw DataError(std::string(e.what()) + " [" + cfg.outcomes_path + "]");
  }

  SpinConfiguration sigma;
  if (!loaded.kept.empty()) {
    std::vector<int> sub;
    sub.reserve(loaded.kept.size());
    for (auto old_id : loaded.kept) {
      if (old_id >= all_outcomes.size()) throw DataError("outcomes file shorter than the original graph");
      sub.push_back(all_outcomes[old_id]);
    }
    sigma = SpinConfiguration(std::move(sub));
  } else {
    sigma = std::move(all_outcomes);
  }
  const std::size_t n = loaded.network.node_count();
  if (sigma.size() != n) throw DataError("outcomes length " + std::to_string(sigma.size()) +
                                         " does not match graph size " + std::to_string(n));

  const CouplingMatrix J = detail::make_coupling(cfg, loaded.network, 0.0);
  const EstimateReport base = mple(J, sigma, cfg.beta_max, cfg.tol);

  const std::size_t ne = cfg.epsilon_grid.size(), nr = cfg.replicates;
  struct Slot {
    EstimateReport rep;
    double wall = 0.0;
  };
  std::vector<Slot> slots(ne * nr);
  detail::parallel_for(ne * nr, threads, [&](std::size_t task) {
    const std::size_t ei = task / nr;
    const std::size_t r = task % nr;
    const PrivacyBudget budget(cfg.epsilon_grid[ei], detail::delta_for(cfg, n));
    PrisingOptions opts;
    opts.beta_max = cfg.beta_max;
    opts.tol = cfg.tol;
    opts.seed = derive_seed(cfg.seed, detail::kNoiseSalt, ei, r);
    const auto t0 = std::chrono::steady_clock::now();
    slots[task].rep = prising(J, sigma, budget, opts);
    slots[task].wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  });

  RealDataResult out;
  out.beta_hat_nonprivate = base.beta_hat;
  out.n = n;
  out.csv = std::string(detail::kReplicateHeader) + "\n";
  std::ostringstream summary;
  summary << "n=" << n << " edges=" << loaded.network.edge_count()
          << " beta_hat_nonprivate=" << detail::fmt(base.beta_hat)
          << (base.interior() ? "" : " (saturated)") << "\n";
  for (std::size_t ei = 0; ei < ne; ++ei) {
    const PrivacyBudget budget(cfg.epsilon_grid[ei], detail::delta_for(cfg, n));
    double cost = 0.0;
    for (std::size_t r = 0; r < nr; ++r) {
      const Slot& s = slots[ei * nr + r];
      const double dev = s.rep.beta_hat - base.beta_hat;
      cost += dev * dev;
      out.csv += detail::replicate_csv_row("real_data", n, 0.0, base.beta_hat, budget, r, base, s.rep, s.wall, timing);
      out.csv += "\n";
    }
    cost /= static_cast<double>(nr);
    out.cost_of_privacy.emplace_back(budget.epsilon(), cost);
    summary << "epsilon=" << detail::fmt(budget.epsilon()) << " delta=" << detail::fmt(budget.delta())
            << " cost_of_privacy=" << detail::fmt(cost) << " replicates=" << nr << "\n";
  }
  out.summary = summary.str();
  return out;
}

struct AuditRunResult {
  std::string csv;
  std::string text_report;
  bool hard_failure = false;  // smoke-test findings are advisory, never hard
};

// Runs the lemma audits (and optionally the Monte Carlo smoke test) on
// `audit_instances` generated instances; one CSV summary row per audit per
// instance.
inline AuditRunResult run_audits(const ExperimentConfig& cfg, std::size_t threads) {
  detail::require(!cfg.beta_grid.empty(), "config: beta_grid must be non-empty");
  detail::require(!cfg.epsilon_grid.empty(), "config: epsilon_grid must be non-empty");
  detail::require(cfg.audit_instances >= 1, "config: audit_instances must be >= 1");

  const std::vector<double>& alpha_grid = cfg.alpha_grid.empty() ? cfg.beta_grid : cfg.alpha_grid;
  const std::size_t instances = cfg.graph_family == GraphFamily::edge_list ? 1 : cfg.audit_instances;

  struct InstanceOut {
    std::string csv;
    std::string text;
    bool failed = false;
  };
  std::vector<InstanceOut> outs(instances);

  detail::parallel_for(instances, threads, [&](std::size_t k) {
    std::optional<CouplingMatrix> J;
    std::size_t n = 0;
    double p = 0.0;
    if (cfg.graph_family == GraphFamily::edge_list) {
      const auto loaded = detail::load_network(cfg);
      n = loaded.network.node_count();
      J.emplace(detail::make_coupling(cfg, loaded.network, 0.0));
    } else {
      n = cfg.n_grid.empty() ? 8 : cfg.n_grid.front();
      p = cfg.graph_family == GraphFamily::erdos_renyi ? detail::p_for(cfg, n) : 0.0;
      J.emplace(detail::make_coupling(cfg, detail::make_graph(cfg, n, p, derive_seed(cfg.seed, detail::kInstanceSalt, k)), p));
    }
    const PrivacyBudget budget(cfg.epsilon_grid.front(), detail::delta_for(cfg, n));
    const std::uint64_t audit_seed = derive_seed(cfg.seed, detail::kInstanceSalt, k, 1);

    InstanceOut& o = outs[k];
    const auto sens = audit_sensitivity(*J, cfg.beta_grid, cfg.audit_mode, audit_seed, cfg.audit_samples);
    const auto jac = audit_jacobian_ratio(*J, budget, alpha_grid, cfg.audit_mode, audit_seed, cfg.audit_samples,
                                          cfg.delta_cap_override);
    const auto dens = audit_density_ratio(*J, budget, alpha_grid, cfg.audit_mode, audit_seed, cfg.audit_samples);
    o.csv += audit_csv_row("sensitivity", n, sens) + "\n";
    o.csv += audit_csv_row("jacobian_ratio", n, jac) + "\n";
    o.csv += audit_csv_row("density_ratio", n, dens) + "\n";
    o.text += format_audit_report("sensitivity", n, sens);
    o.text += format_audit_report("jacobian_ratio", n, jac);
    o.text += format_audit_report("density_ratio", n, dens);
    o.failed = !sens.pass || !jac.pass || !dens.pass;

    if (cfg.smoke_draws > 0) {
      Rng rng(derive_seed(cfg.seed, detail::kInstanceSalt, k, 2));
      const SpinConfiguration sigma = SpinConfiguration::uniform_random(n, rng);
      SmokeOptions so;
      so.beta_max = cfg.beta_max;
      so.tol = cfg.tol;
      const auto smoke = mc_privacy_smoke(*J, sigma, cfg.smoke_flip, budget, cfg.smoke_draws, cfg.smoke_bins,
                                          derive_seed(cfg.seed, detail::kInstanceSalt, k, 3), so);
      o.csv += "mc_privacy_smoke," + std::to_string(n) + "," + detail::fmt(std::exp(smoke.worst_log_ratio)) + "," +
               detail::fmt(smoke.threshold) + "," + (smoke.advisory_pass ? "1" : "0") + "\n";
      std::ostringstream st;
      st << "mc_privacy_smoke (advisory): worst log-ratio " << detail::fmt(smoke.worst_log_ratio) << " over "
         << smoke.bins_compared << " bins, threshold " << detail::fmt(smoke.threshold)
         << (smoke.advisory_pass ? " PASS" : " EXCEEDED (advisory only)") << "\n";
      o.text += st.str();
    }
  });

  AuditRunResult out;
  out.csv = audit_csv_header() + "\n";
  for (const auto& o : outs) {
    out.csv += o.csv;
    out.text_report += o.text;
    out.hard_failure = out.hard_failure || o.failed;
  }
  return out;
}

}  // namespace prising
