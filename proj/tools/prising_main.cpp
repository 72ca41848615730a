// Command-line experiment harness. Subcommands mirror the simulation studies
// and real-data pipeline; every run is a pure function of (config, seed) and
// emits deterministic CSV.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "prising/prising.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitDataError = 2;
constexpr int kExitAuditFailure = 3;

struct CommonArgs {
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  bool timing = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config file")->required();
  cmd->add_option("--out", args.out_path, "output CSV path")->required();
  cmd->add_option("--seed", args.seed, "override the config seed");
  cmd->add_option("--threads", args.threads, "worker threads (output is identical for any count)");
  cmd->add_flag("--timing", args.timing, "record wall times (makes CSV non-reproducible)");
}

prising::ExperimentConfig load(const CommonArgs& args) {
  prising::ExperimentConfig cfg = prising::load_config(args.config_path);
  if (args.seed) cfg.seed = *args.seed;
  return cfg;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw prising::DataError("cannot open output file: " + path);
  f << content;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"private Ising inverse-temperature estimation harness"};
  app.require_subcommand(1);

  CommonArgs args;
  CLI::App* beta_sweep = app.add_subcommand("beta-sweep", "both estimators across a grid of true beta values");
  CLI::App* mse_n = app.add_subcommand("mse-n", "MSE against the number of nodes");
  CLI::App* mse_density = app.add_subcommand("mse-density", "MSE against edge density p = n^-alpha");
  CLI::App* real_data = app.add_subcommand("real-data", "fixed outcomes: cost of privacy across epsilon");
  CLI::App* audit = app.add_subcommand("audit", "privacy bound audits");
  for (CLI::App* c : {beta_sweep, mse_n, mse_density, real_data, audit}) add_common(c, args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (beta_sweep->parsed()) {
      write_file(args.out_path, prising::run_study_beta_sweep(load(args), args.threads, args.timing));
    } else if (mse_n->parsed()) {
      write_file(args.out_path, prising::run_study_mse_vs_n(load(args), args.threads));
    } else if (mse_density->parsed()) {
      write_file(args.out_path, prising::run_study_mse_vs_density(load(args), args.threads));
    } else if (real_data->parsed()) {
      const auto res = prising::run_real_data(load(args), args.threads, args.timing);
      write_file(args.out_path, res.csv);
      std::cout << res.summary;
    } else if (audit->parsed()) {
      const auto cfg = load(args);
      const auto res = prising::run_audits(cfg, args.threads);
      write_file(args.out_path, res.csv);
      std::cout << res.text_report;
      if (res.hard_failure) {
        std::cerr << "audit: at least one bound violated\n";
        return kExitAuditFailure;
      }
    }
  } catch (const prising::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const prising::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDataError;
  }
  return kExitOk;
}
