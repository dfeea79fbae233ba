// mcbf: solve / bench / verify front end.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mcbf/config.hpp"
#include "mcbf/experiment.hpp"
#include "mcbf/kernels.hpp"
#include "mcbf/verify.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 1, kRunFailed = 2, kVerifyFailed = 3 };

struct Flags {
  std::string config;
  std::string solver;
  std::vector<std::size_t> n, k;
  std::vector<double> gamma_db;
  std::string seeds;
  std::string out;
  std::optional<std::size_t> mm_iters;
  std::optional<double> inner_tol;
  std::optional<double> batch_frac;
  std::optional<unsigned> threads;
  bool no_timing = false;
};

void add_run_flags(CLI::App& cmd, Flags& f) {
  cmd.add_option("--config", f.config, "JSON experiment config");
  cmd.add_option("--solver", f.solver, "arcd, rcd, pgd, admm, oracle, reference (comma list)");
  cmd.add_option("--n", f.n, "antennas (comma list)")->delimiter(',');
  cmd.add_option("--k", f.k, "users (comma list)")->delimiter(',');
  cmd.add_option("--gamma-db", f.gamma_db, "SNR target in dB (comma list)")->delimiter(',');
  cmd.add_option("--seeds", f.seeds, "e.g. 0,3,10-19");
  cmd.add_option("--out", f.out, "output directory");
  cmd.add_option("--mm-iters", f.mm_iters, "MM iteration cap")->check(CLI::PositiveNumber);
  cmd.add_option("--inner-tol", f.inner_tol, "inner objective-change tolerance");
  cmd.add_option("--batch-frac", f.batch_frac, "ARCD batch Y = max(1, floor(frac*K))");
  cmd.add_option("--threads", f.threads, "concurrent runs (bench) or inner threads (solve)")
      ->check(CLI::Range(1u, 1024u));
  cmd.add_flag("--no-timing", f.no_timing, "write wall_s = 0 for byte-comparable output");
}

mcbf::ExperimentConfig build_config(const Flags& f) {
  mcbf::ExperimentConfig cfg = f.config.empty() ? mcbf::default_config() : mcbf::parse_config(f.config);
  mcbf::ConfigOverrides o;
  if (!f.solver.empty()) o.solvers = mcbf::parse_solver_list(f.solver);
  if (!f.n.empty()) o.n = f.n;
  if (!f.k.empty()) o.k = f.k;
  if (!f.gamma_db.empty()) o.gamma_db = f.gamma_db;
  if (!f.seeds.empty()) o.seeds = mcbf::parse_seed_list(f.seeds);
  if (!f.out.empty()) o.out_dir = f.out;
  o.mm_iters = f.mm_iters;
  o.inner_tol = f.inner_tol;
  o.batch_frac = f.batch_frac;
  o.threads = f.threads;
  if (f.no_timing) o.timing = false;
  mcbf::apply_overrides(cfg, o);
  mcbf::validate(cfg);
  return cfg;
}

int run_solve(const Flags& f) {
  mcbf::ExperimentConfig cfg = build_config(f);
  if (cfg.grid.size() * cfg.seeds.size() * cfg.solvers.size() != 1) {
    throw mcbf::ConfigError("solve: expects exactly one (n, k, gamma_db), seed and solver; use bench");
  }
  // A single run: --threads parallelizes inside the inner solver instead.
  cfg.mm.inner.threads = cfg.mm.admm.threads = cfg.threads;
  cfg.threads = 1;
  mcbf::ResultRow row;
  std::string error;
  if (!f.out.empty() || !f.config.empty()) {
    mcbf::run_experiments(cfg, [&](const mcbf::RunOutcome& o) {
      row = o.row;
      error = o.error;
    });
  } else {
    mcbf::RunOutcome o = mcbf::run_one(cfg, cfg.grid[0], cfg.seeds[0], cfg.solvers[0]);
    row = o.row;
    error = o.error;
  }
  std::cout << mcbf::kRowsHeader << '\n';
  mcbf::write_row(std::cout, row);
  if (!error.empty()) std::cerr << "run failed: " << error << '\n';
  return row.converged ? kOk : kRunFailed;
}

int run_bench(const Flags& f) {
  const mcbf::ExperimentConfig cfg = build_config(f);
  std::size_t failed = 0;
  const auto rows = mcbf::run_experiments(cfg, [&](const mcbf::RunOutcome& o) {
    if (!o.row.converged) {
      ++failed;
      std::cerr << "run failed: " << o.row.solver << " n=" << o.row.n << " k=" << o.row.k
                << " seed=" << o.row.seed << (o.error.empty() ? "" : ": " + o.error) << '\n';
    }
  });
  std::cout << mcbf::emit_summary(rows).summary_csv;
  std::cerr << rows.size() << " runs, " << failed << " failed; output in " << cfg.out_dir.string()
            << '\n';
  return failed ? kRunFailed : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multicast beamforming: MM with dual coordinate-descent inner solvers"};
  app.require_subcommand(1);
  std::string kernels;
  app.add_option("--kernels", kernels, "force the kernel backend: scalar or avx2");

  Flags solve_flags, bench_flags;
  auto* solve = app.add_subcommand("solve", "single run; prints one result row");
  add_run_flags(*solve, solve_flags);
  auto* bench = app.add_subcommand("bench", "sweep per config; writes rows, summary, traces");
  add_run_flags(*bench, bench_flags);
  auto* verify = app.add_subcommand("verify", "oracle-equivalence and invariant checks");
  unsigned verify_threads = 1;
  verify->add_option("--threads", verify_threads, "inner threads")->check(CLI::Range(1u, 1024u));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (!kernels.empty()) {
      const auto backend = mcbf::kernels::parse_backend(kernels);
      if (!backend || !mcbf::kernels::available(*backend)) {
        throw mcbf::ConfigError("--kernels: '" + kernels + "' is not available on this CPU");
      }
      mcbf::kernels::select(*backend);
    }
    if (*solve) return run_solve(solve_flags);
    if (*bench) return run_bench(bench_flags);
    const bool ok = mcbf::print_results(std::cout, mcbf::run_verification(verify_threads));
    return ok ? kOk : kVerifyFailed;
  } catch (const mcbf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRunFailed;
  }
}
