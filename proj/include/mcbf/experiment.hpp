#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "mcbf/config.hpp"
#include "mcbf/driver.hpp"

namespace mcbf {

inline constexpr const char* kRowsHeader =
    "solver,n,k,gamma_db,seed,power_mw,power_dbm,mm_iters,inner_iters,wall_s,min_margin,converged";

struct ResultRow {
  std::string solver;
  std::size_t n = 0;
  std::size_t k = 0;
  double gamma_db = 0.0;
  std::uint64_t seed = 0;
  double power_mw = 0.0;
  double power_dbm = 0.0;
  std::size_t mm_iters = 0;
  std::size_t inner_iters = 0;
  double wall_s = 0.0;
  double min_margin = 0.0;
  bool converged = false;

  bool operator==(const ResultRow&) const = default;
};

struct RunOutcome {
  ResultRow row;
  std::shared_ptr<const ProblemInstance> instance;  // null if generation failed
  MmReport report;
  std::string error;  // set when the run threw
};

/// Channel parameters and MM options for one (point, solver) of a config.
ChannelParams channel_params(const ExperimentConfig& config, const GridPoint& point);
MmOptions mm_options(const ExperimentConfig& config, const GridPoint& point, InnerSolver solver);

/// Generate the instance and run MM. Never throws for run-level failures;
/// they come back as rows with converged = false.
RunOutcome run_one(const ExperimentConfig& config, const GridPoint& point, std::uint64_t seed,
                   InnerSolver solver);

/// Fill power, margin and converged from the stored beamformer, re-checking
/// feasibility for P at slack 1e-6.
void finalize_row(RunOutcome& outcome);

/// Every (point, seed, solver) in config order, run concurrently on
/// config.threads workers; a single collector writes rows.csv, traces,
/// summary.csv and plotdata.csv under config.out_dir. `on_row` (optional)
/// sees rows in config order.
std::vector<ResultRow> run_experiments(
    const ExperimentConfig& config,
    const std::function<void(const RunOutcome&)>& on_row = nullptr);

/// Shortest round-trip decimal form; "nan", "inf", "-inf" for non-finite.
std::string format_double(double x);

void write_row(std::ostream& out, const ResultRow& row);
void write_rows_csv(std::ostream& out, const std::vector<ResultRow>& rows);
std::vector<ResultRow> parse_rows_csv(std::istream& in);

struct SummaryTables {
  std::string summary_csv;
  std::string plot_csv;
};

/// One line per (n, k, gamma_db, solver) in first-appearance order. Power is
/// averaged in linear mW over converged rows, then shown in dBm. Throws
/// invalid_argument on empty input.
SummaryTables emit_summary(const std::vector<ResultRow>& rows);

/// Indices kept when a trace of `length` points is stored: all of them up to
/// `max_points`, otherwise a logarithmically spaced subset that always
/// includes the first and last point.
std::vector<std::size_t> trace_indices(std::size_t length, std::size_t max_points = 100'000);

/// Inner objective trace of a run, concatenated over MM iterations with a
/// running inner-iteration counter, as "iter,objective" CSV.
void write_inner_trace(std::ostream& out, const MmReport& report);
/// Power per MM iteration as "iter,objective" CSV.
void write_power_trace(std::ostream& out, const MmReport& report);

/// traces/n<N>_k<K>_g<gamma> relative to the output directory.
std::filesystem::path trace_dir(const GridPoint& point);

}  // namespace mcbf
