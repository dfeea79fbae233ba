#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mcbf/driver.hpp"

namespace mcbf {

struct GridPoint {
  std::size_t n = 0;
  std::size_t k = 0;
  double gamma_db = 0.0;

  bool operator==(const GridPoint&) const = default;
};

struct ExperimentConfig {
  std::vector<GridPoint> grid;
  std::vector<std::uint64_t> seeds;
  std::vector<InnerSolver> solvers;
  double pathloss_db = -90.0;
  double noise_dbm = -80.0;
  MmOptions mm;  // mm.inner_solver is overwritten per run
  double batch_frac = 0.2;
  std::filesystem::path out_dir = "out";
  bool traces = true;
  bool timing = true;  // false writes wall_s = 0 for byte-comparable output
  unsigned threads = 1;  // concurrent runs
};

/// Thrown for any configuration problem; the message names the key.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCode::config, what) {}
};

/// Built-in defaults: N = 200, K = 50, gamma = 10 dB, seed 0, ARCD.
ExperimentConfig default_config();

/// JSON config; see README for the schema. Unknown keys are errors.
ExperimentConfig parse_config(const std::filesystem::path& path);
ExperimentConfig parse_config_text(std::string_view text, const std::string& source = "config");

/// Command-line overrides. Any of n/k/gamma_db replaces the grid by the
/// Cartesian product of the given lists, with missing axes taken from the
/// values already present in the grid.
struct ConfigOverrides {
  std::optional<std::vector<InnerSolver>> solvers;
  std::optional<std::vector<std::size_t>> n;
  std::optional<std::vector<std::size_t>> k;
  std::optional<std::vector<double>> gamma_db;
  std::optional<std::vector<std::uint64_t>> seeds;
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::size_t> mm_iters;
  std::optional<double> inner_tol;
  std::optional<double> batch_frac;
  std::optional<unsigned> threads;
  std::optional<bool> timing;
};

void apply_overrides(ExperimentConfig& config, const ConfigOverrides& overrides);

/// Checks every invariant; throws ConfigError.
void validate(const ExperimentConfig& config);

/// "0,3,5-9" -> {0, 3, 5, 6, 7, 8, 9}.
std::vector<std::uint64_t> parse_seed_list(std::string_view text);
std::vector<InnerSolver> parse_solver_list(std::string_view text);

}  // namespace mcbf
