#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mcbf/admm.hpp"
#include "mcbf/dual_solvers.hpp"
#include "mcbf/model.hpp"
#include "mcbf/surrogate.hpp"

namespace mcbf {

enum class InnerSolver {
  arcd,
  rcd,
  pgd,
  admm,
  oracle,     // exhaustive active-set, K <= 14
  reference,  // tightly converged projected gradient, any K
};

const char* to_string(InnerSolver solver);
std::optional<InnerSolver> parse_inner_solver(std::string_view name);

inline constexpr std::size_t kOracleMaxUsers = 14;

struct MmOptions {
  InnerSolver inner_solver = InnerSolver::arcd;
  std::size_t mm_max_iters = 20;
  double mm_rel_tol = 1e-5;
  SolverOptions inner;  // arcd, rcd and pgd (tol, max_iters)
  AdmmOptions admm;
  GramMode gram_mode = GramMode::automatic;
  std::size_t gram_budget = kDefaultGramBudget;
};

struct MmReport {
  RVector power_trace;      // ||v^[0]||^2, ||v^[1]||^2, ...
  RVector snr_ratio_trace;  // min_k SNR_k(v^[n]) / gamma, aligned with power_trace
  std::vector<SolveReport> inner_reports;
  Beamformer beamformer;
  FeasibilityReport feasibility;  // of the final beamformer for P, slack 1e-6
  double wall_seconds = 0.0;
  std::size_t mm_iterations = 0;
  std::size_t total_inner_iterations = 0;
  std::size_t rejected_steps = 0;  // candidates that would have raised the power
  bool inner_converged = true;     // every inner solve met its own tolerance
  bool aborted = false;
  std::string diagnostic;  // why the run aborted

  /// Not aborted and the final beamformer is feasible for P.
  bool converged() const noexcept { return !aborted && feasibility.feasible; }
};

inline constexpr double kFeasibilitySlack = 1e-6;

/// MM from the feasible initializer with q* = 0.
MmReport mm_solve(const ProblemInstance& instance, const MmOptions& opts, std::uint64_t seed);

/// MM from a given P-feasible v^[0].
MmReport mm_solve_from(const ProblemInstance& instance, Beamformer v0, const MmOptions& opts,
                       std::uint64_t seed);

}  // namespace mcbf
