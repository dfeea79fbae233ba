#include "mcbf/driver.hpp"

#include <chrono>
#include <cmath>

#include "mcbf/oracle.hpp"
#include "mcbf/rng.hpp"

namespace mcbf {

namespace {

constexpr struct {
  InnerSolver solver;
  const char* name;
} kNames[] = {
    {InnerSolver::arcd, "arcd"},     {InnerSolver::rcd, "rcd"},
    {InnerSolver::pgd, "pgd"},       {InnerSolver::admm, "admm"},
    {InnerSolver::oracle, "oracle"}, {InnerSolver::reference, "reference"},
};

SolveReport oracle_report(const SurrogateModel& model, const OracleResult& r) {
  SolveReport rep;
  rep.objective_trace = {dual_objective(model, r.q_star)};
  rep.iterations = r.iterations;
  rep.converged = r.converged;
  rep.final_objective = r.objective;
  return rep;
}

struct Step {
  Beamformer candidate;
  SolveReport report;
};

Step inner_step(const SurrogateModel& model, const Beamformer& anchor, RVector& q,
                const MmOptions& opts, std::uint64_t seed, std::size_t n) {
  Step out;
  switch (opts.inner_solver) {
    case InnerSolver::admm: {
      AdmmResult r = admm_solve(model, anchor, opts.admm);
      out.report = std::move(r.report);
      out.candidate = std::move(r.v);
      return out;  // already scaled
    }
    case InnerSolver::arcd:
    case InnerSolver::rcd: {
      SolverOptions inner = opts.inner;
      inner.schedule_seed = Rng::stream(seed, Stream::schedule, n).next_u64();
      DualSolution sol = opts.inner_solver == InnerSolver::arcd ? arcd_solve(model, q, inner)
                                                                : rcd_solve(model, q, inner);
      q = std::move(sol.q);
      out.report = std::move(sol.report);
      break;
    }
    case InnerSolver::pgd: {
      DualSolution sol = pgd_solve(model, q, opts.inner.tol, opts.inner.max_iters);
      q = std::move(sol.q);
      out.report = std::move(sol.report);
      break;
    }
    case InnerSolver::oracle:
    case InnerSolver::reference: {
      const auto start = std::chrono::steady_clock::now();
      OracleResult r = opts.inner_solver == InnerSolver::oracle
                           ? active_set_solve(model, kOracleMaxUsers)
                           : reference_solve(model);
      out.report = oracle_report(model, r);
      q = std::move(r.q_star);
      out.report.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      break;
    }
  }
  // Scaling to the surrogate's feasible set is a no-op at an exact dual
  // optimum and repairs early-terminated inner solves otherwise.
  out.candidate = recover_beamformer(model, q);
  const double s = feasibility_scale(model, out.candidate);
  for (auto& x : out.candidate.v) x *= s;
  return out;
}

}  // namespace

const char* to_string(InnerSolver solver) {
  for (const auto& e : kNames) {
    if (e.solver == solver) return e.name;
  }
  return "?";
}

std::optional<InnerSolver> parse_inner_solver(std::string_view name) {
  for (const auto& e : kNames) {
    if (name == e.name) return e.solver;
  }
  return std::nullopt;
}

namespace {

double min_snr_ratio(const ProblemInstance& instance, const Beamformer& v) {
  return 1.0 + is_feasible(instance, v, 0.0).min_margin / instance.snr_target();
}

}  // namespace

MmReport mm_solve(const ProblemInstance& instance, const MmOptions& opts, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  Beamformer v0;
  try {
    v0 = feasible_init(instance, seed);
  } catch (const Error& e) {
    MmReport rep;
    rep.aborted = true;
    rep.diagnostic = e.what();
    rep.beamformer = Beamformer(instance.n_antennas());
    rep.feasibility = is_feasible(instance, rep.beamformer, kFeasibilitySlack);
    return rep;
  }
  MmReport rep = mm_solve_from(instance, std::move(v0), opts, seed);
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

MmReport mm_solve_from(const ProblemInstance& instance, Beamformer v0, const MmOptions& opts,
                       std::uint64_t seed) {
  require(opts.mm_max_iters >= 1, "mm_solve: mm_max_iters must be at least 1");
  require(opts.mm_rel_tol >= 0.0, "mm_solve: mm_rel_tol must be nonnegative");
  require(v0.size() == instance.n_antennas(), "mm_solve: v0 dimension mismatch");
  const auto start = std::chrono::steady_clock::now();

  MmReport rep;
  rep.beamformer = std::move(v0);
  double power = rep.beamformer.power();
  rep.power_trace.push_back(power);
  rep.snr_ratio_trace.push_back(min_snr_ratio(instance, rep.beamformer));
  RVector q(instance.n_users(), 0.0);

  for (std::size_t n = 0; n < opts.mm_max_iters; ++n) {
    Step step;
    try {
      const SurrogateModel model =
          SurrogateModel::build(instance, rep.beamformer, opts.gram_mode, opts.gram_budget);
      step = inner_step(model, rep.beamformer, q, opts, seed, n);
    } catch (const Error& e) {
      rep.aborted = true;
      rep.diagnostic = "MM iteration " + std::to_string(n) + ": " + e.what();
      break;
    }
    rep.total_inner_iterations += step.report.iterations;
    rep.inner_converged = rep.inner_converged && step.report.converged;
    rep.inner_reports.push_back(std::move(step.report));

    // The anchor is feasible for its own surrogate, so the surrogate optimum
    // never has more power; a candidate that does comes from an inexact
    // inner solve. It is discarded and the next iteration re-solves the same
    // surrogate from the improved q, so a rejection is not read as MM
    // convergence.
    rep.mm_iterations = n + 1;
    if (step.candidate.power() > power) {
      ++rep.rejected_steps;
      rep.power_trace.push_back(power);
      rep.snr_ratio_trace.push_back(rep.snr_ratio_trace.back());
      continue;
    }
    rep.beamformer = std::move(step.candidate);
    const double prev = power;
    power = rep.beamformer.power();
    rep.power_trace.push_back(power);
    rep.snr_ratio_trace.push_back(min_snr_ratio(instance, rep.beamformer));
    if (std::abs(power - prev) <= opts.mm_rel_tol * prev) break;
  }

  rep.feasibility = is_feasible(instance, rep.beamformer, kFeasibilitySlack);
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace mcbf
