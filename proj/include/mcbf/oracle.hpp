#pragma once

#include <cstddef>
#include <vector>

#include "mcbf/surrogate.hpp"

namespace mcbf {

struct OracleResult {
  RVector q_star;
  double objective = 0.0;              // Y(q*)
  std::vector<std::size_t> active_set;  // support of q*, ascending
  double kkt_residual = 0.0;
  bool converged = true;
  std::size_t iterations = 0;  // reference_solve only
};

/// Natural KKT residual of min Y(q) s.t. q >= 0: max_j |min(q_j, [grad Y(q)]_j)|.
/// Zero exactly at a KKT point.
double kkt_residual(const SurrogateModel& model, std::span<const double> q);

/// Raised when no support set passes the KKT test; carries the candidate with
/// the smallest violation.
class OracleDegeneracy : public Error {
 public:
  OracleDegeneracy(const std::string& what, OracleResult best)
      : Error(ErrorCode::numerical_degeneracy, what), best_(std::move(best)) {}
  const OracleResult& best() const noexcept { return best_; }

 private:
  OracleResult best_;
};

/// Exhaustive enumeration of the 2^K support sets. For each S the
/// stationarity system A_SS q_S = d_S is solved (pseudo-inverse, cut-off
/// 1e-12 * max diag A_SS) and accepted iff q_S >= 0 and [A q - d]_j >= -1e-9
/// off the support. Returns the accepted candidate with the smallest Y; ties
/// within 1e-12 go to the lexicographically smallest support.
OracleResult active_set_solve(const SurrogateModel& model, std::size_t k_limit = 14);

/// Projected gradient run to a tight objective-change tolerance, continued
/// until the KKT residual is at most 1e-8 (or max_iters is exhausted).
OracleResult reference_solve(const SurrogateModel& model, double tol = 1e-10,
                             std::size_t max_iters = 1'000'000);

}  // namespace mcbf
