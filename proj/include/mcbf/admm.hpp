#pragma once

#include <cstddef>

#include "mcbf/dual_solvers.hpp"
#include "mcbf/surrogate.hpp"

namespace mcbf {

/// Euclidean projection of x onto {w : 2 Re(c^H w) >= t}, with C^N treated as
/// R^{2N} under the inner product Re(a^H b).
CVector halfspace_project(std::span<const Complex> x, std::span<const Complex> c, double t);

/// 2 / sqrt(N).
double default_admm_penalty(std::size_t n_antennas);

struct AdmmOptions {
  double tol = 1e-5;  // on |‖v‖² change| between iterations
  std::size_t max_iters = 2000;
  double penalty = 0.0;  // a; 0 selects default_admm_penalty(N)
  unsigned threads = 1;  // parallel per-user projections
};

struct AdmmResult {
  Beamformer v;  // scaled to surrogate feasibility
  double scale = 1.0;
  SolveReport report;  // objective_trace holds ‖v‖² per iteration
  double primal_residual_at_100 = 0.0;  // max_k ‖v - w_k‖ at iteration 100
  double primal_residual = 0.0;         // same, at the last iteration
};

/// Consensus ADMM on the surrogate with per-user copies w_k = v and scaled
/// duals eta_k, in the order
///   w_k <- project(v + eta_k onto 2 Re(f_k^H w) >= d_k)
///   v   <- a sum_k (w_k - eta_k) / (2 + a K)
///   eta_k <- eta_k + v - w_k
/// starting from v = w_k = v_init, eta = 0.
AdmmResult admm_solve(const SurrogateModel& model, const Beamformer& v_init,
                      const AdmmOptions& opts = {});

}  // namespace mcbf
