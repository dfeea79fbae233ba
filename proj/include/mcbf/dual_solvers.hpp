#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mcbf/rng.hpp"
#include "mcbf/surrogate.hpp"

namespace mcbf {

struct SolverOptions {
  std::size_t batch_size = 0;  // Y; 0 selects default_batch_size(K)
  double tol = 1e-7;           // objective-change threshold, see CoverageEpoch
  std::size_t max_iters = 50'000;
  std::uint64_t schedule_seed = 0;
  std::size_t cache_refresh_period = 1000;
  unsigned threads = 1;  // parallel coordinate updates inside one ARCD batch
};

/// max(1, floor(fraction * K)).
std::size_t default_batch_size(std::size_t users, double fraction = 0.2);

/// Stopping rule of the coordinate methods. An epoch is the shortest run of
/// iterations in which every coordinate has been sampled at least once; the
/// solver stops when the objective changed by less than tol across a whole
/// epoch. With Y = K every iteration is an epoch and this is the plain
/// |Y(q^[m]) - Y(q^[m-1])| < tol test.
class CoverageEpoch {
 public:
  explicit CoverageEpoch(std::size_t users);

  /// Record the coordinates of the next iteration; `objective` is the value
  /// before that iteration. Returns true once the epoch is complete.
  bool observe(std::span<const std::size_t> coords, double objective);
  /// Finish a complete epoch at `objective`; true if it changed less than tol.
  bool close(double objective, double tol);

 private:
  std::vector<std::size_t> seen_;  // epoch number + 1 when last seen
  std::size_t epoch_ = 0;
  std::size_t remaining_;
  double start_objective_ = 0.0;
  bool started_ = false;
};

struct SolveReport {
  RVector objective_trace;  // Y(q^[0]), Y(q^[1]), ...
  std::size_t iterations = 0;
  bool converged = false;
  double final_objective = 0.0;
  double wall_seconds = 0.0;
  std::vector<std::size_t> skipped;  // zero-curvature coordinates left frozen
  double max_cache_drift = 0.0;      // worst relative drift seen at a refresh
};

struct DualSolution {
  RVector q;
  SolveReport report;
};

/// Uniformly random Y-subsets of {0, ..., K-1} by partial Fisher-Yates over a
/// persistent permutation; every index is included with probability Y/K.
class CoordinateSampler {
 public:
  CoordinateSampler(std::size_t users, std::size_t batch, Rng rng);

  std::span<const std::size_t> draw();

  std::size_t users() const noexcept { return perm_.size(); }
  std::size_t batch() const noexcept { return batch_; }

 private:
  Rng rng_;
  std::vector<std::size_t> perm_;
  std::size_t batch_;
};

/// Iterate, momentum pair and the cached products the coordinate methods need:
/// A q and A z with a Gram matrix, F q and F z otherwise. Holds a reference
/// to the model, which must outlive the state.
class DualState {
 public:
  DualState(const SurrogateModel& model, RVector q0, double c0 = 1.0);

  const SurrogateModel& model() const noexcept { return *model_; }
  std::span<const double> q() const noexcept { return q_; }
  std::span<const double> z() const noexcept { return z_; }
  double c() const noexcept { return c_; }
  std::size_t iteration() const noexcept { return iteration_; }

  /// Y(q) from the caches, O(K) or O(N).
  double objective() const;
  /// [grad Y(q)]_i from the caches.
  double gradient(std::size_t i) const;

  /// Freeze y = q + c^2 z for a batch of extrapolated_gradient() calls.
  void snapshot_extrapolation();
  /// [grad Y(y)]_i at the last snapshot. Read-only, safe to call concurrently.
  double extrapolated_gradient(std::size_t i) const;

  /// q_idx[j] += dq[j], z_idx[j] += dz[j], caches updated in the given order.
  /// Cache rows are split across `threads`; each row still sees the updates in
  /// the same order, so results do not depend on the thread count.
  void apply(std::span<const std::size_t> idx, std::span<const double> dq,
             std::span<const double> dz, unsigned threads = 1);
  void apply_one(std::size_t i, double dq, double dz);

  void set_momentum(double c) { c_ = c; }
  void count_iteration() { ++iteration_; }
  void mark_skipped(std::size_t i);
  const std::vector<std::size_t>& skipped() const noexcept { return skipped_; }

  /// Rebuild caches from scratch; returns the relative drift of the old caches,
  /// max_i |cached_i - fresh_i| / (1 + max_i |fresh_i|).
  double refresh();
  double max_cache_drift() const noexcept { return max_drift_; }

  /// For tests: the cached A q (Gram mode) or F q viewed as reals.
  std::span<const double> cached_q_product() const;
  std::span<const double> cached_z_product() const;

 private:
  const SurrogateModel* model_;
  RVector q_, z_;
  double c_;
  std::size_t iteration_ = 0;
  std::vector<std::size_t> skipped_;
  double max_drift_ = 0.0;
  // Gram mode
  RVector aq_, az_;
  // matrix-free mode
  CVector fq_, fz_, fy_;
  double c2_snapshot_ = 0.0;
};

/// One projected coordinate step q_l <- max(0, q_l - [grad Y(q)]_l / L_l).
/// Returns false (and marks the coordinate) when L_l = 0.
bool rcd_step(DualState& state, std::size_t l);

/// c' = (sqrt(c^4 + 4 c^2) - c^2) / 2, the positive root of c'^2 = c^2 (1 - c').
double update_momentum_scalar(double c);

/// One accelerated batch iteration: every coordinate of a fresh Y-subset is
/// updated from the same snapshot of y = q + c^2 z with step 1/(K c L_i),
/// then z follows with coefficient -(1 - K c / Y) / c^2 and c advances.
/// Returns the coordinates that were drawn (valid until the next draw).
std::span<const std::size_t> arcd_iteration(DualState& state, CoordinateSampler& sampler,
                                            unsigned threads = 1);

DualSolution rcd_solve(const SurrogateModel& model, std::span<const double> q0,
                       const SolverOptions& opts);
DualSolution arcd_solve(const SurrogateModel& model, std::span<const double> q0,
                        const SolverOptions& opts);

/// Largest eigenvalue of A by power iteration (at most 64 steps, relative
/// change below 1e-10), without inflation.
double estimate_max_eigenvalue(const SurrogateModel& model);

/// Full projected gradient with step 1 / (1.01 * lambda_max(A)). Stops on
/// |Y(q^[m]) - Y(q^[m-1])| < tol; a positive kkt_tol additionally requires
/// the natural KKT residual max_j |min(q_j, [grad Y]_j)| to be at most kkt_tol.
DualSolution pgd_solve(const SurrogateModel& model, std::span<const double> q0, double tol,
                       std::size_t max_iters, double kkt_tol = 0.0);

}  // namespace mcbf
