#include "mcbf/dual_solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "mcbf/kernels.hpp"

namespace mcbf {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double relative_drift(std::span<const double> cached, std::span<const double> fresh) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < fresh.size(); ++i) {
    diff = std::max(diff, std::abs(cached[i] - fresh[i]));
    scale = std::max(scale, std::abs(fresh[i]));
  }
  return diff / (1.0 + scale);
}

void check_start(const SurrogateModel& model, std::span<const double> q0, const char* who) {
  require(q0.size() == model.n_users(), std::string(who) + ": q0 must have length K");
  require(std::all_of(q0.begin(), q0.end(), [](double x) { return x >= 0.0; }),
          std::string(who) + ": q0 must be nonnegative");
}

// |Y_m - Y_{m-1}| < tol, for full-gradient methods.
bool step_converged(const RVector& trace, double tol) {
  return trace.size() >= 2 && std::abs(trace.back() - trace[trace.size() - 2]) < tol;
}

}  // namespace

std::size_t default_batch_size(std::size_t users, double fraction) {
  const auto y = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(users)));
  return std::clamp<std::size_t>(y, 1, std::max<std::size_t>(users, 1));
}

CoverageEpoch::CoverageEpoch(std::size_t users) : seen_(users, 0), remaining_(users) {}

bool CoverageEpoch::observe(std::span<const std::size_t> coords, double objective) {
  if (!started_) {
    start_objective_ = objective;
    started_ = true;
  }
  for (const std::size_t i : coords) {
    if (seen_[i] != epoch_ + 1) {
      seen_[i] = epoch_ + 1;
      --remaining_;
    }
  }
  return remaining_ == 0;
}

bool CoverageEpoch::close(double objective, double tol) {
  const bool small = std::abs(objective - start_objective_) < tol;
  ++epoch_;
  remaining_ = seen_.size();
  start_objective_ = objective;
  return small;
}

// --- sampling ---------------------------------------------------------------

CoordinateSampler::CoordinateSampler(std::size_t users, std::size_t batch, Rng rng)
    : rng_(std::move(rng)), perm_(users), batch_(batch) {
  require(users >= 1, "sample_coordinate_set: K must be positive");
  require(batch >= 1 && batch <= users, "sample_coordinate_set: need 1 <= Y <= K");
  std::iota(perm_.begin(), perm_.end(), std::size_t{0});
}

std::span<const std::size_t> CoordinateSampler::draw() {
  const std::size_t users = perm_.size();
  for (std::size_t i = 0; i < batch_; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng_.below(users - i));
    std::swap(perm_[i], perm_[j]);
  }
  return {perm_.data(), batch_};
}

// --- state ------------------------------------------------------------------

DualState::DualState(const SurrogateModel& model, RVector q0, double c0)
    : model_(&model), q_(std::move(q0)), z_(model.n_users(), 0.0), c_(c0) {
  check_start(model, q_, "DualState");
  if (model.has_gram()) {
    aq_ = gram_apply(model, q_);
    az_.assign(model.n_users(), 0.0);
  } else {
    fq_ = recover_beamformer(model, q_).v;
    fz_.assign(model.n_antennas(), Complex{});
    fy_.assign(model.n_antennas(), Complex{});
  }
}

double DualState::objective() const {
  const double linear = kernels::dot(model_->d(), q_);
  if (model_->has_gram()) return 0.5 * kernels::dot(q_, aq_) - linear;
  return kernels::squared_norm(std::span<const Complex>(fq_)) - linear;
}

double DualState::gradient(std::size_t i) const {
  if (model_->has_gram()) return aq_[i] - model_->d()[i];
  return 2.0 * kernels::cdotc(model_->f_col(i), fq_).real() - model_->d()[i];
}

void DualState::snapshot_extrapolation() {
  c2_snapshot_ = c_ * c_;
  if (model_->has_gram()) return;
  std::copy(fq_.begin(), fq_.end(), fy_.begin());
  kernels::axpy(c2_snapshot_, std::span<const Complex>(fz_), std::span<Complex>(fy_));
}

double DualState::extrapolated_gradient(std::size_t i) const {
  if (model_->has_gram()) return aq_[i] + c2_snapshot_ * az_[i] - model_->d()[i];
  return 2.0 * kernels::cdotc(model_->f_col(i), fy_).real() - model_->d()[i];
}

void DualState::apply(std::span<const std::size_t> idx, std::span<const double> dq,
                      std::span<const double> dz, unsigned threads) {
  const bool gram = model_->has_gram();
  std::span<double> qcache = gram ? std::span<double>(aq_) : as_reals(std::span<Complex>(fq_));
  std::span<double> zcache = gram ? std::span<double>(az_) : as_reals(std::span<Complex>(fz_));
  const std::size_t rows = qcache.size();
  const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(threads, rows / 64));

  auto column = [&](std::size_t i) -> std::span<const double> {
    return gram ? model_->gram_col(i) : as_reals(model_->f_col(i));
  };

#pragma omp parallel for num_threads(static_cast<int>(chunks)) schedule(static) if (chunks > 1)
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t lo = rows * c / chunks;
    const std::size_t hi = rows * (c + 1) / chunks;
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const auto col = column(idx[j]).subspan(lo, hi - lo);
      if (dq[j] != 0.0) kernels::axpy(dq[j], col, qcache.subspan(lo, hi - lo));
      if (dz[j] != 0.0) kernels::axpy(dz[j], col, zcache.subspan(lo, hi - lo));
    }
  }
  for (std::size_t j = 0; j < idx.size(); ++j) {
    q_[idx[j]] += dq[j];
    z_[idx[j]] += dz[j];
  }
}

void DualState::apply_one(std::size_t i, double dq, double dz) {
  apply(std::span<const std::size_t>(&i, 1), std::span<const double>(&dq, 1),
        std::span<const double>(&dz, 1));
}

void DualState::mark_skipped(std::size_t i) {
  if (std::find(skipped_.begin(), skipped_.end(), i) == skipped_.end()) skipped_.push_back(i);
}

double DualState::refresh() {
  double drift = 0.0;
  if (model_->has_gram()) {
    RVector aq = gram_apply(*model_, q_);
    RVector az = gram_apply(*model_, z_);
    drift = std::max(relative_drift(aq_, aq), relative_drift(az_, az));
    aq_ = std::move(aq);
    az_ = std::move(az);
  } else {
    CVector fq = recover_beamformer(*model_, q_).v;
    CVector fz = recover_beamformer(*model_, z_).v;
    drift = std::max(relative_drift(as_reals(std::span<const Complex>(fq_)),
                                    as_reals(std::span<const Complex>(fq))),
                     relative_drift(as_reals(std::span<const Complex>(fz_)),
                                    as_reals(std::span<const Complex>(fz))));
    fq_ = std::move(fq);
    fz_ = std::move(fz);
  }
  max_drift_ = std::max(max_drift_, drift);
  return drift;
}

std::span<const double> DualState::cached_q_product() const {
  return model_->has_gram() ? std::span<const double>(aq_)
                            : as_reals(std::span<const Complex>(fq_));
}

std::span<const double> DualState::cached_z_product() const {
  return model_->has_gram() ? std::span<const double>(az_)
                            : as_reals(std::span<const Complex>(fz_));
}

// --- steps ------------------------------------------------------------------

bool rcd_step(DualState& state, std::size_t l) {
  const SurrogateModel& model = state.model();
  require(l < model.n_users(), "rcd_step: coordinate out of range");
  state.count_iteration();
  const double lip = model.lipschitz()[l];
  if (lip <= 0.0) {
    state.mark_skipped(l);
    return false;
  }
  const double ql = state.q()[l];
  const double next = std::max(0.0, ql - state.gradient(l) / lip);
  if (next != ql) state.apply_one(l, next - ql, 0.0);
  return true;
}

double update_momentum_scalar(double c) {
  require(c > 0.0 && c <= 1.0, "update_momentum_scalar: c must lie in (0, 1]");
  // Same root as (sqrt(c^4 + 4c^2) - c^2) / 2, without the cancellation.
  return 0.5 * c * (std::sqrt(c * c + 4.0) - c);
}

std::span<const std::size_t> arcd_iteration(DualState& state, CoordinateSampler& sampler,
                                            unsigned threads) {
  const SurrogateModel& model = state.model();
  require(sampler.users() == model.n_users(), "arcd_iteration: sampler/model size mismatch");
  const auto batch = sampler.draw();
  const double users = static_cast<double>(model.n_users());
  const double y = static_cast<double>(sampler.batch());
  const double c = state.c();
  const double step_scale = 1.0 / (users * c);
  const double z_coeff = -(1.0 - users * c / y) / (c * c);

  state.snapshot_extrapolation();
  RVector dq(batch.size(), 0.0), dz(batch.size(), 0.0);
  const auto lip = model.lipschitz();
  const auto q = state.q();

#pragma omp parallel for num_threads(static_cast<int>(std::max(1u, threads))) schedule(static) if (threads > 1)
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const std::size_t i = batch[j];
    if (lip[i] <= 0.0) continue;
    const double next =
        std::max(0.0, q[i] - step_scale / lip[i] * state.extrapolated_gradient(i));
    dq[j] = next - q[i];
    dz[j] = z_coeff * dq[j];
  }
  for (std::size_t j = 0; j < batch.size(); ++j) {
    if (lip[batch[j]] <= 0.0) state.mark_skipped(batch[j]);
  }
  state.apply(batch, dq, dz, threads);
  state.set_momentum(update_momentum_scalar(c));
  state.count_iteration();
  return batch;
}

// --- solvers ----------------------------------------------------------------

DualSolution rcd_solve(const SurrogateModel& model, std::span<const double> q0,
                       const SolverOptions& opts) {
  check_start(model, q0, "rcd_solve");
  require(opts.tol > 0.0 && opts.max_iters >= 1, "rcd_solve: need tol > 0, max_iters >= 1");
  const auto start = Clock::now();
  const std::size_t users = model.n_users();
  const std::size_t refresh = std::max<std::size_t>(1, opts.cache_refresh_period);

  DualState state(model, RVector(q0.begin(), q0.end()));
  Rng rng = Rng::stream(opts.schedule_seed, Stream::schedule);
  CoverageEpoch epoch(users);
  DualSolution out;
  SolveReport& rep = out.report;
  rep.objective_trace.push_back(state.objective());

  while (rep.iterations < opts.max_iters) {
    const auto l = static_cast<std::size_t>(rng.below(users));
    const bool covered = epoch.observe(std::span<const std::size_t>(&l, 1),
                                       rep.objective_trace.back());
    rcd_step(state, l);
    ++rep.iterations;
    if (rep.iterations % refresh == 0) state.refresh();
    const double obj = state.objective();
    rep.objective_trace.push_back(obj);
    if (covered && epoch.close(obj, opts.tol)) {
      rep.converged = true;
      break;
    }
  }
  // Exact coordinate minimization never increases Y, so the last iterate is
  // also the best one.
  state.refresh();
  out.q.assign(state.q().begin(), state.q().end());
  rep.final_objective = state.objective();
  rep.skipped = state.skipped();
  rep.max_cache_drift = state.max_cache_drift();
  rep.wall_seconds = seconds_since(start);
  return out;
}

DualSolution arcd_solve(const SurrogateModel& model, std::span<const double> q0,
                        const SolverOptions& opts) {
  check_start(model, q0, "arcd_solve");
  require(opts.tol > 0.0 && opts.max_iters >= 1, "arcd_solve: need tol > 0, max_iters >= 1");
  const auto start = Clock::now();
  const std::size_t users = model.n_users();
  const std::size_t batch = opts.batch_size == 0 ? default_batch_size(users) : opts.batch_size;
  require(batch <= users, "arcd_solve: batch size exceeds K");
  const std::size_t refresh = std::max<std::size_t>(1, opts.cache_refresh_period);

  DualState state(model, RVector(q0.begin(), q0.end()),
                  static_cast<double>(batch) / static_cast<double>(users));
  CoordinateSampler sampler(users, batch, Rng::stream(opts.schedule_seed, Stream::schedule));
  CoverageEpoch epoch(users);
  DualSolution out;
  SolveReport& rep = out.report;
  rep.objective_trace.push_back(state.objective());

  // The accelerated sequence is not monotone; keep the best iterate in case
  // the iteration cap is hit.
  RVector best_q(q0.begin(), q0.end());
  double best = rep.objective_trace.back();

  while (rep.iterations < opts.max_iters) {
    const double before = rep.objective_trace.back();
    const auto batch_drawn = arcd_iteration(state, sampler, opts.threads);
    const bool covered = epoch.observe(batch_drawn, before);
    ++rep.iterations;
    if (rep.iterations % refresh == 0) state.refresh();
    const double obj = state.objective();
    rep.objective_trace.push_back(obj);
    if (covered && epoch.close(obj, opts.tol)) {
      rep.converged = true;
      break;
    }
    if (obj < best) {
      best = obj;
      best_q.assign(state.q().begin(), state.q().end());
    }
  }

  if (rep.converged) {
    state.refresh();
    out.q.assign(state.q().begin(), state.q().end());
    rep.final_objective = state.objective();
  } else {
    out.q = std::move(best_q);
    rep.final_objective = dual_objective(model, out.q);
  }
  rep.skipped = state.skipped();
  rep.max_cache_drift = state.max_cache_drift();
  rep.wall_seconds = seconds_since(start);
  return out;
}

double estimate_max_eigenvalue(const SurrogateModel& model) {
  const std::size_t users = model.n_users();
  RVector x(users, 1.0 / std::sqrt(static_cast<double>(users)));
  double lambda = 0.0;
  for (int it = 0; it < 64; ++it) {
    RVector y = gram_apply(model, x);
    const double next = kernels::dot(x, y);
    const double norm = std::sqrt(kernels::squared_norm(std::span<const double>(y)));
    if (norm == 0.0) return 0.0;
    const bool settled = it > 0 && std::abs(next - lambda) < 1e-10 * std::abs(next);
    lambda = next;
    if (settled) break;
    for (std::size_t i = 0; i < users; ++i) x[i] = y[i] / norm;
  }
  return lambda;
}

DualSolution pgd_solve(const SurrogateModel& model, std::span<const double> q0, double tol,
                       std::size_t max_iters, double kkt_tol) {
  check_start(model, q0, "pgd_solve");
  require(tol > 0.0 && max_iters >= 1, "pgd_solve: need tol > 0, max_iters >= 1");
  const auto start = Clock::now();
  const double lip = 1.01 * estimate_max_eigenvalue(model);
  if (!(lip > 0.0)) fail(ErrorCode::numerical_degeneracy, "pgd_solve: A is zero");

  const std::size_t users = model.n_users();
  const auto d = model.d();
  DualSolution out;
  SolveReport& rep = out.report;
  RVector q(q0.begin(), q0.end());
  RVector aq = gram_apply(model, q);
  auto objective = [&] { return 0.5 * kernels::dot(q, aq) - kernels::dot(d, q); };
  rep.objective_trace.push_back(objective());

  while (rep.iterations < max_iters) {
    for (std::size_t i = 0; i < users; ++i) {
      q[i] = std::max(0.0, q[i] - (aq[i] - d[i]) / lip);
    }
    aq = gram_apply(model, q);
    ++rep.iterations;
    rep.objective_trace.push_back(objective());
    if (!step_converged(rep.objective_trace, tol)) continue;
    if (kkt_tol > 0.0) {
      double residual = 0.0;
      for (std::size_t i = 0; i < users; ++i) {
        residual = std::max(residual, std::abs(std::min(q[i], aq[i] - d[i])));
      }
      if (residual > kkt_tol) continue;
    }
    rep.converged = true;
    break;
  }
  rep.final_objective = rep.objective_trace.back();
  out.q = std::move(q);
  rep.wall_seconds = seconds_since(start);
  return out;
}

}  // namespace mcbf
