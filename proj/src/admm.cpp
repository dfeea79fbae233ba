#include "mcbf/admm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "mcbf/kernels.hpp"

namespace mcbf {

namespace {

// x + alpha c written into out, alpha = max(0, t - 2 Re(c^H x)) / (2 ||c||^2).
void project_into(std::span<const Complex> x, std::span<const Complex> c, double c_norm2,
                  double t, std::span<Complex> out) {
  const double lhs = 2.0 * kernels::cdotc(c, x).real();
  std::copy(x.begin(), x.end(), out.begin());
  const double shortfall = t - lhs;
  if (shortfall > 0.0) kernels::axpy(shortfall / (2.0 * c_norm2), c, out);
}

double max_primal_residual(const CVector& v, const CMatrix& w) {
  double worst = 0.0;
  for (std::size_t k = 0; k < w.cols(); ++k) {
    const auto wk = w.col(k);
    double r = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) r += std::norm(v[i] - wk[i]);
    worst = std::max(worst, std::sqrt(r));
  }
  return worst;
}

}  // namespace

CVector halfspace_project(std::span<const Complex> x, std::span<const Complex> c, double t) {
  require(x.size() == c.size(), "halfspace_project: dimension mismatch");
  const double c_norm2 = kernels::squared_norm(c);
  if (!(c_norm2 > 0.0)) fail(ErrorCode::invalid_argument, "halfspace_project: c must be nonzero");
  CVector out(x.size());
  project_into(x, c, c_norm2, t, out);
  return out;
}

double default_admm_penalty(std::size_t n_antennas) {
  require(n_antennas > 0, "default_admm_penalty: N must be positive");
  return 2.0 / std::sqrt(static_cast<double>(n_antennas));
}

AdmmResult admm_solve(const SurrogateModel& model, const Beamformer& v_init,
                      const AdmmOptions& opts) {
  const std::size_t n = model.n_antennas();
  const std::size_t users = model.n_users();
  require(v_init.size() == n, "admm_solve: v_init must have length N");
  require(opts.max_iters >= 1, "admm_solve: max_iters must be positive");
  require(opts.penalty >= 0.0 && std::isfinite(opts.penalty), "admm_solve: bad penalty");
  const double a = opts.penalty > 0.0 ? opts.penalty : default_admm_penalty(n);
  const auto start = std::chrono::steady_clock::now();

  RVector norms(users);
  for (std::size_t k = 0; k < users; ++k) {
    norms[k] = kernels::squared_norm(model.f_col(k));
    if (!(norms[k] > 0.0)) fail(ErrorCode::invalid_argument, "admm_solve: zero constraint row");
  }

  CVector v = v_init.v;
  CMatrix w(n, users), eta(n, users);
  for (std::size_t k = 0; k < users; ++k) std::copy(v.begin(), v.end(), w.col(k).begin());

  AdmmResult out;
  SolveReport& report = out.report;
  double power = kernels::squared_norm(std::span<const Complex>(v));
  report.objective_trace.push_back(power);

  const int threads = static_cast<int>(std::max(1u, opts.threads));
  const double denom = 2.0 + a * static_cast<double>(users);
  const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(threads, n / 64));

  for (std::size_t it = 1; it <= opts.max_iters; ++it) {
#pragma omp parallel num_threads(threads) if (threads > 1)
    {
      CVector x(n);
#pragma omp for schedule(static)
      for (std::size_t k = 0; k < users; ++k) {
        const auto ek = eta.col(k);
        for (std::size_t i = 0; i < n; ++i) x[i] = v[i] + ek[i];
        project_into(x, model.f_col(k), norms[k], model.d()[k], w.col(k));
      }
    }

    // Row-chunked sum; every entry accumulates users in the same order.
#pragma omp parallel for num_threads(static_cast<int>(chunks)) schedule(static) if (chunks > 1)
    for (std::size_t c = 0; c < chunks; ++c) {
      const std::size_t lo = n * c / chunks;
      const std::size_t hi = n * (c + 1) / chunks;
      std::fill(v.begin() + lo, v.begin() + hi, Complex{});
      for (std::size_t k = 0; k < users; ++k) {
        const Complex* wk = w.col(k).data();
        const Complex* ek = eta.col(k).data();
        for (std::size_t i = lo; i < hi; ++i) v[i] += wk[i] - ek[i];
      }
      for (std::size_t i = lo; i < hi; ++i) v[i] = a * v[i] / denom;
    }

#pragma omp parallel for num_threads(threads) schedule(static) if (threads > 1)
    for (std::size_t k = 0; k < users; ++k) {
      auto ek = eta.col(k);
      const auto wk = w.col(k);
      for (std::size_t i = 0; i < n; ++i) ek[i] += v[i] - wk[i];
    }

    const double next = kernels::squared_norm(std::span<const Complex>(v));
    report.objective_trace.push_back(next);
    report.iterations = it;
    if (it == 100) out.primal_residual_at_100 = max_primal_residual(v, w);
    const bool done = std::abs(next - power) < opts.tol;
    power = next;
    if (done) {
      report.converged = true;
      break;
    }
  }
  out.primal_residual = max_primal_residual(v, w);
  if (report.iterations < 100) out.primal_residual_at_100 = out.primal_residual;

  out.v = Beamformer(std::move(v));
  out.scale = feasibility_scale(model, out.v);
  for (auto& x : out.v.v) x *= out.scale;
  report.final_objective = out.v.power();
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace mcbf
