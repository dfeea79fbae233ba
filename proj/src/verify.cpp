#include "mcbf/verify.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "mcbf/admm.hpp"
#include "mcbf/driver.hpp"
#include "mcbf/kernels.hpp"
#include "mcbf/oracle.hpp"
#include "mcbf/rng.hpp"

namespace mcbf {

namespace {

std::string sci(double x) {
  std::ostringstream s;
  s.precision(2);
  s << std::scientific << x;
  return s.str();
}

RVector random_q(Rng& rng, std::size_t k) {
  RVector q(k);
  for (auto& x : q) x = rng.uniform();
  return q;
}

CheckResult check_kernels() {
  Rng rng(7);
  double worst = 0.0;
  std::string tested;
  for (kernels::Backend b : {kernels::Backend::scalar, kernels::Backend::avx2}) {
    if (!kernels::available(b)) continue;
    tested += std::string(tested.empty() ? "" : ",") + kernels::to_string(b);
    const auto& ref = kernels::table(kernels::Backend::scalar);
    const auto& t = kernels::table(b);
    for (std::size_t n : {0u, 1u, 3u, 8u, 17u, 64u, 301u}) {
      RVector x(2 * n), y(2 * n);
      for (auto& v : x) v = rng.normal();
      for (auto& v : y) v = rng.normal();
      double scale = 1.0;
      for (std::size_t i = 0; i < 2 * n; ++i) scale += std::abs(x[i] * y[i]);
      worst = std::max(worst, std::abs(t.dot(x.data(), y.data(), 2 * n) -
                                       ref.dot(x.data(), y.data(), 2 * n)) / scale);
      const auto* cx = reinterpret_cast<const Complex*>(x.data());
      const auto* cy = reinterpret_cast<const Complex*>(y.data());
      worst = std::max(worst, std::abs(t.cdotc(cx, cy, n) - ref.cdotc(cx, cy, n)) / scale);
      RVector a = y, b2 = y;
      t.axpy(0.37, x.data(), a.data(), 2 * n);
      ref.axpy(0.37, x.data(), b2.data(), 2 * n);
      for (std::size_t i = 0; i < 2 * n; ++i) {
        worst = std::max(worst, std::abs(a[i] - b2[i]) / (1.0 + std::abs(b2[i])));
      }
    }
  }
  return {"kernel equivalence", worst <= 1e-13, tested + " max rel diff " + sci(worst)};
}

CheckResult check_inner_oracle(unsigned threads) {
  double worst = 0.0, worst_gap = 0.0;
  for (std::uint64_t s = 0; s < 12; ++s) {
    const SurrogateModel model = random_surrogate(1000 + s);
    const OracleResult ref = active_set_solve(model);
    const RVector q0(model.n_users(), 0.0);
    SolverOptions o;
    o.tol = 1e-10;
    o.max_iters = 200'000;
    o.schedule_seed = s;
    o.threads = threads;
    o.batch_size = default_batch_size(model.n_users());
    const DualSolution a = arcd_solve(model, q0, o);
    const DualSolution r = rcd_solve(model, q0, o);
    const DualSolution p = pgd_solve(model, q0, o.tol, o.max_iters);
    for (const auto* sol : {&a, &r, &p}) {
      worst = std::max(worst, std::abs(sol->report.final_objective - ref.objective));
    }
    const GapCertificate gap = duality_gap(model, a.q);
    worst_gap = std::max(worst_gap, gap.gap / (1.0 + gap.scaled_power));
  }
  return {"inner solvers match active-set oracle", worst <= 1e-5 && worst_gap <= 1e-4,
          "max |Y - Y*| " + sci(worst) + ", max relative gap " + sci(worst_gap)};
}

CheckResult check_gradient() {
  Rng rng(11);
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const SurrogateModel model = random_surrogate(2000 + s);
    const RVector q = random_q(rng, model.n_users());
    const RVector g = dual_gradient(model, q);
    for (std::size_t l = 0; l < q.size(); ++l) {
      const double h = 1e-5 * (1.0 + std::abs(q[l]));
      RVector qp = q, qm = q;
      qp[l] += h;
      qm[l] -= h;
      const double fd = (dual_objective(model, qp) - dual_objective(model, qm)) / (2 * h);
      // relative to the size of the terms of A q - d (d > 0)
      worst = std::max(worst, std::abs(fd - g[l]) / (std::abs(g[l]) + model.d()[l]));
    }
  }
  return {"gradient vs central differences", worst <= 1e-6, "max rel error " + sci(worst)};
}

CheckResult check_smoothness() {
  Rng rng(13);
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const SurrogateModel model = random_surrogate(3000 + s);
    RVector q = random_q(rng, model.n_users());
    const std::size_t k = rng.below(model.n_users());
    const double t = rng.uniform() - 0.5;
    const double g0 = dual_gradient_coord(model, q, k);
    q[k] += t;
    const double g1 = dual_gradient_coord(model, q, k);
    const double lk = model.lipschitz()[k] * std::abs(t);
    worst = std::max(worst, std::abs(std::abs(g1 - g0) - lk) /
                                std::max(lk, 1e-9 * (std::abs(g0) + std::abs(g1))));
  }
  return {"coordinate smoothness equality", worst <= 1e-9, "max rel error " + sci(worst)};
}

CheckResult check_momentum() {
  double c = 0.2, worst = 0.0;
  for (int m = 0; m < 10'000; ++m) {
    const double next = update_momentum_scalar(c);
    worst = std::max(worst, std::abs(next * next - c * c * (1.0 - next)));
    c = next;
  }
  return {"momentum recursion", worst <= 1e-12, "max residual " + sci(worst)};
}

CheckResult check_single_user() {
  double worst = 0.0;
  for (std::size_t n : {1u, 8u, 64u}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      ChannelParams p;
      p.n_antennas = n;
      p.n_users = 1;
      const ProblemInstance inst = generate_instance(p, seed);
      const MmReport r = mm_solve(inst, MmOptions{}, seed);
      const double opt = inst.snr_target() / kernels::squared_norm(inst.channel(0));
      worst = std::max(worst, std::abs(r.beamformer.power() - opt) / opt);
    }
  }
  return {"single-user optimum", worst <= 1e-6, "max rel error " + sci(worst)};
}

CheckResult check_mm_invariants(unsigned threads) {
  double worst_rise = 0.0, worst_margin = HUGE_VAL;
  bool all_feasible = true;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ChannelParams p;
    p.n_antennas = 16;
    p.n_users = 8;
    const ProblemInstance inst = generate_instance(p, seed);
    MmOptions o;
    o.inner.threads = threads;
    o.inner.batch_size = default_batch_size(p.n_users);
    const MmReport r = mm_solve(inst, o, seed);
    for (std::size_t i = 1; i < r.power_trace.size(); ++i) {
      worst_rise = std::max(worst_rise, r.power_trace[i] - r.power_trace[i - 1]);
    }
    all_feasible = all_feasible && r.converged();
    worst_margin = std::min(worst_margin, r.feasibility.min_margin / inst.snr_target());
  }
  return {"MM monotone descent and feasibility", all_feasible && worst_rise <= 1e-9,
          "max rise " + sci(worst_rise) + ", min relative margin " + sci(worst_margin)};
}

CheckResult check_admm() {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 4; ++s) {
    ChannelParams p;
    p.n_antennas = 16;
    p.n_users = 8;
    const ProblemInstance inst = generate_instance(p, 4000 + s);
    const Beamformer v0 = feasible_init(inst, s);
    const SurrogateModel model = SurrogateModel::build(inst, v0);
    const OracleResult ref = active_set_solve(model);
    const AdmmResult r = admm_solve(model, v0);
    worst = std::max(worst, std::abs(r.v.power() + ref.objective) / -ref.objective);
  }
  return {"ADMM matches oracle surrogate optimum", worst <= 1e-3, "max rel error " + sci(worst)};
}

}  // namespace

SurrogateModel random_surrogate(std::uint64_t seed, std::size_t max_n, std::size_t max_k) {
  require(max_n >= 1 && max_k >= 1, "random_surrogate: sizes must be positive");
  Rng rng(splitmix64(seed));
  ChannelParams p;
  p.n_antennas = 1 + rng.below(max_n);
  p.n_users = 1 + rng.below(max_k);
  const ProblemInstance inst = generate_instance(p, seed);
  return SurrogateModel::build(inst, feasible_init(inst, seed));
}

std::vector<CheckResult> run_verification(unsigned threads) {
  std::vector<CheckResult> out;
  auto guarded = [&](const char* name, auto&& check) {
    try {
      out.push_back(check());
    } catch (const std::exception& e) {
      out.push_back({name, false, std::string("threw: ") + e.what()});
    }
  };
  guarded("kernel equivalence", check_kernels);
  guarded("inner solvers match active-set oracle", [&] { return check_inner_oracle(threads); });
  guarded("gradient vs central differences", check_gradient);
  guarded("coordinate smoothness equality", check_smoothness);
  guarded("momentum recursion", check_momentum);
  guarded("single-user optimum", check_single_user);
  guarded("MM monotone descent and feasibility", [&] { return check_mm_invariants(threads); });
  guarded("ADMM matches oracle surrogate optimum", check_admm);
  return out;
}

bool print_results(std::ostream& out, const std::vector<CheckResult>& results) {
  bool ok = true;
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    ok = ok && r.passed;
  }
  return ok;
}

}  // namespace mcbf
