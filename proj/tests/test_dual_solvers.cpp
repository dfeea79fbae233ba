#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mcbf/dual_solvers.hpp"
#include "mcbf/oracle.hpp"
#include "support.hpp"

namespace mcbf {
namespace {

using test::instance_surrogate;
using test::scalar_model;

SolverOptions opts(double tol, std::uint64_t seed = 0, std::size_t batch = 0) {
  SolverOptions o;
  o.tol = tol;
  o.schedule_seed = seed;
  o.batch_size = batch;
  return o;
}

TEST(BatchSize, DefaultIsFifthOfUsers) {
  EXPECT_EQ(default_batch_size(50), 10u);
  EXPECT_EQ(default_batch_size(4), 1u);
  EXPECT_EQ(default_batch_size(1), 1u);
  EXPECT_EQ(default_batch_size(12), 2u);
  EXPECT_EQ(default_batch_size(10, 1.0), 10u);
}

TEST(Sampler, FullBatchIsEverything) {
  CoordinateSampler s(6, 6, Rng(1));
  for (int t = 0; t < 5; ++t) {
    auto b = s.draw();
    std::vector<std::size_t> sorted(b.begin(), b.end());
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(sorted, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
  }
}

TEST(Sampler, RejectsOversizedBatch) {
  EXPECT_THROW(CoordinateSampler(3, 4, Rng(1)), Error);
  EXPECT_THROW(CoordinateSampler(3, 0, Rng(1)), Error);
}

void expect_uniform_inclusion(std::size_t k, std::size_t y) {
  CoordinateSampler s(k, y, Rng(99));
  std::vector<int> counts(k, 0);
  const int draws = 100000;
  for (int t = 0; t < draws; ++t) {
    auto b = s.draw();
    ASSERT_EQ(b.size(), y);
    std::vector<std::size_t> sorted(b.begin(), b.end());
    std::sort(sorted.begin(), sorted.end());
    ASSERT_EQ(std::adjacent_find(sorted.begin(), sorted.end()), sorted.end());
    for (auto i : b) ++counts[i];
  }
  // Pearson chi-square against uniform inclusion, df = k - 1, 0.999 quantile.
  // Sampling without replacement only shrinks the variance, so this is conservative.
  const double expected = static_cast<double>(draws) * y / k;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  const double q999 = k == 5 ? 18.467 : k == 10 ? 27.877 : 0.0;
  ASSERT_GT(q999, 0.0) << "no table entry for k = " << k;
  EXPECT_LT(chi2, q999);
}

TEST(Sampler, SingleCoordinateInclusionUniform) { expect_uniform_inclusion(5, 1); }
TEST(Sampler, PairInclusionUniform) { expect_uniform_inclusion(10, 2); }

TEST(Sampler, SameSeedSameSchedule) {
  CoordinateSampler a(20, 4, Rng(5)), b(20, 4, Rng(5));
  for (int t = 0; t < 50; ++t) {
    auto x = a.draw();
    auto y = b.draw();
    ASSERT_TRUE(std::equal(x.begin(), x.end(), y.begin(), y.end()));
  }
}

TEST(RcdStep, ScalarModelExactInOneStep) {
  const auto m = scalar_model();
  DualState st(m, RVector{0.0});
  EXPECT_TRUE(rcd_step(st, 0));
  EXPECT_DOUBLE_EQ(st.q()[0], 1.0);
  // stationary coordinate stays put
  EXPECT_TRUE(rcd_step(st, 0));
  EXPECT_DOUBLE_EQ(st.q()[0], 1.0);
}

TEST(RcdStep, ClampsAtZero) {
  CMatrix f(1, 1);
  f(0, 0) = 1.0;
  const SurrogateModel m(std::move(f), RVector{-3.0}, GramMode::precompute);
  DualState st(m, RVector{0.5});
  rcd_step(st, 0);
  EXPECT_EQ(st.q()[0], 0.0);
}

TEST(RcdStep, ZeroCurvatureCoordinateSkipped) {
  CMatrix f(2, 2);
  f(0, 0) = 1.0;  // column 1 is zero
  const SurrogateModel m(std::move(f), RVector{2.0, 1.0}, GramMode::precompute);
  DualState st(m, RVector{0.0, 0.25});
  EXPECT_FALSE(rcd_step(st, 1));
  EXPECT_EQ(st.q()[1], 0.25);
  EXPECT_EQ(st.skipped(), std::vector<std::size_t>{1});
}

TEST(Momentum, KnownValue) {
  EXPECT_NEAR(update_momentum_scalar(0.2), 0.18099751242241779, 1e-15);
  EXPECT_NEAR(update_momentum_scalar(1.0), (std::sqrt(5.0) - 1) / 2, 1e-15);
  EXPECT_THROW(update_momentum_scalar(0.0), Error);
  EXPECT_THROW(update_momentum_scalar(1.5), Error);
}

TEST(Momentum, RecursionIdentityAndMonotone) {
  double c = 0.2;
  for (int m = 0; m < 10000; ++m) {
    const double next = update_momentum_scalar(c);
    ASSERT_NEAR(next * next, c * c * (1 - next), 1e-12);
    ASSERT_NEAR(next * next + c * c * next - c * c, 0.0, 1e-12);
    ASSERT_GT(next, 0.0);
    ASSERT_LT(next, c);
    c = next;
  }
}

TEST(ArcdIteration, FixedPointAtOptimum) {
  const auto m = scalar_model();
  DualState st(m, RVector{1.0}, 0.5);
  CoordinateSampler s(1, 1, Rng(0));
  arcd_iteration(st, s);
  EXPECT_EQ(st.q()[0], 1.0);
  EXPECT_EQ(st.z()[0], 0.0);
}

TEST(ArcdIteration, FullBatchFirstStepLeavesMomentumDirectionZero) {
  const auto m = instance_surrogate(6, 4, 2);
  DualState st(m, RVector(4, 0.0), 1.0);
  CoordinateSampler s(4, 4, Rng(0));
  arcd_iteration(st, s);
  for (double z : st.z()) EXPECT_EQ(z, 0.0);
  EXPECT_NEAR(st.c(), update_momentum_scalar(1.0), 0.0);
}

TEST(ArcdIteration, StepFollowsSnapshotFormula) {
  const auto m = instance_surrogate(8, 5, 3);
  Rng rng(4);
  const RVector q0 = test::random_nonneg(rng, 5);
  DualState st(m, q0, 0.4);
  CoordinateSampler s(5, 2, Rng(7));
  CoordinateSampler replay(5, 2, Rng(7));
  const auto drawn = replay.draw();
  const RVector g = dual_gradient(m, q0);  // z = 0 so y = q
  arcd_iteration(st, s);
  for (std::size_t i = 0; i < 5; ++i) {
    const bool in = std::find(drawn.begin(), drawn.end(), i) != drawn.end();
    if (!in) {
      EXPECT_EQ(st.q()[i], q0[i]);
      EXPECT_EQ(st.z()[i], 0.0);
      continue;
    }
    const double next = std::max(0.0, q0[i] - g[i] / (5 * 0.4 * m.lipschitz()[i]));
    EXPECT_NEAR(st.q()[i], next, 1e-12 * (1 + std::abs(next)));
    EXPECT_NEAR(st.z()[i], -(1 - 5 * 0.4 / 2) / (0.4 * 0.4) * (next - q0[i]), 1e-12);
  }
}

TEST(DualState, CachesMatchRecomputation) {
  for (auto mode : {GramMode::precompute, GramMode::matrix_free}) {
    const auto m = instance_surrogate(12, 10, 5, mode);
    DualState st(m, RVector(10, 0.0), 0.2);
    CoordinateSampler s(10, 2, Rng(1));
    for (int it = 0; it < 1000; ++it) arcd_iteration(st, s);
    const RVector q(st.q().begin(), st.q().end());
    const double drift = st.refresh();
    EXPECT_LE(drift, 1e-9) << (mode == GramMode::precompute ? "gram" : "matrix-free");
    EXPECT_NEAR(st.objective(), dual_objective(m, q), 1e-9 * (1 + std::abs(st.objective())));
  }
}

TEST(RcdSolve, ScalarModel) {
  const auto r = rcd_solve(scalar_model(), RVector{0.0}, opts(1e-7));
  EXPECT_DOUBLE_EQ(r.q[0], 1.0);
  EXPECT_DOUBLE_EQ(r.report.final_objective, -1.0);
  EXPECT_LE(r.report.iterations, 2u);
  EXPECT_TRUE(r.report.converged);
}

TEST(RcdSolve, TraceNonincreasingAndNonnegative) {
  const auto m = instance_surrogate(16, 8, 6);
  const auto r = rcd_solve(m, RVector(8, 0.0), opts(1e-7, 3));
  for (std::size_t i = 1; i < r.report.objective_trace.size(); ++i) {
    ASSERT_LE(r.report.objective_trace[i],
              r.report.objective_trace[i - 1] + 1e-12 * std::abs(r.report.objective_trace[i - 1]));
  }
  for (double x : r.q) EXPECT_GE(x, 0.0);
}

TEST(ArcdSolve, ScalarModelWithin200Iterations) {
  SolverOptions o = opts(1e-7, 0, 1);
  o.max_iters = 200;
  const auto r = arcd_solve(scalar_model(), RVector{0.0}, o);
  EXPECT_NEAR(r.report.final_objective, -1.0, 1e-7);
  EXPECT_NEAR(r.q[0], 1.0, 1e-3);
}

TEST(PgdSolve, ScalarModelWithin200Iterations) {
  const auto r = pgd_solve(scalar_model(), RVector{0.0}, 1e-14, 200);
  EXPECT_NEAR(r.q[0], 1.0, 1e-7);
  EXPECT_LE(r.report.iterations, 200u);
}

TEST(PgdSolve, TraceNonincreasing) {
  const auto m = instance_surrogate(10, 7, 8);
  const auto r = pgd_solve(m, RVector(7, 0.0), 1e-9, 100000);
  for (std::size_t i = 1; i < r.report.objective_trace.size(); ++i) {
    ASSERT_LE(r.report.objective_trace[i],
              r.report.objective_trace[i - 1] + 1e-12 * std::abs(r.report.objective_trace[i - 1]));
  }
}

TEST(PowerIteration, MatchesKnownSpectrum) {
  CMatrix f(2, 2);
  f(0, 0) = 1.0;
  f(1, 1) = 2.0;  // A = diag(2, 8)
  const SurrogateModel m(std::move(f), RVector{1.0, 1.0}, GramMode::precompute);
  EXPECT_NEAR(estimate_max_eigenvalue(m), 8.0, 1e-8);
}

// Solvers against the active-set oracle.
class OracleAgreement : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(OracleAgreement, AllInnerSolversReachOptimum) {
  const std::uint64_t s = GetParam();
  const auto m = instance_surrogate(16, 8 + s % 3, 500 + s);
  const OracleResult ref = active_set_solve(m);
  const RVector q0(m.n_users(), 0.0);
  SolverOptions o = opts(1e-10, s, 2);
  o.max_iters = 200000;
  const auto a = arcd_solve(m, q0, o);
  const auto r = rcd_solve(m, q0, o);
  const auto p = pgd_solve(m, q0, 1e-10, 200000);
  for (const auto* sol : {&a, &r, &p}) {
    EXPECT_NEAR(sol->report.final_objective, ref.objective, 1e-5);
    EXPECT_GE(sol->report.final_objective, ref.objective - 1e-9 * std::abs(ref.objective));
    for (double x : sol->q) EXPECT_GE(x, 0.0);
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, OracleAgreement, ::testing::Range<std::uint64_t>(0, 8));

TEST(ArcdSolve, ThreadCountDoesNotChangeTrajectory) {
  for (auto mode : {GramMode::precompute, GramMode::matrix_free}) {
    const auto m = instance_surrogate(300, 60, 9, mode);  // enough rows to split
    SolverOptions o = opts(1e-7, 4, 12);
    o.max_iters = 400;
    const auto one = arcd_solve(m, RVector(60, 0.0), o);
    o.threads = 4;
    const auto four = arcd_solve(m, RVector(60, 0.0), o);
    EXPECT_EQ(one.q, four.q);
    EXPECT_EQ(one.report.objective_trace, four.report.objective_trace);
  }
}

TEST(ArcdSolve, WarmStartAtOptimumStopsQuickly) {
  const auto m = instance_surrogate(12, 6, 10);
  const OracleResult ref = active_set_solve(m);
  const auto r = arcd_solve(m, ref.q_star, opts(1e-7, 1, 2));
  EXPECT_TRUE(r.report.converged);
  EXPECT_NEAR(r.report.objective_trace.front(), ref.objective, 1e-9 * std::abs(ref.objective));
  EXPECT_NEAR(r.report.final_objective, ref.objective, 1e-6);
}

TEST(Solvers, RejectNegativeStart) {
  const auto m = scalar_model();
  EXPECT_THROW(rcd_solve(m, RVector{-1.0}, opts(1e-7)), Error);
  EXPECT_THROW(arcd_solve(m, RVector{-1.0}, opts(1e-7)), Error);
  EXPECT_THROW(pgd_solve(m, RVector{-1.0}, 1e-7, 10), Error);
}

TEST(CoverageEpoch, PlainRuleWhenEveryIterationCoversAll) {
  CoverageEpoch e(2);
  const std::size_t both[] = {0, 1};
  EXPECT_TRUE(e.observe(both, 5.0));
  EXPECT_FALSE(e.close(4.0, 0.5));
  EXPECT_TRUE(e.observe(both, 4.0));
  EXPECT_TRUE(e.close(3.9, 0.5));
}

TEST(CoverageEpoch, WaitsForEveryCoordinate) {
  CoverageEpoch e(3);
  const std::size_t a[] = {0}, b[] = {2}, c[] = {1};
  EXPECT_FALSE(e.observe(a, 1.0));
  EXPECT_FALSE(e.observe(a, 1.0));
  EXPECT_FALSE(e.observe(b, 1.0));
  EXPECT_TRUE(e.observe(c, 1.0));
}

}  // namespace
}  // namespace mcbf
