#include "mcbf/oracle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mcbf/dual_solvers.hpp"
#include "mcbf/kernels.hpp"

namespace mcbf {

namespace {

constexpr double kOffSupportTol = 1e-9;
constexpr double kTieTol = 1e-12;
constexpr double kPinvCutoff = 1e-12;
constexpr double kReferenceKkt = 1e-8;

// Smallest-violation bookkeeping for the degenerate case.
double candidate_violation(std::span<const double> q, std::span<const double> grad,
                           const std::vector<bool>& in_support) {
  double v = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    if (in_support[j]) {
      v = std::max(v, -q[j]);
    } else {
      v = std::max(v, -grad[j]);
    }
  }
  return v;
}

}  // namespace

double kkt_residual(const SurrogateModel& model, std::span<const double> q) {
  const RVector grad = dual_gradient(model, q);
  double r = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) r = std::max(r, std::abs(std::min(q[j], grad[j])));
  return r;
}

OracleResult active_set_solve(const SurrogateModel& model, std::size_t k_limit) {
  const std::size_t users = model.n_users();
  if (users > k_limit) {
    fail(ErrorCode::refused, "active_set_solve: K = " + std::to_string(users) +
                                 " exceeds the enumeration limit " + std::to_string(k_limit));
  }
  require(users < 63, "active_set_solve: K too large for a bitmask");

  const RVector a_flat = gram_matrix(model);
  const Eigen::Map<const Eigen::MatrixXd> a(a_flat.data(), users, users);
  const Eigen::Map<const Eigen::VectorXd> d(model.d().data(), users);

  bool have = false;
  OracleResult best;
  OracleResult nearest;
  double nearest_violation = std::numeric_limits<double>::infinity();

  const std::uint64_t subsets = std::uint64_t{1} << users;
  std::vector<std::size_t> support;
  std::vector<bool> in_support(users);
  for (std::uint64_t mask = 0; mask < subsets; ++mask) {
    support.clear();
    for (std::size_t j = 0; j < users; ++j) {
      in_support[j] = (mask >> j) & 1U;
      if (in_support[j]) support.push_back(j);
    }
    const auto s = static_cast<Eigen::Index>(support.size());

    Eigen::VectorXd q = Eigen::VectorXd::Zero(users);
    if (s > 0) {
      Eigen::MatrixXd a_ss(s, s);
      Eigen::VectorXd d_s(s);
      for (Eigen::Index r = 0; r < s; ++r) {
        d_s(r) = d(support[r]);
        for (Eigen::Index c = 0; c < s; ++c) a_ss(r, c) = a(support[r], support[c]);
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a_ss);
      const double cutoff = kPinvCutoff * a_ss.diagonal().maxCoeff();
      const Eigen::VectorXd& lambda = eig.eigenvalues();
      const Eigen::MatrixXd& vecs = eig.eigenvectors();
      Eigen::VectorXd coeff = vecs.transpose() * d_s;
      for (Eigen::Index r = 0; r < s; ++r) {
        coeff(r) = lambda(r) > cutoff ? coeff(r) / lambda(r) : 0.0;
      }
      const Eigen::VectorXd q_s = vecs * coeff;
      for (Eigen::Index r = 0; r < s; ++r) q(support[r]) = q_s(r);
    }
    const Eigen::VectorXd grad = a * q - d;

    const std::span<const double> qs(q.data(), users);
    const std::span<const double> gs(grad.data(), users);
    const double violation = candidate_violation(qs, gs, in_support);
    bool accepted = true;
    for (std::size_t j = 0; j < users && accepted; ++j) {
      accepted = in_support[j] ? q(j) >= 0.0 : grad(j) >= -kOffSupportTol;
    }

    auto make_result = [&] {
      OracleResult r;
      r.q_star.assign(q.data(), q.data() + users);
      r.objective = 0.5 * q.dot(a * q) - d.dot(q);
      r.active_set = support;
      r.kkt_residual = kkt_residual(model, r.q_star);
      return r;
    };

    if (!accepted) {
      if (violation < nearest_violation) {
        nearest_violation = violation;
        nearest = make_result();
      }
      continue;
    }
    OracleResult candidate = make_result();
    const bool better = !have || candidate.objective < best.objective - kTieTol;
    const bool tie = have && std::abs(candidate.objective - best.objective) <= kTieTol &&
                     std::lexicographical_compare(candidate.active_set.begin(),
                                                  candidate.active_set.end(),
                                                  best.active_set.begin(),
                                                  best.active_set.end());
    if (better || tie) {
      best = std::move(candidate);
      have = true;
    }
  }

  if (!have) {
    nearest.converged = false;
    throw OracleDegeneracy("active_set_solve: no support set satisfies the KKT conditions",
                           std::move(nearest));
  }
  return best;
}

OracleResult reference_solve(const SurrogateModel& model, double tol, std::size_t max_iters) {
  const RVector zero(model.n_users(), 0.0);
  DualSolution sol = pgd_solve(model, zero, tol, max_iters, kReferenceKkt);
  OracleResult out;
  out.q_star = std::move(sol.q);
  out.objective = dual_objective(model, out.q_star);
  out.kkt_residual = kkt_residual(model, out.q_star);
  out.converged = sol.report.converged;
  out.iterations = sol.report.iterations;
  for (std::size_t j = 0; j < out.q_star.size(); ++j) {
    if (out.q_star[j] > 0.0) out.active_set.push_back(j);
  }
  return out;
}

}  // namespace mcbf
