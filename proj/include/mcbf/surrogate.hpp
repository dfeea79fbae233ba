#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "mcbf/model.hpp"
#include "mcbf/types.hpp"

namespace mcbf {

enum class GramMode {
  precompute,   // K x K Gram matrix, O(K) per coordinate gradient
  matrix_free,  // F only, O(N) per coordinate gradient
  automatic,    // precompute when K^2 fits the budget
};

inline constexpr std::size_t kDefaultGramBudget = 200'000'000;

/// Dual data of the convex surrogate anchored at v_ref:
///
///   f_k = g_k (g_k^H v_ref),   d_k = gamma + |g_k^H v_ref|^2,
///   A = 2 Re(F^H F),           L_k = A_kk = 2 ||f_k||^2,
///
/// so that the dual objective is Y(q) = ||F q||^2 - d^T q = q^T A q / 2 - d^T q.
class SurrogateModel {
 public:
  static SurrogateModel build(const ProblemInstance& instance, const Beamformer& v_ref,
                              GramMode mode = GramMode::automatic,
                              std::size_t gram_budget = kDefaultGramBudget);

  /// Model from raw F and d, e.g. synthetic test problems. `mode` may not be
  /// automatic here.
  SurrogateModel(CMatrix f, RVector d, GramMode mode);

  std::size_t n_users() const noexcept { return f_.cols(); }
  std::size_t n_antennas() const noexcept { return f_.rows(); }

  const CMatrix& f() const noexcept { return f_; }
  std::span<const Complex> f_col(std::size_t k) const { return f_.col(k); }
  std::span<const double> d() const noexcept { return d_; }
  std::span<const double> lipschitz() const noexcept { return lipschitz_; }

  bool has_gram() const noexcept { return !gram_.empty(); }
  /// Column k of A (symmetric, so also row k). Requires has_gram().
  std::span<const double> gram_col(std::size_t k) const {
    return {gram_.data() + k * n_users(), n_users()};
  }
  double gram(std::size_t i, std::size_t j) const { return gram_[j * n_users() + i]; }

  /// Anchor beamformer when built from an instance.
  const std::optional<Beamformer>& anchor() const noexcept { return anchor_; }

 private:
  SurrogateModel() = default;
  void finish(GramMode mode);

  CMatrix f_;
  RVector d_;
  RVector lipschitz_;
  RVector gram_;
  std::optional<Beamformer> anchor_;
};

/// Dense A = 2 Re(F^H F), whether or not the model stores it.
RVector gram_matrix(const SurrogateModel& model);

/// y = A q (matrix-free models go through F).
RVector gram_apply(const SurrogateModel& model, std::span<const double> q);

double dual_objective(const SurrogateModel& model, std::span<const double> q);
RVector dual_gradient(const SurrogateModel& model, std::span<const double> q);
double dual_gradient_coord(const SurrogateModel& model, std::span<const double> q,
                           std::size_t l);

/// v = F q, the minimizer of the Lagrangian for fixed multipliers.
Beamformer recover_beamformer(const SurrogateModel& model, std::span<const double> q);

/// Smallest s with 2 Re(f_k^H (s v)) >= d_k for all k. Throws cannot_certify
/// when some 2 Re(f_k^H v) <= 0, since no positive scaling reaches feasibility.
double feasibility_scale(const SurrogateModel& model, const Beamformer& v);

struct GapCertificate {
  double gap = 0.0;           // ||s v||^2 + Y(q) >= 0 by weak duality
  double scaled_power = 0.0;  // ||s v||^2
  double scale = 0.0;         // s
};

GapCertificate duality_gap(const SurrogateModel& model, std::span<const double> q);

}  // namespace mcbf
