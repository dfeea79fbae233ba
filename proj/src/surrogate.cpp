#include "mcbf/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mcbf/kernels.hpp"

namespace mcbf {

SurrogateModel SurrogateModel::build(const ProblemInstance& instance, const Beamformer& v_ref,
                                     GramMode mode, std::size_t gram_budget) {
  const std::size_t n = instance.n_antennas();
  const std::size_t users = instance.n_users();
  require(v_ref.size() == n, "build_surrogate: anchor dimension mismatch");
  if (std::all_of(v_ref.v.begin(), v_ref.v.end(), [](Complex z) { return z == Complex{}; })) {
    fail(ErrorCode::degenerate_anchor, "build_surrogate: anchor beamformer is zero");
  }

  SurrogateModel model;
  model.f_ = CMatrix(n, users);
  model.d_.resize(users);
  for (std::size_t k = 0; k < users; ++k) {
    const auto g = instance.channel(k);
    const Complex alignment = kernels::cdotc(g, v_ref.v);
    auto f = model.f_.col(k);
    for (std::size_t i = 0; i < n; ++i) f[i] = g[i] * alignment;
    model.d_[k] = instance.snr_target() + std::norm(alignment);
  }
  model.anchor_ = v_ref;

  if (mode == GramMode::automatic) {
    mode = users * users <= gram_budget ? GramMode::precompute : GramMode::matrix_free;
  }
  model.finish(mode);
  return model;
}

SurrogateModel::SurrogateModel(CMatrix f, RVector d, GramMode mode)
    : f_(std::move(f)), d_(std::move(d)) {
  require(f_.cols() >= 1 && f_.rows() >= 1, "SurrogateModel: empty F");
  require(d_.size() == f_.cols(), "SurrogateModel: d must have one entry per column of F");
  require(mode != GramMode::automatic, "SurrogateModel: choose precompute or matrix_free");
  finish(mode);
}

void SurrogateModel::finish(GramMode mode) {
  const std::size_t users = n_users();
  lipschitz_.resize(users);
  // Both modes derive L_k from the same expression so they agree bit for bit.
  for (std::size_t k = 0; k < users; ++k) {
    lipschitz_[k] = 2.0 * kernels::cdotc(f_.col(k), f_.col(k)).real();
  }
  if (mode != GramMode::precompute) return;

  gram_.assign(users * users, 0.0);
  for (std::size_t j = 0; j < users; ++j) {
    gram_[j * users + j] = lipschitz_[j];
    for (std::size_t i = j + 1; i < users; ++i) {
      const double a = 2.0 * kernels::cdotc(f_.col(i), f_.col(j)).real();
      gram_[j * users + i] = a;
      gram_[i * users + j] = a;
    }
  }
}

RVector gram_matrix(const SurrogateModel& model) {
  const std::size_t users = model.n_users();
  RVector a(users * users);
  for (std::size_t j = 0; j < users; ++j) {
    if (model.has_gram()) {
      const auto col = model.gram_col(j);
      std::copy(col.begin(), col.end(), a.begin() + j * users);
      continue;
    }
    for (std::size_t i = 0; i < users; ++i) {
      a[j * users + i] = i == j ? model.lipschitz()[j]
                                : 2.0 * kernels::cdotc(model.f_col(i), model.f_col(j)).real();
    }
  }
  return a;
}

namespace {

CVector apply_f(const SurrogateModel& model, std::span<const double> q) {
  CVector v(model.n_antennas());
  for (std::size_t k = 0; k < q.size(); ++k) {
    if (q[k] != 0.0) kernels::axpy(q[k], model.f_col(k), std::span<Complex>(v));
  }
  return v;
}

void check_length(const SurrogateModel& model, std::span<const double> q, const char* who) {
  require(q.size() == model.n_users(), std::string(who) + ": q must have length K");
}

}  // namespace

RVector gram_apply(const SurrogateModel& model, std::span<const double> q) {
  check_length(model, q, "gram_apply");
  const std::size_t users = model.n_users();
  RVector out(users, 0.0);
  if (model.has_gram()) {
    for (std::size_t j = 0; j < users; ++j) {
      if (q[j] != 0.0) kernels::axpy(q[j], model.gram_col(j), std::span<double>(out));
    }
    return out;
  }
  const CVector fq = apply_f(model, q);
  for (std::size_t k = 0; k < users; ++k) {
    out[k] = 2.0 * kernels::cdotc(model.f_col(k), fq).real();
  }
  return out;
}

double dual_objective(const SurrogateModel& model, std::span<const double> q) {
  check_length(model, q, "dual_objective");
  const double linear = kernels::dot(model.d(), q);
  if (model.has_gram()) {
    const RVector aq = gram_apply(model, q);
    return 0.5 * kernels::dot(q, aq) - linear;
  }
  const CVector fq = apply_f(model, q);
  return kernels::squared_norm(std::span<const Complex>(fq)) - linear;
}

RVector dual_gradient(const SurrogateModel& model, std::span<const double> q) {
  check_length(model, q, "dual_gradient");
  RVector grad = gram_apply(model, q);
  for (std::size_t k = 0; k < grad.size(); ++k) grad[k] -= model.d()[k];
  return grad;
}

double dual_gradient_coord(const SurrogateModel& model, std::span<const double> q,
                           std::size_t l) {
  check_length(model, q, "dual_gradient_coord");
  require(l < model.n_users(), "dual_gradient_coord: coordinate out of range");
  if (model.has_gram()) return kernels::dot(model.gram_col(l), q) - model.d()[l];
  const CVector fq = apply_f(model, q);
  return 2.0 * kernels::cdotc(model.f_col(l), fq).real() - model.d()[l];
}

Beamformer recover_beamformer(const SurrogateModel& model, std::span<const double> q) {
  check_length(model, q, "recover_beamformer");
  return Beamformer(apply_f(model, q));
}

double feasibility_scale(const SurrogateModel& model, const Beamformer& v) {
  require(v.size() == model.n_antennas(), "feasibility_scale: dimension mismatch");
  double scale = 0.0;
  for (std::size_t k = 0; k < model.n_users(); ++k) {
    const double lhs = 2.0 * kernels::cdotc(model.f_col(k), v.v).real();
    if (!(lhs > 0.0)) {
      fail(ErrorCode::cannot_certify,
           "recovered beamformer cannot be scaled to feasibility (user " + std::to_string(k) +
               " has nonpositive alignment)");
    }
    scale = std::max(scale, model.d()[k] / lhs);
  }
  return scale;
}

GapCertificate duality_gap(const SurrogateModel& model, std::span<const double> q) {
  check_length(model, q, "duality_gap");
  require(std::all_of(q.begin(), q.end(), [](double x) { return x >= 0.0; }),
          "duality_gap: q must be nonnegative");
  const Beamformer v = recover_beamformer(model, q);
  GapCertificate out;
  out.scale = feasibility_scale(model, v);
  out.scaled_power = out.scale * out.scale * v.power();
  out.gap = out.scaled_power + dual_objective(model, q);
  return out;
}

}  // namespace mcbf
