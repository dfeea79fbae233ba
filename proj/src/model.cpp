#include "mcbf/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mcbf/kernels.hpp"
#include "mcbf/rng.hpp"

namespace mcbf {

namespace {

constexpr int kInitRetries = 16;
constexpr double kAlignmentFloor = 1e-12;
constexpr double kPerturbation = 1e-3;

}  // namespace

double db_to_linear(double x_db, PowerUnit /*kind*/) {
  require(std::isfinite(x_db), "db_to_linear: non-finite input");
  // Same formula for both units; dBm simply yields milliwatts.
  return std::pow(10.0, x_db / 10.0);
}

double linear_to_db(double x) { return 10.0 * std::log10(x); }

ProblemInstance::ProblemInstance(CMatrix channels, double snr_target)
    : channels_(std::move(channels)), snr_target_(snr_target) {
  require(channels_.rows() >= 1 && channels_.cols() >= 1,
          "ProblemInstance: need at least one antenna and one user");
  require(std::isfinite(snr_target_) && snr_target_ > 0.0,
          "ProblemInstance: snr_target must be positive");
  for (std::size_t k = 0; k < channels_.cols(); ++k) {
    const auto g = channels_.col(k);
    require(std::any_of(g.begin(), g.end(), [](Complex z) { return z != Complex{}; }),
            "ProblemInstance: channel " + std::to_string(k) + " is identically zero");
  }
}

double Beamformer::power() const { return kernels::squared_norm(std::span<const Complex>(v)); }

ProblemInstance generate_instance(const ChannelParams& params, std::uint64_t seed) {
  require(params.n_antennas >= 1 && params.n_users >= 1,
          "generate_instance: dimensions must be positive");
  const double pathloss = db_to_linear(params.pathloss_db, PowerUnit::ratio_db);
  const double noise_mw = db_to_linear(params.noise_dbm, PowerUnit::dbm);
  const double gamma = db_to_linear(params.gamma_db, PowerUnit::ratio_db);
  const double inv_sigma = 1.0 / std::sqrt(noise_mw);

  Rng rng = Rng::stream(seed, Stream::instance);
  CMatrix g(params.n_antennas, params.n_users);
  for (std::size_t k = 0; k < params.n_users; ++k) {
    for (auto& entry : g.col(k)) entry = rng.complex_normal(pathloss) * inv_sigma;
  }
  return ProblemInstance(std::move(g), gamma);
}

double snr_of(const ProblemInstance& instance, const Beamformer& v, std::size_t k) {
  require(k < instance.n_users(), "snr_of: user index out of range");
  require(v.size() == instance.n_antennas(), "snr_of: beamformer dimension mismatch");
  return std::norm(kernels::cdotc(instance.channel(k), v.v));
}

FeasibilityReport is_feasible(const ProblemInstance& instance, const Beamformer& v,
                              double slack_tol) {
  require(v.size() == instance.n_antennas(), "is_feasible: beamformer dimension mismatch");
  require(slack_tol >= 0.0, "is_feasible: slack_tol must be nonnegative");
  const double gamma = instance.snr_target();
  FeasibilityReport out;
  out.margins.resize(instance.n_users());
  double min_snr = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < instance.n_users(); ++k) {
    const double snr = snr_of(instance, v, k);
    out.margins[k] = snr - gamma;
    min_snr = std::min(min_snr, snr);
  }
  out.min_margin = min_snr - gamma;
  out.feasible = min_snr >= gamma * (1.0 - slack_tol);
  return out;
}

Beamformer feasible_init(const ProblemInstance& instance, std::uint64_t seed) {
  const std::size_t n = instance.n_antennas();
  const std::size_t users = instance.n_users();

  CVector u(n);
  RVector channel_norm(users);
  for (std::size_t k = 0; k < users; ++k) {
    const auto g = instance.channel(k);
    const double sq = kernels::squared_norm(g);
    channel_norm[k] = std::sqrt(sq);
    kernels::axpy(1.0 / sq, g, std::span<Complex>(u));
  }

  Rng rng = Rng::stream(seed, Stream::init);
  for (int attempt = 0; attempt <= kInitRetries; ++attempt) {
    const double u_norm = std::sqrt(kernels::squared_norm(std::span<const Complex>(u)));
    double min_alignment = std::numeric_limits<double>::infinity();
    bool degenerate = u_norm == 0.0;
    for (std::size_t k = 0; k < users && !degenerate; ++k) {
      const double a = std::abs(kernels::cdotc(instance.channel(k), u));
      if (a < kAlignmentFloor * channel_norm[k] * u_norm) degenerate = true;
      min_alignment = std::min(min_alignment, a);
    }
    if (!degenerate) {
      const double t = std::sqrt(instance.snr_target()) / min_alignment;
      for (auto& x : u) x *= t;
      return Beamformer(std::move(u));
    }
    if (attempt == kInitRetries) break;
    // Perturb each entry by CN(0, (1e-3 * ||u|| / sqrt(N))^2) so that the
    // perturbation has relative norm about 1e-3.
    const double reference = u_norm > 0.0 ? u_norm : 1.0 / channel_norm[0];
    const double scale = kPerturbation * reference / std::sqrt(double(n));
    for (auto& x : u) x += rng.complex_normal(scale * scale);
  }
  fail(ErrorCode::degenerate_instance,
       "feasible_init: some user stays orthogonal to the initial direction after 16 retries");
}

}  // namespace mcbf
