#pragma once

#include <cstdint>
#include <span>

#include "mcbf/types.hpp"

namespace mcbf {

enum class PowerUnit {
  ratio_db,  // dimensionless power ratio
  dbm,       // absolute power; linear result in milliwatts
};

double db_to_linear(double x_db, PowerUnit kind);
double linear_to_db(double x);

/// Noise-normalized multicast instance: channels g_k = h_k / sigma_k as the
/// columns of an N x K matrix and a common SNR target (linear).
class ProblemInstance {
 public:
  ProblemInstance(CMatrix channels, double snr_target);

  std::size_t n_antennas() const noexcept { return channels_.rows(); }
  std::size_t n_users() const noexcept { return channels_.cols(); }
  double snr_target() const noexcept { return snr_target_; }

  std::span<const Complex> channel(std::size_t k) const { return channels_.col(k); }
  const CMatrix& channels() const noexcept { return channels_; }

 private:
  CMatrix channels_;
  double snr_target_;
};

/// Transmit beamformer; entries in sqrt(mW).
struct Beamformer {
  CVector v;

  Beamformer() = default;
  explicit Beamformer(CVector values) : v(std::move(values)) {}
  explicit Beamformer(std::size_t n) : v(n) {}

  std::size_t size() const noexcept { return v.size(); }
  double power() const;
};

struct ChannelParams {
  std::size_t n_antennas = 200;
  std::size_t n_users = 50;
  double pathloss_db = -90.0;
  double noise_dbm = -80.0;
  double gamma_db = 10.0;
};

/// i.i.d. Rayleigh channels: h_k ~ CN(0, pathloss * I), g_k = h_k / sigma.
/// Draws come from Stream::instance of `seed`, user by user, antenna by
/// antenna, real part before imaginary part.
ProblemInstance generate_instance(const ChannelParams& params, std::uint64_t seed);

/// |g_k^H v|^2
double snr_of(const ProblemInstance& instance, const Beamformer& v, std::size_t k);

struct FeasibilityReport {
  bool feasible = false;
  RVector margins;  // |g_k^H v|^2 - gamma
  double min_margin = 0.0;
};

/// Feasible iff min_k |g_k^H v|^2 >= gamma * (1 - slack_tol).
FeasibilityReport is_feasible(const ProblemInstance& instance, const Beamformer& v,
                              double slack_tol);

/// Feasible starting point: u = sum_k g_k / ||g_k||^2 scaled so the weakest
/// user meets gamma with equality. Users almost orthogonal to u trigger a
/// small random perturbation of u (at most 16 retries).
Beamformer feasible_init(const ProblemInstance& instance, std::uint64_t seed);

}  // namespace mcbf
