#pragma once

#include <cmath>
#include <cstdint>

#include "mcbf/model.hpp"
#include "mcbf/rng.hpp"
#include "mcbf/surrogate.hpp"

namespace mcbf::test {

// F = [1], d = [2]: Y(q) = q^2 - 2q, optimum q = 1, Y = -1.
inline SurrogateModel scalar_model(GramMode mode = GramMode::precompute) {
  CMatrix f(1, 1);
  f(0, 0) = 1.0;
  return SurrogateModel(std::move(f), RVector{2.0}, mode);
}

inline ProblemInstance small_instance(std::size_t n, std::size_t k, std::uint64_t seed,
                                      double gamma_db = 10.0) {
  ChannelParams p;
  p.n_antennas = n;
  p.n_users = k;
  p.gamma_db = gamma_db;
  return generate_instance(p, seed);
}

inline SurrogateModel instance_surrogate(std::size_t n, std::size_t k, std::uint64_t seed,
                                         GramMode mode = GramMode::automatic) {
  const ProblemInstance inst = small_instance(n, k, seed);
  return SurrogateModel::build(inst, feasible_init(inst, seed), mode);
}

inline RVector random_nonneg(Rng& rng, std::size_t k, double scale = 1.0) {
  RVector q(k);
  for (auto& x : q) x = scale * rng.uniform();
  return q;
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace mcbf::test
