#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mcbf/surrogate.hpp"

namespace mcbf {

/// Surrogate of a random small instance (N in [1, max_n], K in [1, max_k],
/// default channel statistics, gamma = 10 dB) anchored at its feasible
/// initializer. Sizes and channels are fixed by `seed`.
SurrogateModel random_surrogate(std::uint64_t seed, std::size_t max_n = 16,
                                std::size_t max_k = 10);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Quick oracle-equivalence and invariant checks on small instances, a few
/// seconds in total. One result per check.
std::vector<CheckResult> run_verification(unsigned threads = 1);

/// "PASS name: detail" / "FAIL name: detail", one per line; true if all passed.
bool print_results(std::ostream& out, const std::vector<CheckResult>& results);

}  // namespace mcbf
