#include <atomic>
#include <cstdlib>
#include <string>

#include "mcbf/kernels.hpp"

namespace mcbf::kernels {

namespace {

constexpr Table kScalar{Backend::scalar, "scalar", &detail::dot_scalar, &detail::axpy_scalar,
                        &detail::cdotc_scalar};
constexpr Table kAvx2{Backend::avx2, "avx2", &detail::dot_avx2, &detail::axpy_avx2,
                      &detail::cdotc_avx2};

bool cpu_has_avx2() {
#if defined(MCBF_HAVE_AVX2) && defined(__x86_64__)
  static const bool ok = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return ok;
#else
  return false;
#endif
}

const Table* initial_table() { return &table(detect()); }

std::atomic<const Table*>& current() {
  static std::atomic<const Table*> t{initial_table()};
  return t;
}

}  // namespace

bool available(Backend backend) {
  switch (backend) {
    case Backend::scalar: return true;
    case Backend::avx2: return cpu_has_avx2();
  }
  return false;
}

const Table& table(Backend backend) {
  if (!available(backend)) {
    fail(ErrorCode::invalid_argument,
         std::string("kernel backend not supported on this CPU: ") + to_string(backend));
  }
  return backend == Backend::avx2 ? kAvx2 : kScalar;
}

Backend detect() {
  if (const char* env = std::getenv("MCBF_KERNELS")) {
    if (auto b = parse_backend(env); b && available(*b)) return *b;
  }
  return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
}

const Table& active() { return *current().load(std::memory_order_acquire); }

void select(Backend backend) { current().store(&table(backend), std::memory_order_release); }

std::optional<Backend> parse_backend(std::string_view name) {
  if (name == "scalar") return Backend::scalar;
  if (name == "avx2") return Backend::avx2;
  return std::nullopt;
}

const char* to_string(Backend backend) {
  return backend == Backend::avx2 ? "avx2" : "scalar";
}

}  // namespace mcbf::kernels
