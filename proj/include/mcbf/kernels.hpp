#pragma once

// Dense inner-loop kernels with a scalar reference implementation and
// vectorized variants picked at runtime.
//
// Reductions (dot, cdotc) may differ between backends in the last bits
// because the summation order differs. Element-wise kernels (axpy) are
// fused multiply-add in the vector backend and plain multiply-then-add in
// the scalar backend; within one backend they round identically for every
// element regardless of how a range is split, which is what lets the
// solvers chunk cache updates across threads without losing determinism.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

#include "mcbf/types.hpp"

namespace mcbf::kernels {

enum class Backend { scalar, avx2 };

struct Table {
  Backend backend;
  const char* name;
  double (*dot)(const double* x, const double* y, std::size_t n);
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // sum_i conj(x_i) * y_i
  Complex (*cdotc)(const Complex* x, const Complex* y, std::size_t n);
};

bool available(Backend backend);
const Table& table(Backend backend);

/// Best backend the running CPU supports, unless MCBF_KERNELS names one.
Backend detect();

/// The process-wide table used by the wrappers below. Not meant to be
/// switched while solvers are running on other threads.
const Table& active();
void select(Backend backend);

std::optional<Backend> parse_backend(std::string_view name);
const char* to_string(Backend backend);

inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.data(), y.data(), x.size());
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), x.size());
}

inline Complex cdotc(std::span<const Complex> x, std::span<const Complex> y) {
  return active().cdotc(x.data(), y.data(), x.size());
}

/// y += a * x for complex x, y and real a.
inline void axpy(double a, std::span<const Complex> x, std::span<Complex> y) {
  axpy(a, as_reals(x), as_reals(y));
}

inline double squared_norm(std::span<const double> x) { return dot(x, x); }
inline double squared_norm(std::span<const Complex> x) {
  auto r = as_reals(x);
  return dot(r, r);
}

namespace detail {
double dot_scalar(const double* x, const double* y, std::size_t n);
void axpy_scalar(double a, const double* x, double* y, std::size_t n);
Complex cdotc_scalar(const Complex* x, const Complex* y, std::size_t n);

double dot_avx2(const double* x, const double* y, std::size_t n);
void axpy_avx2(double a, const double* x, double* y, std::size_t n);
Complex cdotc_avx2(const Complex* x, const Complex* y, std::size_t n);
}  // namespace detail

}  // namespace mcbf::kernels
