// Compiled with -mavx2 -mfma. Nothing in here may run before dispatch has
// confirmed CPU support.
#include "mcbf/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>

namespace mcbf::kernels::detail {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    i += 4;
  }
  double sum = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) sum = std::fma(x[i], y[i], sum);
  return sum;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(y + i + 4,
                     _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
  }
  if (i + 4 <= n) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    i += 4;
  }
  // Tail must match the vector lanes bit for bit.
  for (; i < n; ++i) y[i] = std::fma(a, x[i], y[i]);
}

Complex cdotc_avx2(const Complex* x, const Complex* y, std::size_t n) {
  const double* xd = reinterpret_cast<const double*>(x);
  const double* yd = reinterpret_cast<const double*>(y);
  // Lanes hold [xr0*yr0, xi0*yi0, xr1*yr1, xi1*yi1] for the real part and
  // [xr0*yi0, xi0*yr0, ...] for the imaginary part, which is then combined
  // with alternating signs.
  __m256d re = _mm256_setzero_pd();
  __m256d im = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d vx = _mm256_loadu_pd(xd + 2 * i);
    const __m256d vy = _mm256_loadu_pd(yd + 2 * i);
    const __m256d vy_swapped = _mm256_permute_pd(vy, 0b0101);
    re = _mm256_fmadd_pd(vx, vy, re);
    im = _mm256_fmadd_pd(vx, vy_swapped, im);
  }
  double sum_re = hsum(re);
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, im);
  double sum_im = (lanes[0] - lanes[1]) + (lanes[2] - lanes[3]);
  for (; i < n; ++i) {
    const double xr = x[i].real(), xi = x[i].imag();
    const double yr = y[i].real(), yi = y[i].imag();
    sum_re = std::fma(xr, yr, std::fma(xi, yi, sum_re));
    sum_im = std::fma(xr, yi, std::fma(-xi, yr, sum_im));
  }
  return {sum_re, sum_im};
}

}  // namespace mcbf::kernels::detail

#else

#include <cstdlib>

namespace mcbf::kernels::detail {
// Never dispatched to on builds without AVX2 support.
double dot_avx2(const double*, const double*, std::size_t) { std::abort(); }
void axpy_avx2(double, const double*, double*, std::size_t) { std::abort(); }
Complex cdotc_avx2(const Complex*, const Complex*, std::size_t) { std::abort(); }
}  // namespace mcbf::kernels::detail

#endif
