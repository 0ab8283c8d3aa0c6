#include "tierprobe/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#define TIERPROBE_HAVE_AVX2 1
#else
#define TIERPROBE_HAVE_AVX2 0
#endif

namespace tierprobe::kernels::avx2 {

#if TIERPROBE_HAVE_AVX2

namespace {

inline double hsum(__m256d v) noexcept {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

}  // namespace

bool compiled() noexcept { return true; }

double dot(const double* a, const double* b, std::size_t n) noexcept {
  // Two independent accumulators hide the FMA latency.
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_squares(const double* a, std::size_t n) noexcept { return dot(a, a, n); }

void axpy(double alpha, const double* x, double* y, std::size_t n) noexcept {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale(double alpha, double* x, std::size_t n) noexcept {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) x[i] *= alpha;
}

#else

// Non-x86 builds: the dispatcher never selects this backend.
bool compiled() noexcept { return false; }
double dot(const double* a, const double* b, std::size_t n) noexcept {
  return scalar::dot(a, b, n);
}
double sum_squares(const double* a, std::size_t n) noexcept { return scalar::sum_squares(a, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) noexcept {
  scalar::axpy(alpha, x, y, n);
}
void scale(double alpha, double* x, std::size_t n) noexcept { scalar::scale(alpha, x, n); }

#endif

}  // namespace tierprobe::kernels::avx2
