#include "hiernav/kernels.hpp"

#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
#define HIERNAV_HAVE_AVX2 1
#include <immintrin.h>
#else
#define HIERNAV_HAVE_AVX2 0
#endif

namespace hiernav::kernels::detail {

#if HIERNAV_HAVE_AVX2
namespace {

#define HIERNAV_AVX2 __attribute__((target("avx2,fma")))

HIERNAV_AVX2 inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

HIERNAV_AVX2 double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
    acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double s = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

HIERNAV_AVX2 void affine(const double* w, const double* b, const double* x, double* y, std::size_t rows,
                         std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = b[r] + dot(w + r * cols, x, cols);
}

// y += alpha * x over n elements
HIERNAV_AVX2 inline void axpy_body(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    _mm256_storeu_pd(y + i + 4, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
  }
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

HIERNAV_AVX2 void affine_transpose_acc(const double* w, const double* g, double* out, std::size_t rows,
                                       std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    if (g[r] == 0.0) continue;
    axpy_body(g[r], w + r * cols, out, cols);
  }
}

HIERNAV_AVX2 void outer_acc(double* w, const double* g, const double* x, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    if (g[r] == 0.0) continue;
    axpy_body(g[r], x, w + r * cols, cols);
  }
}

HIERNAV_AVX2 void axpy(double alpha, const double* x, double* y, std::size_t n) { axpy_body(alpha, x, y, n); }

HIERNAV_AVX2 void momentum_step(double* theta, const double* grad, double* velocity, std::size_t n, double lr,
                                double momentum, double decay) {
  const __m256d vm = _mm256_set1_pd(momentum);
  const __m256d vd = _mm256_set1_pd(decay);
  const __m256d vlr = _mm256_set1_pd(-lr);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d t = _mm256_loadu_pd(theta + i);
    const __m256d step = _mm256_fmadd_pd(vd, t, _mm256_loadu_pd(grad + i));
    const __m256d v = _mm256_fmadd_pd(vm, _mm256_loadu_pd(velocity + i), step);
    _mm256_storeu_pd(velocity + i, v);
    _mm256_storeu_pd(theta + i, _mm256_fmadd_pd(vlr, v, t));
  }
  for (; i < n; ++i) {
    velocity[i] = momentum * velocity[i] + (grad[i] + decay * theta[i]);
    theta[i] -= lr * velocity[i];
  }
}

#undef HIERNAV_AVX2

constexpr Ops kAvx2{dot, affine, affine_transpose_acc, outer_acc, axpy, momentum_step};

}  // namespace

const Ops* avx2_ops() { return &kAvx2; }
#else
const Ops* avx2_ops() { return nullptr; }
#endif

}  // namespace hiernav::kernels::detail
