#include "gldgcn/simd.hpp"

#include <cmath>

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#define GLDGCN_HAVE_AVX2 1
#else
#define GLDGCN_HAVE_AVX2 0
#endif

namespace gldgcn::simd {

#if GLDGCN_HAVE_AVX2
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline __m256d vabs(__m256d v) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v);
}

// sign(d) with sign(0) = 0, built from two compares.
inline __m256d vsign(__m256d d) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d pos = _mm256_and_pd(_mm256_cmp_pd(d, zero, _CMP_GT_OQ), _mm256_set1_pd(1.0));
  const __m256d neg = _mm256_and_pd(_mm256_cmp_pd(d, zero, _CMP_LT_OQ), _mm256_set1_pd(1.0));
  return _mm256_sub_pd(pos, neg);
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + k + 4), _mm256_loadu_pd(y + k + 4), acc1);
  }
  for (; k + 4 <= n; k += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; k < n; ++k) s += x[k] * y[k];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    _mm256_storeu_pd(y + k, _mm256_fmadd_pd(a, _mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k)));
  }
  for (; k < n; ++k) y[k] += alpha * x[k];
}

double sqdist(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; k < n; ++k) {
    const double d = x[k] - y[k];
    s += d * d;
  }
  return s;
}

double absdiff_dot(const double* w, const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d d = vabs(_mm256_sub_pd(_mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k)));
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + k), d, acc);
  }
  double s = hsum(acc);
  for (; k < n; ++k) s += w[k] * std::fabs(x[k] - y[k]);
  return s;
}

void absdiff_axpy(double alpha, const double* x, const double* y, double* out, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d d = vabs(_mm256_sub_pd(_mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k)));
    _mm256_storeu_pd(out + k, _mm256_fmadd_pd(a, d, _mm256_loadu_pd(out + k)));
  }
  for (; k < n; ++k) out[k] += alpha * std::fabs(x[k] - y[k]);
}

void signdiff_axpy(double alpha, const double* w, const double* x, const double* y, double* out,
                   std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d sg = vsign(_mm256_sub_pd(_mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k)));
    const __m256d t = _mm256_mul_pd(a, _mm256_loadu_pd(w + k));
    _mm256_storeu_pd(out + k, _mm256_fmadd_pd(t, sg, _mm256_loadu_pd(out + k)));
  }
  for (; k < n; ++k) {
    const double d = x[k] - y[k];
    const double sg = (d > 0.0) ? 1.0 : ((d < 0.0) ? -1.0 : 0.0);
    out[k] += alpha * w[k] * sg;
  }
}

void relu(const double* x, double* out, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    _mm256_storeu_pd(out + k, _mm256_max_pd(_mm256_loadu_pd(x + k), zero));
  }
  for (; k < n; ++k) out[k] = x[k] > 0.0 ? x[k] : 0.0;
}

void relu_backward(const double* x, const double* g, double* out, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d m = _mm256_cmp_pd(_mm256_loadu_pd(x + k), zero, _CMP_GT_OQ);
    const __m256d gk = _mm256_and_pd(m, _mm256_loadu_pd(g + k));
    _mm256_storeu_pd(out + k, _mm256_add_pd(_mm256_loadu_pd(out + k), gk));
  }
  for (; k < n; ++k) {
    if (x[k] > 0.0) out[k] += g[k];
  }
}

void scale(double alpha, double* x, std::size_t n) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) _mm256_storeu_pd(x + k, _mm256_mul_pd(a, _mm256_loadu_pd(x + k)));
  for (; k < n; ++k) x[k] *= alpha;
}

}  // namespace

const Kernels* avx2_kernels() {
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  static const Kernels table{Backend::avx2, dot,  axpy,          sqdist, absdiff_dot,
                             absdiff_axpy,  signdiff_axpy, relu, relu_backward, scale};
  return supported ? &table : nullptr;
}

#else

const Kernels* avx2_kernels() { return nullptr; }

#endif

}  // namespace gldgcn::simd
