#include "gldgcn/simd.hpp"

#include <cmath>

#if defined(__aarch64__) && defined(__ARM_NEON)
#include <arm_neon.h>
#define GLDGCN_HAVE_NEON 1
#else
#define GLDGCN_HAVE_NEON 0
#endif

namespace gldgcn::simd {

#if GLDGCN_HAVE_NEON
namespace {

inline float64x2_t vsign(float64x2_t d) {
  const float64x2_t one = vdupq_n_f64(1.0);
  const float64x2_t zero = vdupq_n_f64(0.0);
  const float64x2_t pos =
      vreinterpretq_f64_u64(vandq_u64(vcgtq_f64(d, zero), vreinterpretq_u64_f64(one)));
  const float64x2_t neg =
      vreinterpretq_f64_u64(vandq_u64(vcltq_f64(d, zero), vreinterpretq_u64_f64(one)));
  return vsubq_f64(pos, neg);
}

double dot(const double* x, const double* y, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(x + k), vld1q_f64(y + k));
    acc1 = vfmaq_f64(acc1, vld1q_f64(x + k + 2), vld1q_f64(y + k + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; k < n; ++k) s += x[k] * y[k];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t a = vdupq_n_f64(alpha);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) vst1q_f64(y + k, vfmaq_f64(vld1q_f64(y + k), a, vld1q_f64(x + k)));
  for (; k < n; ++k) y[k] += alpha * x[k];
}

double sqdist(const double* x, const double* y, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(x + k), vld1q_f64(y + k));
    acc = vfmaq_f64(acc, d, d);
  }
  double s = vaddvq_f64(acc);
  for (; k < n; ++k) {
    const double d = x[k] - y[k];
    s += d * d;
  }
  return s;
}

double absdiff_dot(const double* w, const double* x, const double* y, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    acc = vfmaq_f64(acc, vld1q_f64(w + k), vabdq_f64(vld1q_f64(x + k), vld1q_f64(y + k)));
  }
  double s = vaddvq_f64(acc);
  for (; k < n; ++k) s += w[k] * std::fabs(x[k] - y[k]);
  return s;
}

void absdiff_axpy(double alpha, const double* x, const double* y, double* out, std::size_t n) {
  const float64x2_t a = vdupq_n_f64(alpha);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    const float64x2_t d = vabdq_f64(vld1q_f64(x + k), vld1q_f64(y + k));
    vst1q_f64(out + k, vfmaq_f64(vld1q_f64(out + k), a, d));
  }
  for (; k < n; ++k) out[k] += alpha * std::fabs(x[k] - y[k]);
}

void signdiff_axpy(double alpha, const double* w, const double* x, const double* y, double* out,
                   std::size_t n) {
  const float64x2_t a = vdupq_n_f64(alpha);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    const float64x2_t sg = vsign(vsubq_f64(vld1q_f64(x + k), vld1q_f64(y + k)));
    const float64x2_t t = vmulq_f64(a, vld1q_f64(w + k));
    vst1q_f64(out + k, vfmaq_f64(vld1q_f64(out + k), t, sg));
  }
  for (; k < n; ++k) {
    const double d = x[k] - y[k];
    const double sg = (d > 0.0) ? 1.0 : ((d < 0.0) ? -1.0 : 0.0);
    out[k] += alpha * w[k] * sg;
  }
}

void relu(const double* x, double* out, std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    const float64x2_t v = vld1q_f64(x + k);
    const uint64x2_t m = vcgtq_f64(v, zero);
    vst1q_f64(out + k, vreinterpretq_f64_u64(vandq_u64(m, vreinterpretq_u64_f64(v))));
  }
  for (; k < n; ++k) out[k] = x[k] > 0.0 ? x[k] : 0.0;
}

void relu_backward(const double* x, const double* g, double* out, std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    const uint64x2_t m = vcgtq_f64(vld1q_f64(x + k), zero);
    const float64x2_t gk = vreinterpretq_f64_u64(vandq_u64(m, vreinterpretq_u64_f64(vld1q_f64(g + k))));
    vst1q_f64(out + k, vaddq_f64(vld1q_f64(out + k), gk));
  }
  for (; k < n; ++k) {
    if (x[k] > 0.0) out[k] += g[k];
  }
}

void scale(double alpha, double* x, std::size_t n) {
  const float64x2_t a = vdupq_n_f64(alpha);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) vst1q_f64(x + k, vmulq_f64(a, vld1q_f64(x + k)));
  for (; k < n; ++k) x[k] *= alpha;
}

}  // namespace

const Kernels* neon_kernels() {
  static const Kernels table{Backend::neon, dot,  axpy,          sqdist, absdiff_dot,
                             absdiff_axpy,  signdiff_axpy, relu, relu_backward, scale};
  return &table;
}

#else

const Kernels* neon_kernels() { return nullptr; }

#endif

}  // namespace gldgcn::simd
