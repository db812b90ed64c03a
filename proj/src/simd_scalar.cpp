#include "gldgcn/simd.hpp"

#include <cmath>

namespace gldgcn::simd {
namespace {

double dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += x[k] * y[k];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) y[k] += alpha * x[k];
}

double sqdist(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = x[k] - y[k];
    s += d * d;
  }
  return s;
}

double absdiff_dot(const double* w, const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += w[k] * std::fabs(x[k] - y[k]);
  return s;
}

void absdiff_axpy(double alpha, const double* x, const double* y, double* out, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) out[k] += alpha * std::fabs(x[k] - y[k]);
}

void signdiff_axpy(double alpha, const double* w, const double* x, const double* y, double* out,
                   std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    const double d = x[k] - y[k];
    const double sg = (d > 0.0) ? 1.0 : ((d < 0.0) ? -1.0 : 0.0);
    out[k] += alpha * w[k] * sg;
  }
}

void relu(const double* x, double* out, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) out[k] = x[k] > 0.0 ? x[k] : 0.0;
}

void relu_backward(const double* x, const double* g, double* out, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    if (x[k] > 0.0) out[k] += g[k];
  }
}

void scale(double alpha, double* x, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) x[k] *= alpha;
}

}  // namespace

const Kernels& scalar_kernels() {
  static const Kernels table{Backend::scalar, dot,  axpy,          sqdist, absdiff_dot,
                             absdiff_axpy,    signdiff_axpy, relu, relu_backward, scale};
  return table;
}

}  // namespace gldgcn::simd
