#pragma once

// Vector kernels behind every dense inner loop in the library.
//
// Each backend fills the same table of function pointers. The scalar table
// is the reference; the AVX2 (x86-64) and NEON (aarch64) tables must agree
// with it to rounding (FMA contraction and lane-wise summation order are the
// only sources of difference). The active table is chosen once per process
// and can be forced through GLDGCN_SIMD=scalar|avx2|neon or set_backend().

#include <cstddef>
#include <string_view>

namespace gldgcn::simd {

enum class Backend { scalar, avx2, neon };

struct Kernels {
  Backend backend;

  /// sum_k x[k] * y[k]
  double (*dot)(const double* x, const double* y, std::size_t n);
  /// y[k] += alpha * x[k]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  /// sum_k (x[k] - y[k])^2
  double (*sqdist)(const double* x, const double* y, std::size_t n);
  /// sum_k w[k] * |x[k] - y[k]|
  double (*absdiff_dot)(const double* w, const double* x, const double* y, std::size_t n);
  /// out[k] += alpha * |x[k] - y[k]|
  void (*absdiff_axpy)(double alpha, const double* x, const double* y, double* out,
                       std::size_t n);
  /// out[k] += alpha * w[k] * sign(x[k] - y[k]), with sign(0) = 0
  void (*signdiff_axpy)(double alpha, const double* w, const double* x, const double* y,
                        double* out, std::size_t n);
  /// out[k] = max(0, x[k]); out may alias x
  void (*relu)(const double* x, double* out, std::size_t n);
  /// out[k] += (x[k] > 0) ? g[k] : 0
  void (*relu_backward)(const double* x, const double* g, double* out, std::size_t n);
  /// x[k] *= alpha
  void (*scale)(double alpha, double* x, std::size_t n);
};

const Kernels& scalar_kernels();
/// Null when the backend was not compiled in or the CPU lacks the ISA.
const Kernels* avx2_kernels();
const Kernels* neon_kernels();

/// The process-wide kernel table.
const Kernels& active();

/// Overrides the active backend; throws std::invalid_argument when unavailable.
void set_backend(Backend b);

std::string_view backend_name(Backend b);

}  // namespace gldgcn::simd
