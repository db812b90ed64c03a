#include "gldgcn/simd.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace gldgcn::simd {
namespace {

const Kernels* lookup(Backend b) {
  switch (b) {
    case Backend::scalar:
      return &scalar_kernels();
    case Backend::avx2:
      return avx2_kernels();
    case Backend::neon:
      return neon_kernels();
  }
  return nullptr;
}

const Kernels* initial_table() {
  if (const char* forced = std::getenv("GLDGCN_SIMD")) {
    const std::string name(forced);
    if (name == "scalar") return &scalar_kernels();
    if (name == "avx2" && avx2_kernels()) return avx2_kernels();
    if (name == "neon" && neon_kernels()) return neon_kernels();
  }
  if (const Kernels* k = avx2_kernels()) return k;
  if (const Kernels* k = neon_kernels()) return k;
  return &scalar_kernels();
}

std::atomic<const Kernels*>& slot() {
  static std::atomic<const Kernels*> table{initial_table()};
  return table;
}

}  // namespace

const Kernels& active() { return *slot().load(std::memory_order_acquire); }

void set_backend(Backend b) {
  const Kernels* k = lookup(b);
  if (!k) {
    throw std::invalid_argument("simd backend not available: " + std::string(backend_name(b)));
  }
  slot().store(k, std::memory_order_release);
}

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
    case Backend::neon:
      return "neon";
  }
  return "unknown";
}

}  // namespace gldgcn::simd
