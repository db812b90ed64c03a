#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "gldgcn/rng.hpp"
#include "gldgcn/simd.hpp"

using namespace gldgcn;

namespace {

std::vector<double> random_vec(std::size_t n, RngStream& rng, bool with_zeros) {
  std::vector<double> v(n);
  for (double& x : v) {
    x = 2.0 * rng.uniform() - 1.0;
    if (with_zeros && rng.uniform() < 0.2) x = 0.0;
  }
  return v;
}

double rel_gap(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

void check_against_scalar(const simd::Kernels& k) {
  const simd::Kernels& ref = simd::scalar_kernels();
  RngStream rng(42);
  for (std::size_t n : {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 64, 67, 200}) {
    CAPTURE(n);
    auto x = random_vec(n, rng, true);
    auto y = random_vec(n, rng, true);
    // share some entries so absdiff and signdiff hit x == y
    for (std::size_t i = 0; i < n; i += 3) y[i] = x[i];
    auto w = random_vec(n, rng, false);

    CHECK(rel_gap(k.dot(x.data(), y.data(), n), ref.dot(x.data(), y.data(), n)) < 1e-13);
    CHECK(rel_gap(k.sqdist(x.data(), y.data(), n), ref.sqdist(x.data(), y.data(), n)) < 1e-13);
    CHECK(rel_gap(k.absdiff_dot(w.data(), x.data(), y.data(), n), ref.absdiff_dot(w.data(), x.data(), y.data(), n)) <
          1e-13);

    auto out_k = y;
    auto out_r = y;
    k.axpy(0.37, x.data(), out_k.data(), n);
    ref.axpy(0.37, x.data(), out_r.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(rel_gap(out_k[i], out_r[i]) < 1e-15);

    out_k = w;
    out_r = w;
    k.absdiff_axpy(-1.5, x.data(), y.data(), out_k.data(), n);
    ref.absdiff_axpy(-1.5, x.data(), y.data(), out_r.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(rel_gap(out_k[i], out_r[i]) < 1e-15);

    out_k = w;
    out_r = w;
    k.signdiff_axpy(0.8, w.data(), x.data(), y.data(), out_k.data(), n);
    ref.signdiff_axpy(0.8, w.data(), x.data(), y.data(), out_r.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(out_k[i] == out_r[i]);

    std::vector<double> r_k(n), r_r(n);
    k.relu(x.data(), r_k.data(), n);
    ref.relu(x.data(), r_r.data(), n);
    CHECK(r_k == r_r);

    auto in_place = x;
    k.relu(in_place.data(), in_place.data(), n);
    CHECK(in_place == r_r);

    out_k = w;
    out_r = w;
    k.relu_backward(x.data(), y.data(), out_k.data(), n);
    ref.relu_backward(x.data(), y.data(), out_r.data(), n);
    CHECK(out_k == out_r);

    out_k = x;
    out_r = x;
    k.scale(-2.25, out_k.data(), n);
    ref.scale(-2.25, out_r.data(), n);
    CHECK(out_k == out_r);
  }
}

}  // namespace

TEST_SUITE("simd") {
  TEST_CASE("scalar kernels on hand values") {
    const auto& k = simd::scalar_kernels();
    double x[] = {1.0, -2.0, 3.0};
    double y[] = {4.0, 5.0, 3.0};
    double w[] = {1.0, 2.0, 3.0};
    CHECK(k.dot(x, y, 3) == doctest::Approx(1.0 * 4 - 10 + 9));
    CHECK(k.sqdist(x, y, 3) == doctest::Approx(9.0 + 49.0));
    CHECK(k.absdiff_dot(w, x, y, 3) == doctest::Approx(3.0 + 14.0));
    double out[] = {0.0, 0.0, 0.0};
    k.signdiff_axpy(2.0, w, x, y, out, 3);
    CHECK(out[0] == -2.0);
    CHECK(out[1] == -4.0);
    CHECK(out[2] == 0.0);
  }

  TEST_CASE("avx2 kernels match the scalar reference") {
    const simd::Kernels* k = simd::avx2_kernels();
    if (!k) {
      MESSAGE("AVX2 unavailable on this machine");
      return;
    }
    CHECK(k->backend == simd::Backend::avx2);
    check_against_scalar(*k);
  }

  TEST_CASE("neon kernels match the scalar reference") {
    const simd::Kernels* k = simd::neon_kernels();
    if (!k) {
      MESSAGE("NEON unavailable on this machine");
      return;
    }
    check_against_scalar(*k);
  }

  TEST_CASE("backend can be forced and restored") {
    const auto before = simd::active().backend;
    simd::set_backend(simd::Backend::scalar);
    CHECK(simd::active().backend == simd::Backend::scalar);
    if (!simd::neon_kernels()) CHECK_THROWS_AS(simd::set_backend(simd::Backend::neon), std::invalid_argument);
    simd::set_backend(before);
    CHECK(simd::active().backend == before);
    CHECK(simd::backend_name(simd::Backend::avx2) == "avx2");
  }
}
