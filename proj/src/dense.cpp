#include "gldgcn/dense.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "gldgcn/errors.hpp"
#include "gldgcn/simd.hpp"
#include "parallel.hpp"

namespace gldgcn {
namespace {

std::atomic<int> g_threads{1};

std::string shape_str(const DenseMatrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("DenseMatrix: data length " + std::to_string(data_.size()) +
                     " does not match " + std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void DenseMatrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool DenseMatrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void set_kernel_threads(int threads) { g_threads.store(std::max(1, threads)); }
int kernel_threads() { return g_threads.load(); }

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + shape_str(a) + " * " + shape_str(b));
  }
  DenseMatrix c(a.rows(), b.cols());
  const auto& k = simd::active();
  const std::size_t inner = a.cols();
  const std::size_t out_cols = b.cols();
  detail::parallel_rows(a.rows(), inner * out_cols, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const double* arow = a.data() + i * inner;
      double* crow = c.data() + i * out_cols;
      for (std::size_t p = 0; p < inner; ++p) {
        const double v = arow[p];
        if (v != 0.0) k.axpy(v, b.data() + p * out_cols, crow, out_cols);
      }
    }
  });
  return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: " + shape_str(a) + "^T * " + shape_str(b));
  }
  DenseMatrix c(a.cols(), b.cols());
  const auto& k = simd::active();
  const std::size_t out_cols = b.cols();
  // Row p of a scatters into every row of c; the accumulation order over p
  // is fixed, so this stays serial.
  for (std::size_t p = 0; p < a.rows(); ++p) {
    const double* arow = a.data() + p * a.cols();
    const double* brow = b.data() + p * out_cols;
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double v = arow[i];
      if (v != 0.0) k.axpy(v, brow, c.data() + i * out_cols, out_cols);
    }
  }
  return c;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: " + shape_str(a) + " * " + shape_str(b) + "^T");
  }
  DenseMatrix c(a.rows(), b.rows());
  const auto& k = simd::active();
  const std::size_t inner = a.cols();
  detail::parallel_rows(a.rows(), inner * b.rows(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = 0; j < b.rows(); ++j) {
        c(i, j) = k.dot(a.data() + i * inner, b.data() + j * inner, inner);
      }
    }
  });
  return c;
}

DenseMatrix relu(const DenseMatrix& x) {
  DenseMatrix y(x.rows(), x.cols());
  simd::active().relu(x.data(), y.data(), x.size());
  return y;
}

DenseMatrix row_softmax(const DenseMatrix& x) {
  DenseMatrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto in = x.row(i);
    auto out = y.row(i);
    if (in.empty()) continue;
    const double mx = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      out[j] = std::exp(in[j] - mx);
      z += out[j];
    }
    const double inv = 1.0 / z;
    for (double& v : out) v *= inv;
  }
  return y;
}

DenseMatrix dropout(const DenseMatrix& x, double rate, RngStream& rng, bool training,
                    std::vector<double>* mask) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) {
    if (mask) mask->clear();
    return x;
  }
  const double keep_scale = 1.0 / (1.0 - rate);
  DenseMatrix y(x.rows(), x.cols());
  if (mask) mask->assign(x.size(), 0.0);
  for (std::size_t t = 0; t < x.size(); ++t) {
    const double v = x.data()[t];
    if (v == 0.0) continue;
    if (rng.uniform() >= rate) {
      y.data()[t] = v * keep_scale;
      if (mask) (*mask)[t] = keep_scale;
    }
  }
  return y;
}

DenseMatrix row_normalize(const DenseMatrix& x) {
  DenseMatrix y = x;
  for (std::size_t i = 0; i < y.rows(); ++i) {
    auto r = y.row(i);
    double s = 0.0;
    for (double v : r) s += std::fabs(v);
    if (s > 0.0) {
      for (double& v : r) v /= s;
    }
  }
  return y;
}

double masked_cross_entropy(const DenseMatrix& z, std::span<const int> labels,
                            std::span<const std::size_t> mask, Reduction reduction) {
  if (mask.empty()) throw DataError("masked_cross_entropy: empty mask");
  if (labels.size() != z.rows()) throw ShapeError("masked_cross_entropy: label count mismatch");
  double loss = 0.0;
  for (std::size_t l : mask) {
    if (l >= z.rows()) throw DataError("masked_cross_entropy: mask index out of range");
    const int y = labels[l];
    if (y < 0 || static_cast<std::size_t>(y) >= z.cols()) {
      throw DataError("masked_cross_entropy: label " + std::to_string(y) + " out of class range");
    }
    loss -= std::log(std::max(z(l, static_cast<std::size_t>(y)), kLogClamp));
  }
  if (reduction == Reduction::mean) loss /= static_cast<double>(mask.size());
  return loss;
}

double branch_agreement_loss(const DenseMatrix& zp, const DenseMatrix& za) {
  if (!zp.same_shape(za)) {
    throw ShapeError("branch_agreement_loss: " + shape_str(zp) + " vs " + shape_str(za));
  }
  if (zp.rows() == 0) return 0.0;
  const double s = simd::active().sqdist(zp.data(), za.data(), zp.size());
  return s / static_cast<double>(zp.rows());
}

std::vector<int> row_argmax(const DenseMatrix& z) {
  std::vector<int> out(z.rows(), 0);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto r = z.row(i);
    std::size_t best = 0;
    for (std::size_t j = 1; j < r.size(); ++j) {
      if (r[j] > r[best]) best = j;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

}  // namespace gldgcn
