#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gldgcn/rng.hpp"

namespace gldgcn {

/// Row-major matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  void fill(double v);
  bool same_shape(const DenseMatrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool all_finite() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Caps the number of worker threads used by row-parallel kernels. Results do
/// not depend on the thread count: every output row is computed by exactly one
/// worker in a fixed order.
void set_kernel_threads(int threads);
int kernel_threads();

/// a * b. Zero entries of a are skipped, which makes sparse feature matrices cheap.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// a^T * b
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
/// a * b^T
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);

DenseMatrix relu(const DenseMatrix& x);
/// Row-wise softmax with per-row max subtraction.
DenseMatrix row_softmax(const DenseMatrix& x);

/// Inverted dropout. Only nonzero entries consume random draws (a zero stays
/// zero either way), so sparse inputs are cheap. Returns the keep-mask scale
/// per entry (0 or 1/(1-rate)) through `mask` when non-null.
DenseMatrix dropout(const DenseMatrix& x, double rate, RngStream& rng, bool training,
                    std::vector<double>* mask = nullptr);

/// Scales each row to unit L1 norm; all-zero rows are left untouched.
DenseMatrix row_normalize(const DenseMatrix& x);

enum class Reduction { sum, mean };

/// Probability floor inside ln() for the cross-entropy.
inline constexpr double kLogClamp = 1e-12;

/// -sum_{l in mask} ln z[l, label(l)], optionally divided by |mask|.
double masked_cross_entropy(const DenseMatrix& z, std::span<const int> labels,
                            std::span<const std::size_t> mask, Reduction reduction = Reduction::sum);

/// (1/n) * sum_i ||zp_i - za_i||^2.
double branch_agreement_loss(const DenseMatrix& zp, const DenseMatrix& za);

/// argmax per row, lowest index on ties.
std::vector<int> row_argmax(const DenseMatrix& z);

}  // namespace gldgcn
