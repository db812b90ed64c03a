#pragma once

#include <cstdint>
#include <string>

#include "gldgcn/dense.hpp"

namespace gldgcn {

/// A trainable tensor with its accumulated gradient.
struct Parameter {
  std::string name;
  DenseMatrix value;
  DenseMatrix grad;

  Parameter() = default;
  Parameter(std::string n, DenseMatrix v)
      : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

  void zero_grad() { grad = DenseMatrix(value.rows(), value.cols()); }
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  DenseMatrix m;
  DenseMatrix v;
  std::uint64_t step = 0;
};

/// One Adam update with an L2 term weight_decay * value folded into the
/// gradient. Zeroes p.grad afterwards. Throws ConfigError when lr <= 0.
void adam_step(Parameter& p, AdamState& state, double lr, double weight_decay,
               const AdamConfig& cfg = {});

}  // namespace gldgcn
