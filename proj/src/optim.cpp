#include "gldgcn/optim.hpp"

#include <cmath>

#include "gldgcn/errors.hpp"

namespace gldgcn {

void adam_step(Parameter& p, AdamState& s, double lr, double weight_decay, const AdamConfig& cfg) {
  if (!(lr > 0.0)) throw ConfigError("adam_step: learning rate must be positive");
  if (!p.grad.same_shape(p.value)) throw ShapeError("adam_step: gradient shape mismatch");
  if (s.m.empty() && !p.value.empty()) {
    s.m = DenseMatrix(p.value.rows(), p.value.cols());
    s.v = DenseMatrix(p.value.rows(), p.value.cols());
  }
  ++s.step;
  const double t = static_cast<double>(s.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  double* w = p.value.data();
  const double* g = p.grad.data();
  double* m = s.m.data();
  double* v = s.v.data();
  for (std::size_t k = 0; k < p.value.size(); ++k) {
    const double gk = g[k] + weight_decay * w[k];
    m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * gk;
    v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * gk * gk;
    const double mhat = m[k] / c1;
    const double vhat = v[k] / c2;
    w[k] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
  p.zero_grad();
}

}  // namespace gldgcn
