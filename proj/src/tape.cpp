#include "gldgcn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "gldgcn/errors.hpp"
#include "gldgcn/simd.hpp"

namespace gldgcn {

Var Tape::append(Node node) {
  if (node.owned && node.value) account(node.value->size() * sizeof(double));
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

void Tape::account(std::size_t bytes) {
  bytes_ += bytes;
  peak_ = std::max(peak_, bytes_);
}

Var Tape::constant(DenseMatrix value) {
  Node n;
  n.value = std::make_shared<const DenseMatrix>(std::move(value));
  return append(std::move(n));
}

Var Tape::constant(std::shared_ptr<const DenseMatrix> value) {
  Node n;
  n.value = std::move(value);
  n.owned = false;
  return append(std::move(n));
}

Var Tape::parameter(Parameter& p) {
  Node n;
  n.value = std::shared_ptr<const DenseMatrix>(std::shared_ptr<void>(), &p.value);
  n.owned = false;
  n.requires_grad = true;
  n.param = &p;
  return append(std::move(n));
}

Var Tape::variable(DenseMatrix value) {
  Node n;
  n.value = std::make_shared<const DenseMatrix>(std::move(value));
  n.requires_grad = true;
  return append(std::move(n));
}

Var Tape::push(DenseMatrix value, bool requires_grad, BackwardFn backward) {
  Node n;
  n.value = std::make_shared<const DenseMatrix>(std::move(value));
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(backward);
  return append(std::move(n));
}

const DenseMatrix& Tape::value(Var v) const { return *nodes_.at(v.id).value; }

double Tape::scalar(Var v) const {
  const DenseMatrix& m = value(v);
  if (m.rows() != 1 || m.cols() != 1) throw ShapeError("Tape::scalar: not a 1x1 value");
  return m(0, 0);
}

bool Tape::requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

DenseMatrix& Tape::grad(Var v) {
  Node& n = nodes_.at(v.id);
  if (n.grad.empty() && !n.value->empty()) {
    n.grad = DenseMatrix(n.value->rows(), n.value->cols());
    account(n.grad.size() * sizeof(double));
  }
  return n.grad;
}

const DenseMatrix& Tape::grad_or_empty(Var v) const { return nodes_.at(v.id).grad; }

void Tape::backward(Var loss) {
  if (nodes_.empty() || !loss.valid() || loss.id >= nodes_.size()) {
    throw std::logic_error("backward called before a forward pass was recorded");
  }
  const DenseMatrix& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) throw std::logic_error("backward: loss must be 1x1");
  if (!nodes_[loss.id].requires_grad) return;
  grad(loss)(0, 0) = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward && !n.grad.empty()) n.backward(*this, n.grad);
  }
  for (Node& n : nodes_) {
    if (n.param && !n.grad.empty()) {
      simd::active().axpy(1.0, n.grad.data(), n.param->grad.data(), n.grad.size());
    }
  }
}

namespace ad {
namespace {

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  }
}

void add_into(DenseMatrix& dst, const DenseMatrix& src, double factor = 1.0) {
  simd::active().axpy(factor, src.data(), dst.data(), src.size());
}

}  // namespace

Var matmul(Tape& t, Var a, Var b) {
  DenseMatrix out = gldgcn::matmul(t.value(a), t.value(b));
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.push(std::move(out), rg, [a, b](Tape& tp, const DenseMatrix& g) {
    if (tp.requires_grad(a)) add_into(tp.grad(a), matmul_nt(g, tp.value(b)));
    if (tp.requires_grad(b)) add_into(tp.grad(b), matmul_tn(tp.value(a), g));
  });
}

Var propagate(Tape& t, std::shared_ptr<const CsrMatrix> op, Var h) {
  DenseMatrix out = spmm(*op, t.value(h));
  return t.push(std::move(out), t.requires_grad(h), [op, h](Tape& tp, const DenseMatrix& g) {
    add_into(tp.grad(h), spmm_transpose(*op, g));
  });
}

Var propagate_normalized(Tape& t, std::shared_ptr<const CsrMatrix> support, Var s, Var h) {
  const DenseMatrix& sv = t.value(s);
  if (sv.rows() != 1 || sv.cols() != support->nnz()) {
    throw ShapeError("propagate_normalized: value vector does not match support");
  }
  const std::size_t n = support->rows;
  auto inv_sqrt_deg = std::make_shared<std::vector<double>>(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    for (std::size_t k = support->row_ptr[i]; k < support->row_ptr[i + 1]; ++k) d += sv(0, k);
    if (d < 0.0) throw DataError("propagate_normalized: negative degree");
    (*inv_sqrt_deg)[i] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
  }
  auto op = std::make_shared<CsrMatrix>(*support);
  const auto& u = *inv_sqrt_deg;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = op->row_ptr[i]; k < op->row_ptr[i + 1]; ++k) {
      op->values[k] = u[i] * sv(0, k) * u[op->col_idx[k]];
    }
  }
  DenseMatrix out = spmm(*op, t.value(h));
  const bool rg = t.requires_grad(s) || t.requires_grad(h);
  return t.push(std::move(out), rg, [op, inv_sqrt_deg, s, h](Tape& tp, const DenseMatrix& g) {
    if (tp.requires_grad(h)) add_into(tp.grad(h), spmm_transpose(*op, g));
    if (!tp.requires_grad(s)) return;
    const auto& k = simd::active();
    const DenseMatrix& hv = tp.value(h);
    const DenseMatrix& svals = tp.value(s);
    DenseMatrix& gs = tp.grad(s);
    const std::vector<double>& u = *inv_sqrt_deg;
    const std::size_t rows = op->rows;
    const std::size_t d = hv.cols();
    std::vector<double> du(rows, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
      if (u[i] == 0.0) continue;
      for (std::size_t p = op->row_ptr[i]; p < op->row_ptr[i + 1]; ++p) {
        const std::size_t j = op->col_idx[p];
        const double inner = k.dot(g.data() + i * d, hv.data() + j * d, d);
        gs(0, p) += u[i] * u[j] * inner;
        du[i] += svals(0, p) * u[j] * inner;
        du[j] += svals(0, p) * u[i] * inner;
      }
    }
    // d u_i / d deg_i = -u_i^3 / 2, and deg_i is the sum of row i of S.
    for (std::size_t i = 0; i < rows; ++i) {
      if (u[i] == 0.0) continue;
      const double dd = -0.5 * u[i] * u[i] * u[i] * du[i];
      for (std::size_t p = op->row_ptr[i]; p < op->row_ptr[i + 1]; ++p) gs(0, p) += dd;
    }
  });
}

Var relu(Tape& t, Var x) {
  DenseMatrix out = gldgcn::relu(t.value(x));
  return t.push(std::move(out), t.requires_grad(x), [x](Tape& tp, const DenseMatrix& g) {
    const DenseMatrix& xv = tp.value(x);
    simd::active().relu_backward(xv.data(), g.data(), tp.grad(x).data(), xv.size());
  });
}

Var dropout(Tape& t, Var x, double rate, RngStream& rng, bool training) {
  if (!training || rate == 0.0) {
    if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout: rate must lie in [0, 1)");
    return x;
  }
  auto mask = std::make_shared<std::vector<double>>();
  DenseMatrix out = gldgcn::dropout(t.value(x), rate, rng, true, mask.get());
  return t.push(std::move(out), t.requires_grad(x), [x, mask](Tape& tp, const DenseMatrix& g) {
    DenseMatrix& gx = tp.grad(x);
    for (std::size_t k = 0; k < g.size(); ++k) gx.data()[k] += g.data()[k] * (*mask)[k];
  });
}

Var row_softmax(Tape& t, Var x) {
  DenseMatrix out = gldgcn::row_softmax(t.value(x));
  auto holder = std::make_shared<Var>();
  Var y = t.push(std::move(out), t.requires_grad(x), [x, holder](Tape& tp, const DenseMatrix& g) {
    const DenseMatrix& yv = tp.value(*holder);
    DenseMatrix& gx = tp.grad(x);
    const auto& k = simd::active();
    for (std::size_t i = 0; i < yv.rows(); ++i) {
      const double* yr = yv.data() + i * yv.cols();
      const double* gr = g.data() + i * g.cols();
      const double inner = k.dot(gr, yr, yv.cols());
      double* out = gx.data() + i * gx.cols();
      for (std::size_t j = 0; j < yv.cols(); ++j) out[j] += yr[j] * (gr[j] - inner);
    }
  });
  *holder = y;
  return y;
}

Var add(Tape& t, Var a, Var b) {
  require_same_shape(t.value(a), t.value(b), "add");
  DenseMatrix out = t.value(a);
  add_into(out, t.value(b));
  const bool rg = t.requires_grad(a) || t.requires_grad(b);
  return t.push(std::move(out), rg, [a, b](Tape& tp, const DenseMatrix& g) {
    if (tp.requires_grad(a)) add_into(tp.grad(a), g);
    if (tp.requires_grad(b)) add_into(tp.grad(b), g);
  });
}

Var scale(Tape& t, Var a, double factor) {
  DenseMatrix out = t.value(a);
  simd::active().scale(factor, out.data(), out.size());
  return t.push(std::move(out), t.requires_grad(a), [a, factor](Tape& tp, const DenseMatrix& g) {
    add_into(tp.grad(a), g, factor);
  });
}

Var sum(Tape& t, Var x) {
  double s = 0.0;
  for (double v : t.value(x).values()) s += v;
  return t.push(DenseMatrix(1, 1, s), t.requires_grad(x), [x](Tape& tp, const DenseMatrix& g) {
    DenseMatrix& gx = tp.grad(x);
    for (double& v : gx.values()) v += g(0, 0);
  });
}

Var sum_squares(Tape& t, Var x) {
  const DenseMatrix& xv = t.value(x);
  const double s = simd::active().dot(xv.data(), xv.data(), xv.size());
  return t.push(DenseMatrix(1, 1, s), t.requires_grad(x), [x](Tape& tp, const DenseMatrix& g) {
    add_into(tp.grad(x), tp.value(x), 2.0 * g(0, 0));
  });
}

Var masked_cross_entropy(Tape& t, Var z, std::span<const int> labels,
                         std::span<const std::size_t> mask, Reduction reduction) {
  const DenseMatrix& zv = t.value(z);
  const double loss = gldgcn::masked_cross_entropy(zv, labels, mask, reduction);
  const double factor = reduction == Reduction::mean ? 1.0 / static_cast<double>(mask.size()) : 1.0;
  auto picks = std::make_shared<std::vector<std::pair<std::size_t, std::size_t>>>();
  picks->reserve(mask.size());
  for (std::size_t l : mask) picks->emplace_back(l, static_cast<std::size_t>(labels[l]));
  return t.push(DenseMatrix(1, 1, loss), t.requires_grad(z),
                [z, picks, factor](Tape& tp, const DenseMatrix& g) {
                  const DenseMatrix& zval = tp.value(z);
                  DenseMatrix& gz = tp.grad(z);
                  for (auto [l, y] : *picks) {
                    const double p = zval(l, y);
                    // The clamp is flat below kLogClamp.
                    if (p > kLogClamp) gz(l, y) -= g(0, 0) * factor / p;
                  }
                });
}

Var branch_agreement(Tape& t, Var zp, Var za) {
  const double loss = branch_agreement_loss(t.value(zp), t.value(za));
  const bool rg = t.requires_grad(zp) || t.requires_grad(za);
  return t.push(DenseMatrix(1, 1, loss), rg, [zp, za](Tape& tp, const DenseMatrix& g) {
    const DenseMatrix& p = tp.value(zp);
    const DenseMatrix& a = tp.value(za);
    const double c = 2.0 * g(0, 0) / static_cast<double>(p.rows());
    DenseMatrix diff = p;
    add_into(diff, a, -1.0);
    if (tp.requires_grad(zp)) add_into(tp.grad(zp), diff, c);
    if (tp.requires_grad(za)) add_into(tp.grad(za), diff, -c);
  });
}

Var pair_scores(Tape& t, Var h, Var a, std::shared_ptr<const CsrMatrix> support) {
  const DenseMatrix& hv = t.value(h);
  const DenseMatrix& av = t.value(a);
  if (av.rows() != hv.cols() || av.cols() != 1) {
    throw ShapeError("pair_scores: scorer has " + std::to_string(av.rows()) + " entries, features " +
                     std::to_string(hv.cols()));
  }
  if (support->rows != hv.rows() || support->cols != hv.rows()) {
    throw ShapeError("pair_scores: support does not match node count");
  }
  const auto& k = simd::active();
  const std::size_t p = hv.cols();
  DenseMatrix out(1, support->nnz());
  for (std::size_t i = 0; i < support->rows; ++i) {
    for (std::size_t q = support->row_ptr[i]; q < support->row_ptr[i + 1]; ++q) {
      const std::size_t j = support->col_idx[q];
      out(0, q) = k.absdiff_dot(av.data(), hv.data() + i * p, hv.data() + j * p, p);
    }
  }
  const bool rg = t.requires_grad(h) || t.requires_grad(a);
  return t.push(std::move(out), rg, [h, a, support](Tape& tp, const DenseMatrix& g) {
    const auto& kk = simd::active();
    const DenseMatrix& hval = tp.value(h);
    const DenseMatrix& aval = tp.value(a);
    const std::size_t dim = hval.cols();
    const bool need_a = tp.requires_grad(a);
    const bool need_h = tp.requires_grad(h);
    double* ga = need_a ? tp.grad(a).data() : nullptr;
    double* gh = need_h ? tp.grad(h).data() : nullptr;
    for (std::size_t i = 0; i < support->rows; ++i) {
      const double* hi = hval.data() + i * dim;
      for (std::size_t q = support->row_ptr[i]; q < support->row_ptr[i + 1]; ++q) {
        const double gq = g(0, q);
        if (gq == 0.0) continue;
        const std::size_t j = support->col_idx[q];
        if (j == i) continue;  // |h_i - h_i| = 0 contributes nothing
        const double* hj = hval.data() + j * dim;
        if (need_a) kk.absdiff_axpy(gq, hi, hj, ga, dim);
        if (need_h) {
          kk.signdiff_axpy(gq, aval.data(), hi, hj, gh + i * dim, dim);
          kk.signdiff_axpy(-gq, aval.data(), hi, hj, gh + j * dim, dim);
        }
      }
    }
  });
}

Var support_softmax(Tape& t, Var r, std::shared_ptr<const CsrMatrix> support) {
  const DenseMatrix& rv = t.value(r);
  if (rv.rows() != 1 || rv.cols() != support->nnz()) {
    throw ShapeError("support_softmax: score vector does not match support");
  }
  DenseMatrix out(1, support->nnz());
  for (std::size_t i = 0; i < support->rows; ++i) {
    const std::size_t b = support->row_ptr[i];
    const std::size_t e = support->row_ptr[i + 1];
    if (b == e) continue;
    double mx = rv(0, b);
    for (std::size_t q = b + 1; q < e; ++q) mx = std::max(mx, rv(0, q));
    double z = 0.0;
    for (std::size_t q = b; q < e; ++q) {
      out(0, q) = support->values[q] * std::exp(rv(0, q) - mx);
      z += out(0, q);
    }
    if (z > 0.0) {
      const double inv = 1.0 / z;
      for (std::size_t q = b; q < e; ++q) out(0, q) *= inv;
    }
  }
  auto holder = std::make_shared<Var>();
  Var s = t.push(std::move(out), t.requires_grad(r), [r, holder, support](Tape& tp, const DenseMatrix& g) {
    const DenseMatrix& sv = tp.value(*holder);
    DenseMatrix& gr = tp.grad(r);
    for (std::size_t i = 0; i < support->rows; ++i) {
      const std::size_t b = support->row_ptr[i];
      const std::size_t e = support->row_ptr[i + 1];
      double inner = 0.0;
      for (std::size_t q = b; q < e; ++q) inner += g(0, q) * sv(0, q);
      for (std::size_t q = b; q < e; ++q) gr(0, q) += sv(0, q) * (g(0, q) - inner);
    }
  });
  *holder = s;
  return s;
}

Var graph_learning_loss(Tape& t, Var s, std::shared_ptr<const std::vector<double>> dist2,
                        double gamma, double beta, bool fidelity) {
  const DenseMatrix& sv = t.value(s);
  if (sv.rows() != 1 || sv.cols() != dist2->size()) {
    throw ShapeError("graph_learning_loss: distance vector does not match support");
  }
  double smooth = 0.0;
  double sparsity = 0.0;
  double fid = 0.0;
  for (std::size_t q = 0; q < sv.cols(); ++q) {
    const double v = sv(0, q);
    smooth += (*dist2)[q] * v;
    sparsity += v * v;
    if (fidelity) fid += (v - 1.0) * (v - 1.0);
  }
  const double loss = smooth + gamma * sparsity + (fidelity ? beta * fid : 0.0);
  return t.push(DenseMatrix(1, 1, loss), t.requires_grad(s),
                [s, dist2, gamma, beta, fidelity](Tape& tp, const DenseMatrix& g) {
                  const DenseMatrix& sval = tp.value(s);
                  DenseMatrix& gs = tp.grad(s);
                  const double c = g(0, 0);
                  for (std::size_t q = 0; q < sval.cols(); ++q) {
                    double d = (*dist2)[q] + 2.0 * gamma * sval(0, q);
                    if (fidelity) d += 2.0 * beta * (sval(0, q) - 1.0);
                    gs(0, q) += c * d;
                  }
                });
}

}  // namespace ad
}  // namespace gldgcn
