#pragma once

// Recorded-tape reverse pass over the fixed operation set used by the model:
// dense and sparse products, ReLU, dropout, row softmax, the learned-graph
// scorer and its support-restricted softmax, and the three loss terms.
//
// Each op appends a node holding its forward value and a closure that
// scatters the node's output gradient into its inputs. backward() walks the
// nodes in reverse insertion order, which is a valid topological order
// because inputs always precede outputs.

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "gldgcn/dense.hpp"
#include "gldgcn/graph.hpp"
#include "gldgcn/optim.hpp"
#include "gldgcn/rng.hpp"

namespace gldgcn {

struct Var {
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  std::size_t id = npos;
  bool valid() const { return id != npos; }
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const DenseMatrix& out_grad)>;

  /// Input that never receives a gradient. The shared overload avoids copying
  /// large feature matrices into every step's tape.
  Var constant(DenseMatrix value);
  Var constant(std::shared_ptr<const DenseMatrix> value);
  /// Leaf bound to a Parameter; backward() adds into p.grad.
  Var parameter(Parameter& p);
  /// Leaf that records a gradient but is not bound to a Parameter.
  Var variable(DenseMatrix value);

  Var push(DenseMatrix value, bool requires_grad, BackwardFn backward);

  const DenseMatrix& value(Var v) const;
  double scalar(Var v) const;
  bool requires_grad(Var v) const;
  /// Gradient buffer of v, zero-initialized on first access.
  DenseMatrix& grad(Var v);
  /// Gradient of v after backward(); empty when nothing flowed into it.
  const DenseMatrix& grad_or_empty(Var v) const;

  /// Seeds d(loss)/d(loss) = 1 and runs every recorded closure in reverse.
  /// Throws std::logic_error when the tape is empty or loss is not 1x1.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  /// Bytes held by owned values and gradients; peak over the tape's lifetime.
  std::size_t bytes_in_use() const { return bytes_; }
  std::size_t peak_bytes() const { return peak_; }

 private:
  struct Node {
    std::shared_ptr<const DenseMatrix> value;
    DenseMatrix grad;
    bool requires_grad = false;
    bool owned = true;
    Parameter* param = nullptr;
    BackwardFn backward;
  };

  Var append(Node node);
  void account(std::size_t bytes);

  std::vector<Node> nodes_;
  std::size_t bytes_ = 0;
  std::size_t peak_ = 0;
};

namespace ad {

Var matmul(Tape& t, Var a, Var b);
/// op * h with a constant sparse operator.
Var propagate(Tape& t, std::shared_ptr<const CsrMatrix> op, Var h);
/// D^{-1/2} S D^{-1/2} h, where S has the sparsity pattern of `support`, its
/// stored values are the 1 x nnz row vector s, and D is the row sum of S.
Var propagate_normalized(Tape& t, std::shared_ptr<const CsrMatrix> support, Var s, Var h);
Var relu(Tape& t, Var x);
/// Inverted dropout; returns x unchanged in eval mode or when rate is 0.
Var dropout(Tape& t, Var x, double rate, RngStream& rng, bool training);
Var row_softmax(Tape& t, Var x);

Var add(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double factor);
Var sum(Tape& t, Var x);
/// sum of squared entries
Var sum_squares(Tape& t, Var x);

Var masked_cross_entropy(Tape& t, Var z, std::span<const int> labels,
                         std::span<const std::size_t> mask, Reduction reduction);
/// (1/n) * ||zp - za||_F^2
Var branch_agreement(Tape& t, Var zp, Var za);

/// e_k = a^T |h_i - h_j| for every stored entry k = (i, j) of `support`.
/// h is n x p, a is p x 1; the result is 1 x nnz.
Var pair_scores(Tape& t, Var h, Var a, std::shared_ptr<const CsrMatrix> support);
/// Per-row softmax over the stored entries of `support`, each term weighted
/// by the stored support value: S_k = w_k exp(r_k) / sum_row w exp(r).
Var support_softmax(Tape& t, Var r, std::shared_ptr<const CsrMatrix> support);
/// sum_k dist2_k s_k + gamma sum_k s_k^2 (+ beta sum_k (s_k - 1)^2 when
/// fidelity is set; entries outside the support contribute nothing because
/// both S and the binary target vanish there).
Var graph_learning_loss(Tape& t, Var s, std::shared_ptr<const std::vector<double>> dist2,
                        double gamma, double beta, bool fidelity);

}  // namespace ad
}  // namespace gldgcn
