#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "gldgcn/dense.hpp"
#include "gldgcn/graph.hpp"
#include "gldgcn/tape.hpp"

namespace gldgcn {

struct GlConfig {
  double gamma_reg = 0.01;  ///< weight of ||S||_F^2
  double beta = 0.1;        ///< weight of ||S - A||_F^2 (graph inputs only)

  void validate() const;
};

/// Largest node count accepted for a dense (unmasked) learned graph.
inline constexpr std::size_t kDenseNodeLimit = 20000;

/// Bytes needed to hold the dense pattern, scores, S and their gradients.
std::size_t dense_graph_bytes(std::size_t n);

/// Full n x n pattern with unit weights. Throws ConfigError beyond
/// kDenseNodeLimit.
std::shared_ptr<const CsrMatrix> dense_support(std::size_t n);

/// Pattern and weights of a graph that already carries self-loops. Throws
/// DataError when a row has no stored entry.
std::shared_ptr<const CsrMatrix> masked_support(const Graph& with_self_loops);

/// ||x_i - x_j||^2 for every stored entry (i, j) of the support.
std::shared_ptr<const std::vector<double>> pair_sq_distances(const DenseMatrix& x,
                                                              const CsrMatrix& support);

/// S restricted to its support. Values are row-stochastic on every row with
/// a nonempty support.
struct LearnedGraph {
  std::shared_ptr<const CsrMatrix> support;
  CsrMatrix s;
  bool masked = false;

  DenseMatrix dense() const { return to_dense(s); }
};

/// S_ij = w_ij exp(relu(a^T |h_i - h_j|)) / sum_j w_ij exp(relu(a^T |h_i - h_j|)),
/// recorded on the tape. h is n x p, a is p x 1; returns the 1 x nnz values.
Var learn_s(Tape& t, Var h, Var a, const std::shared_ptr<const CsrMatrix>& support);

/// Plain evaluations of the same layer.
LearnedGraph learn_s_dense(const DenseMatrix& x, const DenseMatrix& a);
LearnedGraph learn_s_masked(const DenseMatrix& x, const Graph& with_self_loops, const DenseMatrix& a);

/// sum_ij ||x_i - x_j||^2 S_ij + gamma ||S||^2, plus beta ||S - A||^2 against
/// the binary support when `with_graph` is set.
double gl_loss(const DenseMatrix& x, const LearnedGraph& s, bool with_graph, const GlConfig& cfg);

}  // namespace gldgcn
