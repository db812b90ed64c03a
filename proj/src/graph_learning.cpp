#include "gldgcn/graph_learning.hpp"

#include <string>

#include "gldgcn/errors.hpp"
#include "gldgcn/simd.hpp"

namespace gldgcn {
namespace {

LearnedGraph evaluate(const DenseMatrix& x, const DenseMatrix& a,
                      std::shared_ptr<const CsrMatrix> support, bool masked) {
  Tape t;
  Var h = t.constant(x);
  Var av = t.constant(a);
  Var s = learn_s(t, h, av, support);
  LearnedGraph out;
  out.s = *support;
  out.s.values = t.value(s).values();
  out.support = std::move(support);
  out.masked = masked;
  return out;
}

}  // namespace

void GlConfig::validate() const {
  if (!(gamma_reg >= 0.0)) throw ConfigError("gamma_reg must be >= 0");
  if (!(beta >= 0.0)) throw ConfigError("beta must be >= 0");
}

std::size_t dense_graph_bytes(std::size_t n) {
  // pattern index + weight, then scores, relu, S and a gradient for each
  return n * n * (sizeof(std::uint32_t) + 7 * sizeof(double));
}

std::shared_ptr<const CsrMatrix> dense_support(std::size_t n) {
  if (n > kDenseNodeLimit) {
    throw ConfigError("dense graph learning is limited to " + std::to_string(kDenseNodeLimit) +
                      " nodes (got " + std::to_string(n) + "); supply edges or use cluster mode");
  }
  return std::make_shared<const CsrMatrix>(full_pattern(n, 1.0));
}

std::shared_ptr<const CsrMatrix> masked_support(const Graph& with_self_loops) {
  const CsrMatrix& adj = with_self_loops.adjacency();
  for (std::size_t i = 0; i < adj.rows; ++i) {
    if (adj.row_ptr[i] == adj.row_ptr[i + 1]) {
      throw DataError("graph learning: node " + std::to_string(i) + " has an empty support row");
    }
  }
  return std::make_shared<const CsrMatrix>(adj);
}

std::shared_ptr<const std::vector<double>> pair_sq_distances(const DenseMatrix& x,
                                                              const CsrMatrix& support) {
  const auto& k = simd::active();
  const std::size_t p = x.cols();
  auto out = std::make_shared<std::vector<double>>(support.nnz());
  for (std::size_t i = 0; i < support.rows; ++i) {
    for (std::size_t q = support.row_ptr[i]; q < support.row_ptr[i + 1]; ++q) {
      const std::size_t j = support.col_idx[q];
      (*out)[q] = i == j ? 0.0 : k.sqdist(x.data() + i * p, x.data() + j * p, p);
    }
  }
  return out;
}

Var learn_s(Tape& t, Var h, Var a, const std::shared_ptr<const CsrMatrix>& support) {
  Var scores = ad::pair_scores(t, h, a, support);
  return ad::support_softmax(t, ad::relu(t, scores), support);
}

LearnedGraph learn_s_dense(const DenseMatrix& x, const DenseMatrix& a) {
  return evaluate(x, a, dense_support(x.rows()), false);
}

LearnedGraph learn_s_masked(const DenseMatrix& x, const Graph& with_self_loops, const DenseMatrix& a) {
  if (with_self_loops.num_nodes() != x.rows()) {
    throw ShapeError("learn_s_masked: graph has " + std::to_string(with_self_loops.num_nodes()) +
                     " nodes, features " + std::to_string(x.rows()));
  }
  return evaluate(x, a, masked_support(with_self_loops), true);
}

double gl_loss(const DenseMatrix& x, const LearnedGraph& s, bool with_graph, const GlConfig& cfg) {
  cfg.validate();
  if (s.s.rows != x.rows()) throw ShapeError("gl_loss: S and X disagree on node count");
  Tape t;
  Var sv = t.constant(DenseMatrix(1, s.s.nnz(), s.s.values));
  Var loss = ad::graph_learning_loss(t, sv, pair_sq_distances(x, s.s), cfg.gamma_reg, cfg.beta, with_graph);
  return t.scalar(loss);
}

}  // namespace gldgcn
