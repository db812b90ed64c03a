#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "gldgcn/dense.hpp"

namespace gldgcn {

/// Compressed sparse row matrix. Column indices within a row are strictly
/// increasing.
struct CsrMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::uint32_t> col_idx;
  std::vector<double> values;

  std::size_t nnz() const { return col_idx.size(); }
  std::size_t row_begin(std::size_t i) const { return row_ptr[i]; }
  std::size_t row_end(std::size_t i) const { return row_ptr[i + 1]; }
  /// Stored value at (i, j), or 0 when (i, j) is outside the pattern.
  double at(std::size_t i, std::size_t j) const;
  bool same_pattern(const CsrMatrix& o) const;

  friend bool operator==(const CsrMatrix&, const CsrMatrix&) = default;
};

struct Triplet {
  std::uint32_t row;
  std::uint32_t col;
  double value;
};

/// Builds a CSR matrix; duplicate (row, col) entries are summed.
CsrMatrix csr_from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets);
CsrMatrix csr_from_dense(const DenseMatrix& m);
DenseMatrix to_dense(const CsrMatrix& m);
CsrMatrix transpose(const CsrMatrix& m);
/// Full n x n pattern with every entry set to `value`.
CsrMatrix full_pattern(std::size_t n, double value = 1.0);
CsrMatrix identity_csr(std::size_t n);

struct Edge {
  std::uint32_t u;
  std::uint32_t v;
  double weight = 1.0;
};

/// Undirected graph stored as a symmetric CSR adjacency.
class Graph {
 public:
  Graph() = default;
  Graph(CsrMatrix adjacency, bool weighted);

  std::size_t num_nodes() const { return adj_.rows; }
  /// Undirected edge count, self-loops counted once.
  std::size_t num_edges() const;
  std::size_t num_self_loops() const;
  const CsrMatrix& adjacency() const { return adj_; }
  bool is_weighted() const { return weighted_; }

 private:
  CsrMatrix adj_;
  bool weighted_ = false;
};

/// Symmetrizes and deduplicates an edge list. (i, j) and (j, i) name the same
/// undirected edge; repeated mentions sum their weights. Self-edges are kept.
Graph build_graph(std::span<const Edge> edges, std::size_t n);

/// A + I; existing self-loops are incremented by 1.
Graph add_self_loops(const Graph& g);

/// Row sums.
std::vector<double> degrees(const CsrMatrix& m);

/// D^{-1/2} M D^{-1/2} with D the row-sum degree of M; zero-degree rows and
/// columns map to zero. Throws DataError on negative entries.
CsrMatrix sym_normalize(const CsrMatrix& m);
DenseMatrix sym_normalize(const DenseMatrix& m);

/// op * h
DenseMatrix spmm(const CsrMatrix& op, const DenseMatrix& h);
/// op^T * h
DenseMatrix spmm_transpose(const CsrMatrix& op, const DenseMatrix& h);

struct EdgeListFile {
  std::vector<Edge> edges;
  std::size_t data_lines = 0;    ///< non-comment, non-blank lines
  std::uint32_t max_index = 0;   ///< largest node index seen
  bool has_weights = false;
};

/// Parses "i<TAB>j" / "i<TAB>j<TAB>w" lines; '#' comments and blank lines are skipped.
EdgeListFile read_edge_list(std::istream& in);
EdgeListFile read_edge_list(const std::string& path);
void write_edge_list(std::ostream& out, const Graph& g);

}  // namespace gldgcn
