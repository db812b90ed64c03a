#include "gldgcn/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "gldgcn/errors.hpp"
#include "gldgcn/simd.hpp"
#include "parallel.hpp"

namespace gldgcn {

double CsrMatrix::at(std::size_t i, std::size_t j) const {
  const auto b = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
  const auto e = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
  const auto it = std::lower_bound(b, e, static_cast<std::uint32_t>(j));
  if (it == e || *it != j) return 0.0;
  return values[static_cast<std::size_t>(it - col_idx.begin())];
}

bool CsrMatrix::same_pattern(const CsrMatrix& o) const {
  return rows == o.rows && cols == o.cols && row_ptr == o.row_ptr && col_idx == o.col_idx;
}

CsrMatrix csr_from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets) {
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  CsrMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.row_ptr.assign(rows + 1, 0);
  for (std::size_t t = 0; t < triplets.size(); ++t) {
    const Triplet& tr = triplets[t];
    if (tr.row >= rows || tr.col >= cols) throw DataError("csr_from_triplets: index out of range");
    if (!m.col_idx.empty() && t > 0 && triplets[t - 1].row == tr.row &&
        triplets[t - 1].col == tr.col) {
      m.values.back() += tr.value;
      continue;
    }
    m.col_idx.push_back(tr.col);
    m.values.push_back(tr.value);
    ++m.row_ptr[tr.row + 1];
  }
  for (std::size_t i = 0; i < rows; ++i) m.row_ptr[i + 1] += m.row_ptr[i];
  return m;
}

CsrMatrix csr_from_dense(const DenseMatrix& d) {
  CsrMatrix m;
  m.rows = d.rows();
  m.cols = d.cols();
  m.row_ptr.assign(m.rows + 1, 0);
  for (std::size_t i = 0; i < d.rows(); ++i) {
    for (std::size_t j = 0; j < d.cols(); ++j) {
      if (d(i, j) != 0.0) {
        m.col_idx.push_back(static_cast<std::uint32_t>(j));
        m.values.push_back(d(i, j));
      }
    }
    m.row_ptr[i + 1] = m.col_idx.size();
  }
  return m;
}

DenseMatrix to_dense(const CsrMatrix& m) {
  DenseMatrix d(m.rows, m.cols);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) d(i, m.col_idx[k]) = m.values[k];
  }
  return d;
}

CsrMatrix transpose(const CsrMatrix& m) {
  CsrMatrix t;
  t.rows = m.cols;
  t.cols = m.rows;
  t.row_ptr.assign(t.rows + 1, 0);
  for (std::uint32_t c : m.col_idx) ++t.row_ptr[c + 1];
  for (std::size_t i = 0; i < t.rows; ++i) t.row_ptr[i + 1] += t.row_ptr[i];
  t.col_idx.resize(m.nnz());
  t.values.resize(m.nnz());
  std::vector<std::size_t> cursor(t.row_ptr.begin(), t.row_ptr.end() - 1);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) {
      const std::size_t dst = cursor[m.col_idx[k]]++;
      t.col_idx[dst] = static_cast<std::uint32_t>(i);
      t.values[dst] = m.values[k];
    }
  }
  return t;
}

CsrMatrix full_pattern(std::size_t n, double value) {
  CsrMatrix m;
  m.rows = n;
  m.cols = n;
  m.row_ptr.resize(n + 1);
  m.col_idx.resize(n * n);
  m.values.assign(n * n, value);
  for (std::size_t i = 0; i <= n; ++i) m.row_ptr[i] = i * n;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m.col_idx[i * n + j] = static_cast<std::uint32_t>(j);
  }
  return m;
}

CsrMatrix identity_csr(std::size_t n) {
  CsrMatrix m;
  m.rows = n;
  m.cols = n;
  m.row_ptr.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) m.row_ptr[i] = i;
  m.col_idx.resize(n);
  for (std::size_t i = 0; i < n; ++i) m.col_idx[i] = static_cast<std::uint32_t>(i);
  m.values.assign(n, 1.0);
  return m;
}

Graph::Graph(CsrMatrix adjacency, bool weighted) : adj_(std::move(adjacency)), weighted_(weighted) {
  if (adj_.rows != adj_.cols) throw ShapeError("Graph: adjacency must be square");
}

std::size_t Graph::num_self_loops() const {
  std::size_t s = 0;
  for (std::size_t i = 0; i < adj_.rows; ++i) {
    if (adj_.at(i, i) != 0.0) ++s;
  }
  return s;
}

std::size_t Graph::num_edges() const {
  const std::size_t loops = num_self_loops();
  return (adj_.nnz() - loops) / 2 + loops;
}

Graph build_graph(std::span<const Edge> edges, std::size_t n) {
  std::vector<Triplet> trips;
  trips.reserve(edges.size() * 2);
  bool weighted = false;
  for (const Edge& e : edges) {
    if (e.u >= n || e.v >= n) {
      throw DataError("build_graph: edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                      ") out of range for n=" + std::to_string(n));
    }
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw DataError("build_graph: non-positive weight on edge (" + std::to_string(e.u) + ", " +
                      std::to_string(e.v) + ")");
    }
    if (e.weight != 1.0) weighted = true;
    trips.push_back({std::min(e.u, e.v), std::max(e.u, e.v), e.weight});
  }
  // Sum duplicates once on the upper triangle, then mirror, so that both
  // halves hold bit-identical values.
  const CsrMatrix upper = csr_from_triplets(n, n, std::move(trips));
  std::vector<Triplet> both;
  both.reserve(upper.nnz() * 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = upper.row_ptr[i]; k < upper.row_ptr[i + 1]; ++k) {
      const auto u = static_cast<std::uint32_t>(i);
      both.push_back({u, upper.col_idx[k], upper.values[k]});
      if (upper.col_idx[k] != u) both.push_back({upper.col_idx[k], u, upper.values[k]});
    }
  }
  CsrMatrix adj = csr_from_triplets(n, n, std::move(both));
  // Collapsed duplicates produce non-unit weights.
  for (double w : adj.values) {
    if (w != 1.0) weighted = true;
  }
  return Graph(std::move(adj), weighted);
}

Graph add_self_loops(const Graph& g) {
  const CsrMatrix& a = g.adjacency();
  std::vector<Triplet> trips;
  trips.reserve(a.nnz() + a.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
      trips.push_back({static_cast<std::uint32_t>(i), a.col_idx[k], a.values[k]});
    }
    trips.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i), 1.0});
  }
  CsrMatrix out = csr_from_triplets(a.rows, a.cols, std::move(trips));
  bool weighted = false;
  for (double w : out.values) {
    if (w != 1.0) weighted = true;
  }
  return Graph(std::move(out), weighted);
}

std::vector<double> degrees(const CsrMatrix& m) {
  std::vector<double> d(m.rows, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    double s = 0.0;
    for (std::size_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) s += m.values[k];
    d[i] = s;
  }
  return d;
}

namespace {

std::vector<double> inv_sqrt(const std::vector<double>& d) {
  std::vector<double> r(d.size(), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) r[i] = d[i] > 0.0 ? 1.0 / std::sqrt(d[i]) : 0.0;
  return r;
}

}  // namespace

CsrMatrix sym_normalize(const CsrMatrix& m) {
  if (m.rows != m.cols) throw ShapeError("sym_normalize: matrix must be square");
  for (double v : m.values) {
    if (v < 0.0) throw DataError("sym_normalize: negative entry");
  }
  const std::vector<double> r = inv_sqrt(degrees(m));
  CsrMatrix out = m;
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) {
      out.values[k] = m.values[k] * r[i] * r[m.col_idx[k]];
    }
  }
  return out;
}

DenseMatrix sym_normalize(const DenseMatrix& m) {
  if (m.rows() != m.cols()) throw ShapeError("sym_normalize: matrix must be square");
  std::vector<double> d(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (double v : m.row(i)) {
      if (v < 0.0) throw DataError("sym_normalize: negative entry");
      d[i] += v;
    }
  }
  const std::vector<double> r = inv_sqrt(d);
  DenseMatrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j) * r[i] * r[j];
  }
  return out;
}

DenseMatrix spmm(const CsrMatrix& op, const DenseMatrix& h) {
  if (op.cols != h.rows()) {
    throw ShapeError("spmm: operator " + std::to_string(op.rows) + "x" + std::to_string(op.cols) +
                     " vs dense " + std::to_string(h.rows()) + "x" + std::to_string(h.cols()));
  }
  DenseMatrix out(op.rows, h.cols());
  const auto& k = simd::active();
  const std::size_t d = h.cols();
  const std::size_t avg_nnz = op.rows ? op.nnz() / op.rows + 1 : 1;
  detail::parallel_rows(op.rows, avg_nnz * d, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      double* orow = out.data() + i * d;
      for (std::size_t p = op.row_ptr[i]; p < op.row_ptr[i + 1]; ++p) {
        k.axpy(op.values[p], h.data() + static_cast<std::size_t>(op.col_idx[p]) * d, orow, d);
      }
    }
  });
  return out;
}

DenseMatrix spmm_transpose(const CsrMatrix& op, const DenseMatrix& h) {
  if (op.rows != h.rows()) throw ShapeError("spmm_transpose: dimension mismatch");
  DenseMatrix out(op.cols, h.cols());
  const auto& k = simd::active();
  const std::size_t d = h.cols();
  for (std::size_t i = 0; i < op.rows; ++i) {
    const double* hrow = h.data() + i * d;
    for (std::size_t p = op.row_ptr[i]; p < op.row_ptr[i + 1]; ++p) {
      k.axpy(op.values[p], hrow, out.data() + static_cast<std::size_t>(op.col_idx[p]) * d, d);
    }
  }
  return out;
}

namespace {

bool parse_u32(std::string_view s, std::uint32_t& out) {
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> f;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == '\t' || line[i] == ' ' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != '\t' && line[j] != ' ' && line[j] != '\r') ++j;
    if (j > i) f.push_back(line.substr(i, j - i));
    i = j;
  }
  return f;
}

}  // namespace

EdgeListFile read_edge_list(std::istream& in) {
  EdgeListFile out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv(line);
    const auto first = sv.find_first_not_of(" \t\r");
    if (first == std::string_view::npos || sv[first] == '#') continue;
    const auto f = split_fields(sv);
    Edge e;
    if ((f.size() != 2 && f.size() != 3) || !parse_u32(f[0], e.u) || !parse_u32(f[1], e.v)) {
      throw DataError("edge list line " + std::to_string(lineno) + ": expected 'i<TAB>j[<TAB>w]'");
    }
    if (f.size() == 3) {
      try {
        std::size_t used = 0;
        e.weight = std::stod(std::string(f[2]), &used);
        if (used != f[2].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw DataError("edge list line " + std::to_string(lineno) + ": bad weight");
      }
      out.has_weights = true;
    }
    out.max_index = std::max({out.max_index, e.u, e.v});
    out.edges.push_back(e);
    ++out.data_lines;
  }
  return out;
}

EdgeListFile read_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open edge list: " + path);
  return read_edge_list(in);
}

void write_edge_list(std::ostream& out, const Graph& g) {
  const CsrMatrix& a = g.adjacency();
  char buf[64];
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
      const std::size_t j = a.col_idx[k];
      if (j < i) continue;
      out << i << '\t' << j;
      if (g.is_weighted()) {
        std::snprintf(buf, sizeof buf, "%.17g", a.values[k]);
        out << '\t' << buf;
      }
      out << '\n';
    }
  }
}

}  // namespace gldgcn
