#pragma once

// Independent dense reference implementations and small data generators used
// by the unit tests and the acceptance runner. Nothing here calls the library
// kernels it is meant to check.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "gldgcn/dataset.hpp"
#include "gldgcn/dense.hpp"
#include "gldgcn/graph.hpp"
#include "gldgcn/rng.hpp"

namespace oracle {

using gldgcn::CsrMatrix;
using gldgcn::DenseMatrix;

inline DenseMatrix random_matrix(std::size_t r, std::size_t c, gldgcn::RngStream& rng, double lo = -1.0,
                                 double hi = 1.0) {
  DenseMatrix m(r, c);
  for (double& v : m.values()) v = lo + (hi - lo) * rng.uniform();
  return m;
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  if (!a.same_shape(b)) return INFINITY;
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a.values()[k] - b.values()[k]));
  return worst;
}

inline double max_abs(const DenseMatrix& a) {
  double worst = 0.0;
  for (double v : a.values()) worst = std::max(worst, std::abs(v));
  return worst;
}

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

inline DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

inline DenseMatrix relu(DenseMatrix a) {
  for (double& v : a.values()) v = v > 0.0 ? v : 0.0;
  return a;
}

inline DenseMatrix softmax_rows(const DenseMatrix& a) {
  DenseMatrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double mx = -INFINITY;
    for (std::size_t j = 0; j < a.cols(); ++j) mx = std::max(mx, a(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) z += std::exp(a(i, j) - mx);
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = std::exp(a(i, j) - mx) / z;
  }
  return out;
}

inline DenseMatrix adjacency(const gldgcn::Graph& g) {
  DenseMatrix a(g.num_nodes(), g.num_nodes());
  const auto& m = g.adjacency();
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) a(i, m.col_idx[k]) = m.values[k];
  return a;
}

inline DenseMatrix plus_identity(DenseMatrix a) {
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += 1.0;
  return a;
}

inline DenseMatrix sym_normalize(const DenseMatrix& a) {
  std::vector<double> d(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) d[i] += a(i, j);
  DenseMatrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (d[i] > 0.0 && d[j] > 0.0) out(i, j) = a(i, j) / std::sqrt(d[i] * d[j]);
  return out;
}

/// softmax(op relu(op x w0) w1 ...) with ReLU between layers.
inline DenseMatrix gcn_forward(const DenseMatrix& op, const DenseMatrix& x, const std::vector<DenseMatrix>& w) {
  DenseMatrix h = x;
  for (std::size_t l = 0; l < w.size(); ++l) {
    h = oracle::matmul(op, oracle::matmul(h, w[l]));
    if (l + 1 < w.size()) h = oracle::relu(h);
  }
  return oracle::softmax_rows(h);
}

/// S_ij = m_ij exp(relu(a . |h_i - h_j|)) / sum_j (same), with m the weight pattern.
inline DenseMatrix learned_s(const DenseMatrix& h, const DenseMatrix& a, const DenseMatrix& mask) {
  const std::size_t n = h.rows();
  DenseMatrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (mask(i, j) == 0.0) continue;
      double e = 0.0;
      for (std::size_t k = 0; k < h.cols(); ++k) e += a(k, 0) * std::abs(h(i, k) - h(j, k));
      s(i, j) = mask(i, j) * std::exp(std::max(e, 0.0));
      z += s(i, j);
    }
    for (std::size_t j = 0; j < n; ++j) s(i, j) /= z;
  }
  return s;
}

/// Expected pair counts of one walk per node, by enumerating every walk.
inline DenseMatrix enumerate_walks(const CsrMatrix& m, int q, int w) {
  const std::size_t n = m.rows;
  DenseMatrix f(n, n);
  std::vector<std::uint32_t> path;
  std::function<void(double)> extend = [&](double prob) {
    const std::uint32_t u = path.back();
    double out = 0.0;
    for (std::size_t k = m.row_ptr[u]; k < m.row_ptr[u + 1]; ++k) out += m.values[k];
    const bool done = static_cast<int>(path.size()) == q + 1 || out <= 0.0;
    if (done) {
      for (std::size_t a = 0; a < path.size(); ++a)
        for (std::size_t b = a + 1; b < path.size() && static_cast<int>(b - a) <= w; ++b) {
          f(path[a], path[b]) += prob;
          f(path[b], path[a]) += prob;
        }
      return;
    }
    for (std::size_t k = m.row_ptr[u]; k < m.row_ptr[u + 1]; ++k) {
      path.push_back(m.col_idx[k]);
      extend(prob * m.values[k] / out);
      path.pop_back();
    }
  };
  for (std::uint32_t s = 0; s < n; ++s) {
    path = {s};
    extend(1.0);
  }
  return f;
}

inline DenseMatrix normalized(const DenseMatrix& f) {
  double total = 0.0;
  for (double v : f.values()) total += v;
  DenseMatrix out = f;
  for (double& v : out.values()) v /= total;
  return out;
}

/// Erdos-Renyi graph; every pair is an edge with probability p.
inline gldgcn::Graph random_graph(std::size_t n, double p, gldgcn::RngStream& rng) {
  std::vector<gldgcn::Edge> edges;
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = i + 1; j < n; ++j)
      if (rng.uniform() < p) edges.push_back({i, j});
  return gldgcn::build_graph(edges, n);
}

inline gldgcn::Graph path_graph(std::size_t n) {
  std::vector<gldgcn::Edge> edges;
  for (std::uint32_t i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
  return gldgcn::build_graph(edges, n);
}

/// Stochastic block model with class-correlated noisy features and a
/// planetoid split of `per_class` training nodes per class.
inline gldgcn::DatasetBundle sbm_dataset(std::size_t per_block, int classes, double p_in, double p_out,
                                         std::size_t features, std::uint64_t seed, int per_class = 5,
                                         std::size_t val = 20, std::size_t test = 60) {
  gldgcn::RngStream rng(seed);
  const std::size_t n = per_block * static_cast<std::size_t>(classes);
  gldgcn::DatasetBundle d;
  d.name = "sbm";
  d.classes = classes;
  d.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.y[i] = static_cast<int>(i % static_cast<std::size_t>(classes));
  std::vector<gldgcn::Edge> edges;
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = i + 1; j < n; ++j)
      if (rng.uniform() < (d.y[i] == d.y[j] ? p_in : p_out)) edges.push_back({i, j});
  d.graph = gldgcn::build_graph(edges, n);
  d.edge_lines = edges.size();
  d.x = DenseMatrix(n, features);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < features; ++k) {
      const bool hot = k % static_cast<std::size_t>(classes) == static_cast<std::size_t>(d.y[i]);
      d.x(i, k) = rng.uniform() < (hot ? 0.3 : 0.1) ? 1.0 : 0.0;
    }
  const std::size_t rest = n - static_cast<std::size_t>(per_class * classes);
  val = std::min(val, rest / 3);
  test = std::min(test, rest - val);
  auto s = gldgcn::make_planetoid_split(d.y, classes, {per_class, val, test, seed});
  d.train = s.train;
  d.val = s.val;
  d.test = s.test;
  return d;
}

/// Scratch directory under the build tree (or the system temp dir), emptied first.
inline std::filesystem::path temp_dir(const std::string& name) {
  std::filesystem::path base = std::filesystem::temp_directory_path() / "gldgcn_tests";
  if (const char* env = std::getenv("GLDGCN_TEST_TMP")) base = env;
  auto dir = base / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
