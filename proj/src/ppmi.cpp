#include "gldgcn/ppmi.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "gldgcn/errors.hpp"
#include "parallel.hpp"

namespace gldgcn {
namespace {

// Per-row cumulative weights for inverse-CDF sampling.
class WalkTable {
 public:
  explicit WalkTable(const CsrMatrix& m) : m_(m), cum_(m.nnz()) {
    if (m.rows != m.cols) throw ShapeError("random walk: matrix must be square");
    for (std::size_t i = 0; i < m.rows; ++i) {
      double acc = 0.0;
      for (std::size_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) {
        if (m.values[k] < 0.0) throw DataError("random walk: negative transition weight");
        acc += m.values[k];
        cum_[k] = acc;
      }
    }
  }

  // Returns false when i has no positive out-weight.
  bool step(std::uint32_t i, RngStream& rng, std::uint32_t& next) const {
    const std::size_t b = m_.row_ptr[i];
    const std::size_t e = m_.row_ptr[i + 1];
    if (b == e || !(cum_[e - 1] > 0.0)) return false;
    const double u = rng.uniform() * cum_[e - 1];
    auto it = std::upper_bound(cum_.begin() + static_cast<std::ptrdiff_t>(b),
                               cum_.begin() + static_cast<std::ptrdiff_t>(e), u);
    std::size_t k = static_cast<std::size_t>(it - cum_.begin());
    if (k >= e) k = e - 1;
    next = m_.col_idx[k];
    return true;
  }

  std::vector<std::uint32_t> walk(std::uint32_t start, int q, RngStream& rng, bool* truncated) const {
    std::vector<std::uint32_t> seq{start};
    seq.reserve(static_cast<std::size_t>(q) + 1);
    std::uint32_t cur = start;
    for (int t = 0; t < q; ++t) {
      std::uint32_t next = 0;
      if (!step(cur, rng, next)) {
        if (truncated) *truncated = true;
        break;
      }
      seq.push_back(next);
      cur = next;
    }
    return seq;
  }

 private:
  const CsrMatrix& m_;
  std::vector<double> cum_;
};

std::string cache_header(const PpmiCacheKey& key) {
  std::ostringstream h;
  h << "# ppmi n=" << key.n << " q=" << key.walk.q << " w=" << key.walk.w
    << " gamma=" << key.walk.gamma_walks << " seed=" << key.walk.seed;
  return h.str();
}

}  // namespace

void WalkConfig::validate() const {
  if (q < 1) throw ConfigError("walk: path length q must be >= 1");
  if (w < 1 || w > q) throw ConfigError("walk: window w must satisfy 1 <= w <= q");
  if (gamma_walks < 1) throw ConfigError("walk: gamma_walks must be >= 1");
}

std::vector<std::uint32_t> random_walk(const CsrMatrix& m, std::uint32_t start, int q, RngStream& rng) {
  if (start >= m.rows) throw DataError("random walk: start node out of range");
  if (q < 1) throw ConfigError("random walk: q must be >= 1");
  return WalkTable(m).walk(start, q, rng, nullptr);
}

CsrMatrix frequency_matrix(const CsrMatrix& m, const WalkConfig& cfg, WalkStats* stats) {
  cfg.validate();
  const WalkTable table(m);
  const std::size_t n = m.rows;
  using Pair = std::array<std::uint32_t, 2>;
  std::vector<std::vector<Pair>> per_node(n);
  std::vector<unsigned char> truncated(n, 0);
  const std::size_t work = static_cast<std::size_t>(cfg.gamma_walks) * cfg.q * cfg.w * 64;
  detail::parallel_rows(n, work, [&](std::size_t begin, std::size_t end) {
    for (std::size_t s = begin; s < end; ++s) {
      RngStream rng(derive_seed(cfg.seed, "walk", s));
      auto& out = per_node[s];
      for (int g = 0; g < cfg.gamma_walks; ++g) {
        bool cut = false;
        const auto seq = table.walk(static_cast<std::uint32_t>(s), cfg.q, rng, &cut);
        if (cut) ++truncated[s];
        for (std::size_t a = 0; a < seq.size(); ++a) {
          const std::size_t last = std::min(seq.size() - 1, a + static_cast<std::size_t>(cfg.w));
          for (std::size_t b = a + 1; b <= last; ++b) {
            out.push_back({seq[a], seq[b]});
            out.push_back({seq[b], seq[a]});
          }
        }
      }
    }
  });
  if (stats) {
    stats->walks = n * static_cast<std::size_t>(cfg.gamma_walks);
    stats->truncated = 0;
    for (unsigned char t : truncated) stats->truncated += t;
  }

  // Bucket the pairs by row, then count columns per row with a dense scratch
  // row. Linear in the number of pairs.
  std::vector<std::size_t> start(n + 1, 0);
  for (const auto& v : per_node)
    for (const Pair& p : v) ++start[p[0] + 1];
  for (std::size_t i = 0; i < n; ++i) start[i + 1] += start[i];
  std::vector<std::uint32_t> cols(start[n]);
  std::vector<std::size_t> fill(start.begin(), start.end() - 1);
  for (auto& v : per_node) {
    for (const Pair& p : v) cols[fill[p[0]]++] = p[1];
    v = {};
  }

  CsrMatrix f;
  f.rows = f.cols = n;
  f.row_ptr.assign(n + 1, 0);
  std::vector<double> count(n, 0.0);
  std::vector<std::uint32_t> touched;
  for (std::size_t i = 0; i < n; ++i) {
    touched.clear();
    for (std::size_t k = start[i]; k < start[i + 1]; ++k) {
      if (count[cols[k]] == 0.0) touched.push_back(cols[k]);
      count[cols[k]] += 1.0;
    }
    std::sort(touched.begin(), touched.end());
    for (std::uint32_t j : touched) {
      f.col_idx.push_back(j);
      f.values.push_back(count[j]);
      count[j] = 0.0;
    }
    f.row_ptr[i + 1] = f.col_idx.size();
  }
  return f;
}

DenseMatrix exact_frequency_matrix(const CsrMatrix& m, int q, int w) {
  WalkConfig{q, w, 1, 0}.validate();
  const std::size_t n = m.rows;
  DenseMatrix t(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) row += m.values[k];
    if (row <= 0.0) continue;  // walks stop here: the row stays zero
    for (std::size_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) t(i, m.col_idx[k]) = m.values[k] / row;
  }
  std::vector<DenseMatrix> powers{DenseMatrix::identity(n)};
  for (int d = 1; d <= w; ++d) powers.push_back(matmul(powers.back(), t));

  DenseMatrix f(n, n);
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<double> pi(n, 0.0);
    pi[s] = 1.0;
    for (int t1 = 0; t1 < q; ++t1) {
      for (int d = 1; d <= w && t1 + d <= q; ++d) {
        const DenseMatrix& td = powers[static_cast<std::size_t>(d)];
        for (std::size_t u = 0; u < n; ++u) {
          if (pi[u] == 0.0) continue;
          for (std::size_t v = 0; v < n; ++v) {
            const double mass = pi[u] * td(u, v);
            f(u, v) += mass;
            f(v, u) += mass;
          }
        }
      }
      std::vector<double> next(n, 0.0);
      for (std::size_t u = 0; u < n; ++u) {
        if (pi[u] == 0.0) continue;
        for (std::size_t v = 0; v < n; ++v) next[v] += pi[u] * t(u, v);
      }
      pi = std::move(next);
    }
  }
  return f;
}

CsrMatrix ppmi(const CsrMatrix& f) {
  double total = 0.0;
  std::vector<double> row(f.rows, 0.0);
  std::vector<double> col(f.cols, 0.0);
  for (std::size_t i = 0; i < f.rows; ++i) {
    for (std::size_t k = f.row_ptr[i]; k < f.row_ptr[i + 1]; ++k) {
      const double v = f.values[k];
      if (v < 0.0) throw DataError("ppmi: negative frequency");
      total += v;
      row[i] += v;
      col[f.col_idx[k]] += v;
    }
  }
  if (!(total > 0.0)) throw DataError("ppmi: all-zero F");
  CsrMatrix p;
  p.rows = f.rows;
  p.cols = f.cols;
  for (std::size_t i = 0; i < f.rows; ++i) {
    for (std::size_t k = f.row_ptr[i]; k < f.row_ptr[i + 1]; ++k) {
      const double v = f.values[k];
      if (v <= 0.0) continue;
      const std::uint32_t j = f.col_idx[k];
      // p_ij / (p_i* p_*j) with the common 1/total factors cancelled
      const double pmi = std::log(v * total / (row[i] * col[j]));
      if (pmi > 0.0) {
        p.col_idx.push_back(j);
        p.values.push_back(pmi);
      }
    }
    p.row_ptr.push_back(p.col_idx.size());
  }
  return p;
}

CsrMatrix ppmi_operator(const CsrMatrix& p) { return sym_normalize(p); }

void write_ppmi_cache(std::ostream& out, const CsrMatrix& p, const PpmiCacheKey& key) {
  out << cache_header(key) << '\n';
  char buf[64];
  for (std::size_t i = 0; i < p.rows; ++i) {
    for (std::size_t k = p.row_ptr[i]; k < p.row_ptr[i + 1]; ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", p.values[k]);
      out << i << '\t' << p.col_idx[k] << '\t' << buf << '\n';
    }
  }
}

std::optional<CsrMatrix> read_ppmi_cache(std::istream& in, const PpmiCacheKey& key) {
  std::string line;
  if (!std::getline(in, line) || line != cache_header(key)) return std::nullopt;
  std::vector<Triplet> trip;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::size_t i = 0;
    std::size_t j = 0;
    double v = 0.0;
    if (!(ls >> i >> j >> v) || i >= key.n || j >= key.n) {
      throw DataError("ppmi cache: malformed line " + std::to_string(lineno));
    }
    trip.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), v});
  }
  return csr_from_triplets(key.n, key.n, std::move(trip));
}

}  // namespace gldgcn
