#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "gldgcn/graph.hpp"
#include "gldgcn/rng.hpp"

namespace gldgcn {

struct WalkConfig {
  int q = 3;            ///< steps per walk
  int w = 3;            ///< co-occurrence radius
  int gamma_walks = 10; ///< walks started per node
  std::uint64_t seed = 0;

  /// Throws ConfigError unless q >= 1, 1 <= w <= q and gamma_walks >= 1.
  void validate() const;
};

struct WalkStats {
  std::size_t walks = 0;
  std::size_t truncated = 0;  ///< walks that hit a node without out-weight
};

/// Walk of up to q steps from `start`, moving i -> j with probability
/// m_ij / sum_j m_ij. Stops early at a node without positive out-weight, so the
/// result has between 1 and q + 1 entries.
std::vector<std::uint32_t> random_walk(const CsrMatrix& m, std::uint32_t start, int q, RngStream& rng);

/// Sampled co-occurrence counts: gamma_walks walks per node, and every pair of
/// positions at distance 1..w in a walk adds 1 to F(a, b) and to F(b, a).
/// Node s draws from its own stream derived from (cfg.seed, s), so the result
/// does not depend on the kernel thread count.
CsrMatrix frequency_matrix(const CsrMatrix& m, const WalkConfig& cfg, WalkStats* stats = nullptr);

/// Expected counts of one walk per node under the same sampling rule,
/// computed from powers of the transition matrix (dense; meant for small n).
DenseMatrix exact_frequency_matrix(const CsrMatrix& m, int q, int w);

/// max(ln(p_ij / (p_i* p_*j)), 0) on the stored entries of F. Only positive
/// values are kept. Throws DataError when F sums to zero.
CsrMatrix ppmi(const CsrMatrix& f);

/// D_p^{-1/2} P D_p^{-1/2}.
CsrMatrix ppmi_operator(const CsrMatrix& p);

struct PpmiCacheKey {
  std::size_t n = 0;
  WalkConfig walk;
};

void write_ppmi_cache(std::ostream& out, const CsrMatrix& p, const PpmiCacheKey& key);
/// Returns nullopt when the header does not match `key`; DataError when the
/// body is malformed.
std::optional<CsrMatrix> read_ppmi_cache(std::istream& in, const PpmiCacheKey& key);

}  // namespace gldgcn
