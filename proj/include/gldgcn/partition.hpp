#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gldgcn/graph.hpp"
#include "gldgcn/rng.hpp"

namespace gldgcn {

struct PartitionConfig {
  int c = 10;                      ///< clusters
  int q = 2;                       ///< clusters per batch
  double balance_tolerance = 1.1;  ///< max cluster size / ceil(n / c)
  std::uint64_t seed = 0;

  /// Throws ConfigError unless 1 <= q <= c, c <= n and tolerance >= 1.
  void validate(std::size_t n) const;
};

struct Partition {
  int c = 0;
  std::vector<std::uint32_t> assign;                ///< cluster of each node
  std::vector<std::vector<std::uint32_t>> members;  ///< sorted node lists
  std::size_t edge_cut = 0;                         ///< undirected edges between clusters
};

/// Counts undirected edges whose endpoints lie in different clusters.
std::size_t count_edge_cut(const Graph& g, const std::vector<std::uint32_t>& assign);

/// Members and edge cut for a given assignment. Throws DataError on an
/// out-of-range cluster index or an empty cluster.
Partition make_partition(const Graph& g, std::vector<std::uint32_t> assign, int c);

/// Multilevel partition: heavy-edge coarsening, greedy graph growing on the
/// coarsest level, and boundary refinement under the balance cap while
/// uncoarsening. Deterministic for a fixed seed; every cluster is nonempty.
Partition partition_graph(const Graph& g, const PartitionConfig& cfg);

/// Shuffled round-robin assignment: sizes differ by at most one.
Partition random_balanced_partition(const Graph& g, int c, RngStream& rng);

struct EdgeCutReport {
  std::size_t edge_cut = 0;
  std::size_t edges = 0;
  std::vector<std::size_t> sizes;
  double balance = 0.0;  ///< largest cluster / ceil(n / c)
};

EdgeCutReport edge_cut_report(const Graph& g, const Partition& p);
/// One-line JSON rendering of the report.
std::string to_json(const EdgeCutReport& r);

void write_partition_cache(std::ostream& out, const Partition& p, std::uint64_t seed);
/// nullopt when the header does not match (n, c, seed).
std::optional<Partition> read_partition_cache(std::istream& in, const Graph& g, int c, std::uint64_t seed);

}  // namespace gldgcn
