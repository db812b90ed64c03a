#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gldgcn/dataset.hpp"
#include "gldgcn/partition.hpp"
#include "gldgcn/train.hpp"

namespace gldgcn {

struct ClusterConfig {
  PartitionConfig part;
  /// Scale each batch loss by |batch nodes| / n; off gives the plain sum.
  bool weighted_loss = true;
};

struct ClusterBlock {
  std::vector<std::uint32_t> nodes;  ///< local -> global index
  CsrMatrix adj;                     ///< induced adjacency, local indices
  DenseMatrix x;
  std::vector<int> y;
};

/// Diagonal blocks of A per cluster plus the global split A = A_bar + delta,
/// where A_bar keeps within-cluster entries and delta the crossing ones.
struct SplitMatrices {
  std::vector<ClusterBlock> blocks;
  CsrMatrix a_bar;
  CsrMatrix delta;
};

SplitMatrices split_matrices(const Graph& g, const DenseMatrix& x, const std::vector<int>& y,
                             const Partition& p);

/// Adjacency restricted to `nodes` (strictly increasing), in local indices.
CsrMatrix induced_subgraph(const CsrMatrix& adj, std::span<const std::uint32_t> nodes);

struct ClusterBatch {
  std::vector<std::uint32_t> clusters;  ///< sorted cluster ids
  std::vector<std::uint32_t> nodes;     ///< sorted union of their members
  Graph graph;                          ///< induced subgraph over nodes
};

/// Batch over the given clusters; edges between two chosen clusters are kept.
ClusterBatch form_batch(const Graph& g, const Partition& p, std::vector<std::uint32_t> clusters);
/// q distinct clusters drawn uniformly without replacement.
ClusterBatch form_batch(const Graph& g, const Partition& p, int q, RngStream& rng);

/// One epoch's schedule: the clusters in shuffled order, cut into groups of q
/// (the last group is smaller when q does not divide c). Groups are sorted.
std::vector<std::vector<std::uint32_t>> epoch_cluster_sets(int c, int q, RngStream& rng);

/// Mini-batch training over cluster batches. Each epoch visits every cluster
/// once; batches without training labels are skipped and counted. Validation
/// accuracy is measured on the full graph. When `partition` is null it is
/// computed from cfg.part.
FitResult cluster_fit(const DatasetBundle& d, const ModelConfig& model_cfg, const ClusterConfig& cfg,
                      const EpochCallback& on_epoch = {}, const Partition* partition = nullptr);

}  // namespace gldgcn
