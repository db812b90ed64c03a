#pragma once

// Training loop shared by full-batch and cluster training. A full-batch run is
// the cluster run whose only cluster set is {0} and whose batch is the whole
// graph, so both paths execute exactly the same arithmetic.

#include <cstdint>
#include <span>
#include <vector>

#include "gldgcn/train.hpp"

namespace gldgcn::detail {

struct Batch {
  GraphView view;
  std::vector<int> labels;        ///< local labels
  std::vector<std::size_t> train; ///< local indices of training nodes
  double weight = 1.0;            ///< loss scale
};

class BatchSource {
 public:
  virtual ~BatchSource() = default;
  /// Cluster sets processed in this epoch, in order.
  virtual std::vector<std::vector<std::uint32_t>> epoch_sets(int epoch) = 0;
  virtual Batch make(const std::vector<std::uint32_t>& clusters) = 0;
};

std::uint64_t cluster_set_key(std::span<const std::uint32_t> clusters);

FitResult run_training(const DatasetBundle& d, const ModelConfig& cfg, const PreparedData& prep,
                       BatchSource& source, const EpochCallback& on_epoch);

}  // namespace gldgcn::detail
