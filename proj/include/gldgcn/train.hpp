#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "gldgcn/dataset.hpp"
#include "gldgcn/model.hpp"

namespace gldgcn {

struct HistoryRow {
  int epoch = 0;
  double train_loss = 0.0;
  double l0 = 0.0;
  double lreg = 0.0;
  double lgl = 0.0;
  double val_acc = 0.0;
};

struct FitResult {
  ModelParams best;  ///< snapshot at the highest validation accuracy (final epoch without a val set)
  ModelParams last;
  std::vector<HistoryRow> history;
  int best_epoch = 0;
  double best_val_acc = 0.0;
  int epochs_run = 0;
  bool converged = false;          ///< stopped by stop_tolerance
  std::size_t batches = 0;         ///< optimization steps taken
  std::size_t skipped_batches = 0; ///< batches without training labels
  std::size_t peak_step_bytes = 0; ///< largest tape footprint of one step
  std::size_t max_batch_nodes = 0;
};

using EpochCallback = std::function<void(const HistoryRow&)>;

/// Features (row-normalized when configured) and the full-graph view.
struct PreparedData {
  std::shared_ptr<const DenseMatrix> x;
  GraphView view;
};

PreparedData prepare(const DatasetBundle& d, const ModelConfig& cfg);

/// Full-batch training: every epoch is one step on the whole graph.
FitResult fit(const DatasetBundle& d, const ModelConfig& cfg, const EpochCallback& on_epoch = {});

struct Evaluation {
  std::vector<int> pred;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double test_acc = 0.0;
};

/// Predictions on the full graph; accuracies of empty splits are reported as 0.
Evaluation evaluate(const DatasetBundle& d, const PreparedData& prep, ModelParams& params,
                    const ModelConfig& cfg);

}  // namespace gldgcn
