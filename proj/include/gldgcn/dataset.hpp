#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gldgcn/dense.hpp"
#include "gldgcn/graph.hpp"

namespace gldgcn {

/// Label value marking a node without a class.
inline constexpr int kUnlabeled = -1;

struct DatasetBundle {
  std::string name;
  std::optional<Graph> graph;  ///< absent for features-only data
  DenseMatrix x;
  std::vector<int> y;
  int classes = 0;
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
  std::size_t edge_lines = 0;  ///< data lines in edges.tsv before deduplication

  std::size_t num_nodes() const { return x.rows(); }
  /// Throws DataError on overlapping splits, bad labels or size mismatches.
  void validate() const;
};

struct SplitSpec {
  int per_class_train = 20;
  std::size_t val_size = 500;
  std::size_t test_size = 1000;
  std::uint64_t seed = 0;
};

struct Splits {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Shuffles the labeled nodes with the seed; the first per_class_train of each
/// class go to train, then val and test are taken in shuffled order from the
/// rest. Each list is returned sorted.
Splits make_planetoid_split(const std::vector<int>& y, int classes, const SplitSpec& spec);

/// Reads features.csv, labels.txt and optionally edges.tsv, train/val/test.txt
/// and manifest.txt. Without split files a planetoid split with `split` is drawn.
DatasetBundle load_dataset(const std::filesystem::path& dir, const SplitSpec& split = {});
/// Writes the on-disk layout read by load_dataset, including split files.
void save_dataset(const DatasetBundle& d, const std::filesystem::path& dir);

/// Zachary's karate club with fixed 4-class modularity labels and one-hot
/// features. Train holds the lowest-index node of each class, or one random
/// node per class when a seed is given.
DatasetBundle builtin_karate(std::optional<std::uint64_t> train_seed = std::nullopt);

}  // namespace gldgcn
