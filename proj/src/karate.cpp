#include <algorithm>
#include <array>

#include "gldgcn/dataset.hpp"

namespace gldgcn {
namespace {

constexpr std::array<std::array<std::uint32_t, 2>, 78> kEdges{{
    {0, 1},   {0, 2},   {0, 3},   {0, 4},   {0, 5},   {0, 6},   {0, 7},   {0, 8},   {0, 10},  {0, 11},
    {0, 12},  {0, 13},  {0, 17},  {0, 19},  {0, 21},  {0, 31},  {1, 2},   {1, 3},   {1, 7},   {1, 13},
    {1, 17},  {1, 19},  {1, 21},  {1, 30},  {2, 3},   {2, 7},   {2, 8},   {2, 9},   {2, 13},  {2, 27},
    {2, 28},  {2, 32},  {3, 7},   {3, 12},  {3, 13},  {4, 6},   {4, 10},  {5, 6},   {5, 10},  {5, 16},
    {6, 16},  {8, 30},  {8, 32},  {8, 33},  {9, 33},  {13, 33}, {14, 32}, {14, 33}, {15, 32}, {15, 33},
    {18, 32}, {18, 33}, {19, 33}, {20, 32}, {20, 33}, {22, 32}, {22, 33}, {23, 25}, {23, 27}, {23, 29},
    {23, 32}, {23, 33}, {24, 25}, {24, 27}, {24, 31}, {25, 31}, {26, 29}, {26, 33}, {27, 33}, {28, 31},
    {28, 33}, {29, 32}, {29, 33}, {30, 32}, {30, 33}, {31, 32}, {31, 33}, {32, 33},
}};

// Four-community modularity clustering as distributed with the common
// semi-supervised GCN benchmarks.
constexpr std::array<int, 34> kLabels{1, 1, 1, 1, 3, 3, 3, 1, 0, 1, 3, 1, 1, 1, 0, 0, 3,
                                      1, 0, 1, 0, 1, 0, 0, 2, 2, 0, 0, 2, 0, 0, 2, 0, 0};

}  // namespace

DatasetBundle builtin_karate(std::optional<std::uint64_t> train_seed) {
  DatasetBundle d;
  d.name = "karate";
  std::vector<Edge> edges;
  for (const auto& e : kEdges) edges.push_back({e[0], e[1]});
  d.graph = build_graph(edges, kLabels.size());
  d.x = DenseMatrix::identity(kLabels.size());
  d.y.assign(kLabels.begin(), kLabels.end());
  d.classes = 4;
  for (int c = 0; c < d.classes; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < d.y.size(); ++i) {
      if (d.y[i] == c) members.push_back(i);
    }
    std::size_t pick = members.front();
    if (train_seed) {
      RngStream rng(derive_seed(*train_seed, "karate.train", static_cast<std::uint64_t>(c)));
      pick = members[rng.uniform_index(members.size())];
    }
    d.train.push_back(pick);
  }
  std::sort(d.train.begin(), d.train.end());
  // No validation split: with four labels there is nothing to hold out, so
  // training keeps the final epoch. Every other node is test.
  for (std::size_t i = 0; i < d.y.size(); ++i) {
    if (!std::binary_search(d.train.begin(), d.train.end(), i)) d.test.push_back(i);
  }
  return d;
}

}  // namespace gldgcn
