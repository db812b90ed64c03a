#include "gldgcn/cluster_train.hpp"

#include <algorithm>
#include <numeric>

#include "engine.hpp"
#include "gldgcn/errors.hpp"

namespace gldgcn {
namespace {

bool is_weighted(const CsrMatrix& adj) {
  return std::any_of(adj.values.begin(), adj.values.end(), [](double v) { return v != 1.0; });
}

class ClusterSource final : public detail::BatchSource {
 public:
  ClusterSource(const DatasetBundle& d, const PreparedData& prep, const Partition& p,
                const ClusterConfig& cfg, std::uint64_t seed)
      : d_(d), prep_(prep), p_(p), cfg_(cfg), seed_(seed), is_train_(d.num_nodes(), 0) {
    for (std::size_t i : d.train) is_train_[i] = 1;
  }

  std::vector<std::vector<std::uint32_t>> epoch_sets(int epoch) override {
    RngStream rng(derive_seed(seed_, "batches", static_cast<std::uint64_t>(epoch)));
    return epoch_cluster_sets(p_.c, cfg_.part.q, rng);
  }

  detail::Batch make(const std::vector<std::uint32_t>& clusters) override {
    ClusterBatch cb = form_batch(*d_.graph, p_, clusters);
    detail::Batch b;
    const std::size_t p = prep_.x->cols();
    auto x = std::make_shared<DenseMatrix>(cb.nodes.size(), p);
    b.labels.resize(cb.nodes.size());
    for (std::size_t k = 0; k < cb.nodes.size(); ++k) {
      const std::size_t g = cb.nodes[k];
      std::copy_n(prep_.x->data() + g * p, p, x->data() + k * p);
      b.labels[k] = d_.y[g];
      if (is_train_[g]) b.train.push_back(k);
    }
    b.weight = cfg_.weighted_loss
                   ? static_cast<double>(cb.nodes.size()) / static_cast<double>(d_.num_nodes())
                   : 1.0;
    if (!b.train.empty()) b.view = make_view(std::move(x), &cb.graph, model_cfg_);
    return b;
  }

  void set_model_config(const ModelConfig& cfg) { model_cfg_ = cfg; }

 private:
  const DatasetBundle& d_;
  const PreparedData& prep_;
  const Partition& p_;
  const ClusterConfig& cfg_;
  std::uint64_t seed_;
  std::vector<char> is_train_;
  ModelConfig model_cfg_;
};

}  // namespace

CsrMatrix induced_subgraph(const CsrMatrix& adj, std::span<const std::uint32_t> nodes) {
  constexpr std::uint32_t kOut = UINT32_MAX;
  std::vector<std::uint32_t> local(adj.rows, kOut);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (nodes[k] >= adj.rows || (k > 0 && nodes[k] <= nodes[k - 1])) {
      throw DataError("induced_subgraph: node list must be strictly increasing and in range");
    }
    local[nodes[k]] = static_cast<std::uint32_t>(k);
  }
  CsrMatrix out;
  out.rows = out.cols = nodes.size();
  for (std::uint32_t g : nodes) {
    for (std::size_t k = adj.row_ptr[g]; k < adj.row_ptr[g + 1]; ++k) {
      const std::uint32_t j = local[adj.col_idx[k]];
      if (j == kOut) continue;
      out.col_idx.push_back(j);
      out.values.push_back(adj.values[k]);
    }
    out.row_ptr.push_back(out.col_idx.size());
  }
  return out;
}

SplitMatrices split_matrices(const Graph& g, const DenseMatrix& x, const std::vector<int>& y,
                             const Partition& p) {
  const CsrMatrix& a = g.adjacency();
  if (x.rows() != a.rows || y.size() != a.rows || p.assign.size() != a.rows) {
    throw ShapeError("split_matrices: graph, features, labels and partition disagree on n");
  }
  SplitMatrices out;
  out.a_bar.rows = out.a_bar.cols = a.rows;
  out.delta.rows = out.delta.cols = a.rows;
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
      CsrMatrix& dst = p.assign[i] == p.assign[a.col_idx[k]] ? out.a_bar : out.delta;
      dst.col_idx.push_back(a.col_idx[k]);
      dst.values.push_back(a.values[k]);
    }
    out.a_bar.row_ptr.push_back(out.a_bar.col_idx.size());
    out.delta.row_ptr.push_back(out.delta.col_idx.size());
  }
  for (const auto& members : p.members) {
    ClusterBlock b;
    b.nodes = members;
    b.adj = induced_subgraph(a, members);
    b.x = DenseMatrix(members.size(), x.cols());
    for (std::size_t k = 0; k < members.size(); ++k) {
      std::copy_n(x.data() + members[k] * x.cols(), x.cols(), b.x.data() + k * x.cols());
      b.y.push_back(y[members[k]]);
    }
    out.blocks.push_back(std::move(b));
  }
  return out;
}

ClusterBatch form_batch(const Graph& g, const Partition& p, std::vector<std::uint32_t> clusters) {
  std::sort(clusters.begin(), clusters.end());
  if (clusters.empty() || std::adjacent_find(clusters.begin(), clusters.end()) != clusters.end() ||
      clusters.back() >= static_cast<std::uint32_t>(p.c)) {
    throw ConfigError("form_batch: clusters must be distinct ids in [0, c)");
  }
  ClusterBatch b;
  for (std::uint32_t c : clusters) {
    const auto& m = p.members[c];
    b.nodes.insert(b.nodes.end(), m.begin(), m.end());
  }
  std::sort(b.nodes.begin(), b.nodes.end());
  const CsrMatrix& a = g.adjacency();
  b.graph = Graph(induced_subgraph(a, b.nodes), g.is_weighted() || is_weighted(a));
  b.clusters = std::move(clusters);
  return b;
}

ClusterBatch form_batch(const Graph& g, const Partition& p, int q, RngStream& rng) {
  if (q < 1 || q > p.c) throw ConfigError("form_batch: q must satisfy 1 <= q <= c");
  std::vector<std::uint32_t> ids(static_cast<std::size_t>(p.c));
  std::iota(ids.begin(), ids.end(), 0u);
  for (std::size_t k = 0; k < static_cast<std::size_t>(q); ++k) {
    const std::size_t pick = k + rng.uniform_index(ids.size() - k);
    std::swap(ids[k], ids[pick]);
  }
  ids.resize(static_cast<std::size_t>(q));
  return form_batch(g, p, std::move(ids));
}

std::vector<std::vector<std::uint32_t>> epoch_cluster_sets(int c, int q, RngStream& rng) {
  if (c < 1 || q < 1 || q > c) throw ConfigError("epoch schedule: need 1 <= q <= c");
  std::vector<std::uint32_t> ids(static_cast<std::size_t>(c));
  std::iota(ids.begin(), ids.end(), 0u);
  for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.uniform_index(i)]);
  std::vector<std::vector<std::uint32_t>> sets;
  for (std::size_t b = 0; b < ids.size(); b += static_cast<std::size_t>(q)) {
    const std::size_t e = std::min(ids.size(), b + static_cast<std::size_t>(q));
    std::vector<std::uint32_t> set(ids.begin() + static_cast<std::ptrdiff_t>(b),
                                   ids.begin() + static_cast<std::ptrdiff_t>(e));
    std::sort(set.begin(), set.end());
    sets.push_back(std::move(set));
  }
  return sets;
}

FitResult cluster_fit(const DatasetBundle& d, const ModelConfig& model_cfg, const ClusterConfig& cfg,
                      const EpochCallback& on_epoch, const Partition* partition) {
  model_cfg.validate();
  if (!d.graph) throw DataError("cluster training needs a graph (edges.tsv)");
  cfg.part.validate(d.num_nodes());
  Partition computed;
  if (!partition) {
    computed = partition_graph(*d.graph, cfg.part);
    partition = &computed;
  } else if (partition->c != cfg.part.c || partition->assign.size() != d.num_nodes()) {
    throw DataError("cluster_fit: supplied partition does not match the configuration");
  }
  const PreparedData prep = prepare(d, model_cfg);
  ClusterSource source(d, prep, *partition, cfg, model_cfg.seed);
  source.set_model_config(model_cfg);
  return detail::run_training(d, model_cfg, prep, source, on_epoch);
}

}  // namespace gldgcn
