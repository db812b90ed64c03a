#include <doctest.h>

#include <cmath>
#include <map>

#include "gldgcn/cluster_train.hpp"
#include "gldgcn/errors.hpp"
#include "support/oracles.hpp"

using namespace gldgcn;

namespace {

DenseMatrix dense(const CsrMatrix& m) {
  DenseMatrix out(m.rows, m.cols);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) out(i, m.col_idx[k]) += m.values[k];
  return out;
}

void check_same_params(const ModelParams& a, const ModelParams& b) {
  auto pa = a.all();
  auto pb = b.all();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t k = 0; k < pa.size(); ++k) CHECK(pa[k]->value == pb[k]->value);
}

/// L0 of the S branch in eval mode on one graph view.
double eval_l0(const GraphView& view, ModelParams& params, const ModelConfig& cfg, std::span<const int> y,
               std::span<const std::size_t> train) {
  Tape t;
  ForwardCache c = forward(t, view, params, cfg, nullptr, false, nullptr, false);
  return total_loss(t, c, view, y, train, cfg).l0;
}

}  // namespace

TEST_SUITE("cluster") {
  TEST_CASE("reconstruction A = A_bar + delta on random graphs") {
    RngStream rng(5);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 2 + rng.uniform_index(63);
      Graph g = oracle::random_graph(n, 0.5 * rng.uniform(), rng);
      const int c = 1 + static_cast<int>(rng.uniform_index(std::min<std::size_t>(n, 8)));
      Partition p = partition_graph(g, {c, 1, 1.2, static_cast<std::uint64_t>(trial)});
      DenseMatrix x(n, 2);
      std::vector<int> y(n, 0);
      SplitMatrices s = split_matrices(g, x, y, p);
      DenseMatrix sum = dense(s.a_bar);
      DenseMatrix d = dense(s.delta);
      for (std::size_t k = 0; k < sum.size(); ++k) sum.values()[k] += d.values()[k];
      CAPTURE(trial);
      CHECK(sum == oracle::adjacency(g));
      CHECK(s.a_bar.nnz() + s.delta.nnz() == g.adjacency().nnz());
      // each block is A_bar restricted to its members
      DenseMatrix abar = dense(s.a_bar);
      for (const auto& b : s.blocks) {
        DenseMatrix blk = dense(b.adj);
        for (std::size_t i = 0; i < b.nodes.size(); ++i)
          for (std::size_t j = 0; j < b.nodes.size(); ++j) CHECK(blk(i, j) == abar(b.nodes[i], b.nodes[j]));
      }
    }
  }

  TEST_CASE("P4 blocks and crossing edges") {
    Graph g = oracle::path_graph(4);
    Partition p = partition_graph(g, {2, 1, 1.0, 0});
    DenseMatrix x(4, 1);
    for (std::size_t i = 0; i < 4; ++i) x(i, 0) = static_cast<double>(i);
    SplitMatrices s = split_matrices(g, x, {0, 1, 2, 3}, p);
    for (const auto& b : s.blocks) {
      CHECK(b.nodes.size() == 2);
      CHECK(b.adj.nnz() == 2);
      CHECK(b.x(1, 0) == static_cast<double>(b.nodes[1]));
      CHECK(b.y[0] == static_cast<int>(b.nodes[0]));
    }
    DenseMatrix d = dense(s.delta);
    CHECK(s.delta.nnz() == 2);
    CHECK(d(1, 2) == 1.0);
    CHECK(d(2, 1) == 1.0);

    Partition one = partition_graph(g, {1, 1, 1.0, 0});
    SplitMatrices whole = split_matrices(g, x, {0, 1, 2, 3}, one);
    CHECK(whole.delta.nnz() == 0);
    CHECK(whole.blocks.at(0).adj == g.adjacency());
    CHECK_THROWS_AS(split_matrices(g, DenseMatrix(3, 1), {0, 1, 2, 3}, p), ShapeError);
  }

  TEST_CASE("twelve nodes in three clusters reconcile counts") {
    RngStream rng(12);
    Graph g = oracle::random_graph(12, 0.4, rng);
    Partition p = partition_graph(g, {3, 1, 1.1, 0});
    SplitMatrices s = split_matrices(g, DenseMatrix(12, 1), std::vector<int>(12, 0), p);
    CHECK(s.a_bar.nnz() + s.delta.nnz() == g.adjacency().nnz());
    CHECK(s.delta.nnz() == 2 * p.edge_cut);
  }

  TEST_CASE("batches") {
    Graph p4 = oracle::path_graph(4);
    Partition p = partition_graph(p4, {2, 1, 1.0, 0});
    ClusterBatch single = form_batch(p4, p, {0});
    CHECK(single.nodes.size() == 2);
    CHECK(single.graph.num_edges() == 1);

    ClusterBatch both = form_batch(p4, p, {1, 0});
    CHECK(both.clusters == std::vector<std::uint32_t>{0, 1});
    CHECK(both.graph.adjacency() == p4.adjacency());

    RngStream rng(3);
    CHECK_THROWS_AS(form_batch(p4, p, 3, rng), ConfigError);
    CHECK_THROWS_AS(form_batch(p4, p, {0, 0}), ConfigError);
    CHECK_THROWS_AS(form_batch(p4, p, {2}), ConfigError);
  }

  TEST_CASE("q = c covers the whole graph") {
    RngStream rng(4);
    Graph g = oracle::random_graph(30, 0.15, rng);
    Partition p = partition_graph(g, {5, 5, 1.1, 0});
    ClusterBatch b = form_batch(g, p, 5, rng);
    CHECK(b.nodes.size() == 30);
    CHECK(b.graph.adjacency() == g.adjacency());
  }

  TEST_CASE("pairs of clusters are drawn uniformly") {
    std::vector<Edge> e;
    for (std::uint32_t i = 0; i + 1 < 8; ++i) e.push_back({i, i + 1});
    Graph g = build_graph(e, 8);
    Partition p = partition_graph(g, {4, 2, 1.0, 0});
    RngStream rng(17);
    std::map<std::vector<std::uint32_t>, int> counts;
    const int draws = 10000;
    for (int k = 0; k < draws; ++k) {
      ClusterBatch b = form_batch(g, p, 2, rng);
      REQUIRE(b.clusters.size() == 2);
      ++counts[b.clusters];
    }
    CHECK(counts.size() == 6);
    const double mean = draws / 6.0;
    const double sigma = std::sqrt(draws * (1.0 / 6.0) * (5.0 / 6.0));
    for (const auto& [pair, n] : counts) CHECK(std::abs(n - mean) <= 3.0 * sigma);
  }

  TEST_CASE("epoch schedules visit every cluster once") {
    RngStream rng(8);
    for (auto [c, q] : {std::pair{10, 3}, std::pair{4, 4}, std::pair{7, 1}}) {
      auto sets = epoch_cluster_sets(c, q, rng);
      std::vector<int> seen(static_cast<std::size_t>(c), 0);
      for (const auto& s : sets) {
        CHECK(s.size() <= static_cast<std::size_t>(q));
        CHECK(std::is_sorted(s.begin(), s.end()));
        for (auto id : s) ++seen[id];
      }
      for (int v : seen) CHECK(v == 1);
      CHECK(sets.size() == static_cast<std::size_t>((c + q - 1) / q));
    }
    CHECK_THROWS_AS(epoch_cluster_sets(3, 4, rng), ConfigError);
  }

  TEST_CASE("summed cluster losses equal the loss on the block-diagonal graph") {
    DatasetBundle d = oracle::sbm_dataset(15, 3, 0.3, 0.05, 6, 21);
    Partition p = partition_graph(*d.graph, {5, 1, 1.1, 0});
    SplitMatrices s = split_matrices(*d.graph, d.x, d.y, p);
    Graph block_diag(s.a_bar, false);
    std::vector<char> is_train(d.num_nodes(), 0);
    for (std::size_t i : d.train) is_train[i] = 1;

    for (bool learn : {false, true}) {
      ModelConfig cfg;
      cfg.hidden_gl = 4;
      cfg.lambda1 = 0.0;
      cfg.lambda2 = 0.0;
      cfg.learn_graph = learn;
      cfg.normalize_features = false;
      cfg.seed = 2;
      ModelParams params = init_params(cfg, d.x.cols(), d.classes);
      GraphView whole = make_view(std::make_shared<const DenseMatrix>(d.x), &block_diag, cfg);
      const double direct = eval_l0(whole, params, cfg, d.y, d.train);

      double summed = 0.0;
      for (const auto& b : s.blocks) {
        std::vector<std::size_t> train;
        for (std::size_t k = 0; k < b.nodes.size(); ++k)
          if (is_train[b.nodes[k]]) train.push_back(k);
        if (train.empty()) continue;
        Graph bg(b.adj, false);
        GraphView v = make_view(std::make_shared<const DenseMatrix>(b.x), &bg, cfg);
        summed += eval_l0(v, params, cfg, b.y, train);
      }
      CAPTURE(learn);
      CHECK(std::abs(summed - direct) <= 1e-10 * std::abs(direct));
    }
  }

  TEST_CASE("one cluster is bit-identical to full-batch training") {
    DatasetBundle d = oracle::sbm_dataset(12, 3, 0.35, 0.04, 10, 8, 3, 15, 15);
    ModelConfig cfg;
    cfg.hidden_gl = 6;
    cfg.epochs = 30;
    cfg.ppmi_refresh = 10;
    cfg.seed = 4;
    cfg.lambda1 = 0.5;
    cfg.supervise = Supervise::both;
    FitResult full = fit(d, cfg);
    ClusterConfig cc;
    cc.part = {1, 1, 1.1, 0};
    FitResult clustered = cluster_fit(d, cfg, cc);
    REQUIRE(full.history.size() == clustered.history.size());
    for (std::size_t i = 0; i < full.history.size(); ++i) {
      CHECK(full.history[i].train_loss == clustered.history[i].train_loss);
      CHECK(full.history[i].val_acc == clustered.history[i].val_acc);
    }
    CHECK(full.best_epoch == clustered.best_epoch);
    check_same_params(full.best, clustered.best);
    check_same_params(full.last, clustered.last);
  }

  TEST_CASE("peak step memory follows the batch, not the graph") {
    ModelConfig cfg;
    cfg.hidden_gl = 8;
    cfg.epochs = 2;
    cfg.stop_tolerance = 0.0;
    std::vector<std::size_t> peaks;
    std::size_t full_peak = 0;
    for (std::size_t per_block : {40, 160}) {
      DatasetBundle d = oracle::sbm_dataset(per_block, 4, 0.1, 0.005, 16, 3);
      const int c = static_cast<int>(per_block * 4 / 20);
      ClusterConfig cc;
      cc.part = {c, 2, 1.1, 0};
      FitResult r = cluster_fit(d, cfg, cc);
      CHECK(r.max_batch_nodes <= 2 * 22);
      peaks.push_back(r.peak_step_bytes);
      if (per_block == 160) full_peak = fit(d, cfg).peak_step_bytes;
    }
    // four times the nodes, about the same per-step footprint
    CHECK(static_cast<double>(peaks[1]) < 1.5 * static_cast<double>(peaks[0]));
    CHECK(static_cast<double>(full_peak) > 8.0 * static_cast<double>(peaks[1]));
  }

  TEST_CASE("batches without training labels are skipped and counted") {
    DatasetBundle d = oracle::sbm_dataset(10, 4, 0.4, 0.02, 8, 6);
    Partition p = partition_graph(*d.graph, {4, 1, 1.1, 0});
    d.train.clear();
    for (auto v : p.members[2]) d.train.push_back(v);
    d.val.clear();
    d.test.clear();
    for (std::size_t i = 0; i < d.num_nodes(); ++i)
      if (p.assign[i] != 2) d.test.push_back(i);
    ModelConfig cfg;
    cfg.hidden_gl = 4;
    cfg.epochs = 5;
    cfg.stop_tolerance = 0.0;
    ClusterConfig cc;
    cc.part = {4, 1, 1.1, 0};
    FitResult r = cluster_fit(d, cfg, cc, {}, &p);
    CHECK(r.epochs_run == 5);
    CHECK(r.batches == 5);
    CHECK(r.skipped_batches == 15);

    ClusterConfig wrong;
    wrong.part = {3, 1, 1.1, 0};
    CHECK_THROWS_AS(cluster_fit(d, cfg, wrong, {}, &p), DataError);
  }
}
