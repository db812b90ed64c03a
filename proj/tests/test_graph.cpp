#include <doctest.h>

#include <sstream>

#include "gldgcn/errors.hpp"
#include "gldgcn/graph.hpp"
#include "support/oracles.hpp"

using namespace gldgcn;

namespace {

Graph k3() {
  std::vector<Edge> e{{0, 1}, {1, 2}, {0, 2}};
  return build_graph(e, 3);
}

}  // namespace

TEST_SUITE("graph") {
  TEST_CASE("triangle has degree two everywhere") {
    Graph g = k3();
    CHECK(g.num_nodes() == 3);
    CHECK(g.num_edges() == 3);
    CHECK(degrees(g.adjacency()) == std::vector<double>{2, 2, 2});
    CHECK_FALSE(g.is_weighted());
  }

  TEST_CASE("empty edge list gives isolated nodes") {
    Graph g = build_graph({}, 5);
    CHECK(g.num_nodes() == 5);
    CHECK(g.num_edges() == 0);
    CHECK(degrees(g.adjacency()) == std::vector<double>(5, 0.0));
  }

  TEST_CASE("duplicates and reversed edges sum") {
    std::vector<Edge> e{{0, 1}, {1, 0}, {0, 1, 2.5}};
    Graph g = build_graph(e, 2);
    CHECK(g.num_edges() == 1);
    CHECK(g.adjacency().at(0, 1) == 4.5);
    CHECK(g.adjacency().at(1, 0) == 4.5);
    CHECK(g.is_weighted());
  }

  TEST_CASE("bad edges are rejected") {
    std::vector<Edge> out_of_range{{0, 3}};
    CHECK_THROWS_AS(build_graph(out_of_range, 3), DataError);
    std::vector<Edge> negative{{0, 1, -1.0}};
    CHECK_THROWS_AS(build_graph(negative, 3), DataError);
  }

  TEST_CASE("self loops add one per node") {
    Graph g = add_self_loops(k3());
    CHECK(degrees(g.adjacency()) == std::vector<double>{3, 3, 3});
    Graph e = add_self_loops(build_graph({}, 2));
    CHECK(oracle::adjacency(e) == DenseMatrix::identity(2));
    std::vector<Edge> loop{{0, 0}};
    CHECK(add_self_loops(build_graph(loop, 1)).adjacency().at(0, 0) == 2.0);
  }

  TEST_CASE("sym_normalize examples") {
    CHECK(to_dense(sym_normalize(identity_csr(3))) == DenseMatrix::identity(3));

    std::vector<Edge> e{{0, 1}};
    auto single = sym_normalize(build_graph(e, 2).adjacency());
    CHECK(single.at(0, 1) == 1.0);
    CHECK(single.at(1, 0) == 1.0);

    auto k3n = sym_normalize(add_self_loops(k3()).adjacency());
    CHECK(k3n.nnz() == 9);
    for (double v : k3n.values) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    // an isolated node maps to zero instead of NaN
    std::vector<Edge> e2{{0, 1}};
    auto iso = to_dense(sym_normalize(build_graph(e2, 3).adjacency()));
    CHECK(iso(2, 2) == 0.0);
    CHECK(iso.all_finite());

    CsrMatrix neg = csr_from_dense(DenseMatrix(2, 2, std::vector<double>{0, -1, -1, 0}));
    CHECK_THROWS_AS(sym_normalize(neg), DataError);
  }

  TEST_CASE("dense and sparse normalization agree with the oracle") {
    RngStream rng(3);
    Graph g = add_self_loops(oracle::random_graph(12, 0.3, rng));
    DenseMatrix ref = oracle::sym_normalize(oracle::adjacency(g));
    CHECK(oracle::max_abs_diff(to_dense(sym_normalize(g.adjacency())), ref) < 1e-15);
    CHECK(oracle::max_abs_diff(sym_normalize(oracle::adjacency(g)), ref) < 1e-15);
  }

  TEST_CASE("spmm examples") {
    RngStream rng(5);
    DenseMatrix h = oracle::random_matrix(6, 4, rng);
    CHECK(spmm(identity_csr(6), h) == h);
    CsrMatrix zero;
    zero.rows = zero.cols = 6;
    zero.row_ptr.assign(7, 0);
    CHECK(spmm(zero, h) == DenseMatrix(6, 4));
    DenseMatrix op = oracle::random_matrix(6, 6, rng);
    CHECK(oracle::max_abs_diff(spmm(csr_from_dense(op), h), oracle::matmul(op, h)) < 1e-12);
    CHECK_THROWS_AS(spmm(identity_csr(5), h), ShapeError);
  }

  TEST_CASE("property: built graphs are symmetric and spmm matches dense products") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      RngStream rng(seed);
      const std::size_t n = 1 + rng.uniform_index(32);
      std::vector<Edge> edges;
      const std::size_t m = rng.uniform_index(3 * n);
      for (std::size_t k = 0; k < m; ++k) {
        edges.push_back({static_cast<std::uint32_t>(rng.uniform_index(n)),
                         static_cast<std::uint32_t>(rng.uniform_index(n)), 0.5 + rng.uniform()});
      }
      Graph g = build_graph(edges, n);
      DenseMatrix a = oracle::adjacency(g);
      CHECK(oracle::max_abs_diff(a, oracle::transpose(a)) == 0.0);
      for (double v : g.adjacency().values) CHECK(v > 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = g.adjacency().row_ptr[i] + 1; k < g.adjacency().row_ptr[i + 1]; ++k) {
          CHECK(g.adjacency().col_idx[k - 1] < g.adjacency().col_idx[k]);
        }
      }

      DenseMatrix norm = to_dense(sym_normalize(add_self_loops(g).adjacency()));
      CHECK(oracle::max_abs_diff(norm, oracle::transpose(norm)) <= 1e-12 * std::max(1.0, oracle::max_abs(norm)));

      DenseMatrix h = oracle::random_matrix(n, 3, rng);
      DenseMatrix ref = oracle::matmul(a, h);
      CHECK(oracle::max_abs_diff(spmm(g.adjacency(), h), ref) <= 1e-12 * std::max(1.0, oracle::max_abs(ref)));
      DenseMatrix ref_t = oracle::matmul(oracle::transpose(a), h);
      CHECK(oracle::max_abs_diff(spmm_transpose(g.adjacency(), h), ref_t) <=
            1e-12 * std::max(1.0, oracle::max_abs(ref_t)));
    }
  }

  TEST_CASE("csr helpers") {
    DenseMatrix d(2, 3, std::vector<double>{0, 1, 0, 2, 0, 3});
    CsrMatrix m = csr_from_dense(d);
    CHECK(m.nnz() == 3);
    CHECK(to_dense(m) == d);
    CHECK(to_dense(transpose(m)) == oracle::transpose(d));
    CHECK(m.at(1, 2) == 3.0);
    CHECK(m.at(0, 0) == 0.0);
    CHECK(full_pattern(3, 2.0).nnz() == 9);
    auto trip = csr_from_triplets(2, 2, {{1, 1, 1.0}, {0, 1, 2.0}, {1, 1, 3.0}});
    CHECK(trip.at(1, 1) == 4.0);
    CHECK(trip.nnz() == 2);
  }

  TEST_CASE("edge list round trip") {
    std::istringstream in("# comment\n0\t1\n\n1 2\n2\t0\t2.5\n");
    auto f = read_edge_list(in);
    CHECK(f.data_lines == 3);
    CHECK(f.max_index == 2);
    CHECK(f.has_weights);
    Graph g = build_graph(f.edges, 3);
    std::ostringstream out;
    write_edge_list(out, g);
    std::istringstream back(out.str());
    auto f2 = read_edge_list(back);
    CHECK(build_graph(f2.edges, 3).adjacency() == g.adjacency());

    std::istringstream bad("0\tx\n");
    CHECK_THROWS_AS(read_edge_list(bad), DataError);
    std::istringstream bad_w("0\t1\tabc\n");
    CHECK_THROWS_AS(read_edge_list(bad_w), DataError);
  }
}
