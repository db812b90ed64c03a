#include <doctest.h>

#include <functional>
#include <memory>

#include "gldgcn/gradcheck.hpp"
#include "gldgcn/tape.hpp"
#include "support/oracles.hpp"

using namespace gldgcn;

namespace {

using Builder = std::function<Var(Tape&, std::vector<Var>&)>;

/// Finite-difference check of the tape gradient of build(...) w.r.t. params.
GradCheckReport check(std::vector<Parameter>& params, const Builder& build) {
  CheckedLoss loss = [&](bool with_grad) {
    Tape t;
    std::vector<Var> vs;
    for (Parameter& p : params) vs.push_back(t.parameter(p));
    Var out = build(t, vs);
    if (with_grad) t.backward(out);
    return t.scalar(out);
  };
  std::vector<CheckedParam> cp;
  for (Parameter& p : params) cp.push_back({&p, p.name});
  return finite_diff_check(loss, cp);
}

/// Scalar reduction with a nontrivial gradient for every entry.
Var reduce(Tape& t, Var x, std::uint64_t seed) {
  RngStream rng(seed);
  const auto& v = t.value(x);
  Var c = t.constant(oracle::random_matrix(v.rows(), v.cols(), rng));
  return ad::sum_squares(t, ad::add(t, x, c));
}

std::shared_ptr<const CsrMatrix> random_support(std::size_t n, std::uint64_t seed) {
  RngStream rng(seed);
  Graph g = add_self_loops(oracle::random_graph(n, 0.4, rng));
  CsrMatrix m = g.adjacency();
  for (double& v : m.values) v = 0.5 + rng.uniform();
  return std::make_shared<const CsrMatrix>(std::move(m));
}

void require_pass(const GradCheckReport& r) {
  for (const auto& e : r.entries) {
    CAPTURE(e.name);
    CHECK(e.max_rel_error <= 1e-4);
  }
  CHECK(r.passed());
}

}  // namespace

TEST_SUITE("tape") {
  TEST_CASE("sum gives all-ones gradient, half square gives the value") {
    RngStream rng(1);
    Parameter w("w", oracle::random_matrix(3, 4, rng));
    {
      Tape t;
      Var loss = ad::sum(t, t.parameter(w));
      t.backward(loss);
      CHECK(w.grad == DenseMatrix(3, 4, 1.0));
    }
    w.zero_grad();
    {
      Tape t;
      Var loss = ad::scale(t, ad::sum_squares(t, t.parameter(w)), 0.5);
      t.backward(loss);
      CHECK(oracle::max_abs_diff(w.grad, w.value) < 1e-15);
    }
  }

  TEST_CASE("backward needs a scalar loss") {
    Tape t;
    Var x = t.variable(DenseMatrix(2, 2, 1.0));
    CHECK_THROWS_AS(t.backward(x), std::logic_error);
  }

  TEST_CASE("linear loss is exact") {
    RngStream rng(2);
    std::vector<Parameter> ps{{"w", oracle::random_matrix(4, 3, rng)}};
    DenseMatrix x = oracle::random_matrix(5, 4, rng);
    auto r = check(ps, [&](Tape& t, std::vector<Var>& v) { return ad::sum(t, ad::matmul(t, t.constant(x), v[0])); });
    CHECK(r.groups.at(0).max_rel_error <= 1e-9);
  }

  TEST_CASE("matmul and add") {
    RngStream rng(3);
    std::vector<Parameter> ps{{"a", oracle::random_matrix(4, 3, rng)}, {"b", oracle::random_matrix(3, 2, rng)},
                              {"c", oracle::random_matrix(4, 2, rng)}};
    require_pass(check(ps, [](Tape& t, std::vector<Var>& v) {
      return ad::sum_squares(t, ad::add(t, ad::matmul(t, v[0], v[1]), ad::scale(t, v[2], -0.7)));
    }));
  }

  TEST_CASE("propagate with a constant operator") {
    RngStream rng(4);
    auto op = random_support(6, 4);
    std::vector<Parameter> ps{{"h", oracle::random_matrix(6, 3, rng)}};
    require_pass(check(ps, [&](Tape& t, std::vector<Var>& v) { return reduce(t, ad::propagate(t, op, v[0]), 11); }));
  }

  TEST_CASE("propagate_normalized differentiates through the degrees") {
    RngStream rng(5);
    auto sup = random_support(7, 5);
    std::vector<Parameter> ps{{"s", oracle::random_matrix(1, sup->nnz(), rng, 0.2, 1.5)},
                              {"h", oracle::random_matrix(7, 3, rng)}};
    require_pass(check(ps, [&](Tape& t, std::vector<Var>& v) {
      return reduce(t, ad::propagate_normalized(t, sup, v[0], v[1]), 12);
    }));

    // value matches the dense D^-1/2 S D^-1/2 H oracle
    Tape t;
    Var out = ad::propagate_normalized(t, sup, t.constant(ps[0].value), t.constant(ps[1].value));
    CsrMatrix s = *sup;
    s.values = ps[0].value.values();
    DenseMatrix ref = oracle::matmul(oracle::sym_normalize(to_dense(s)), ps[1].value);
    CHECK(oracle::max_abs_diff(t.value(out), ref) < 1e-13);
  }

  TEST_CASE("relu, softmax and dropout") {
    RngStream rng(6);
    std::vector<Parameter> ps{{"x", oracle::random_matrix(5, 4, rng)}};
    require_pass(check(ps, [](Tape& t, std::vector<Var>& v) { return reduce(t, ad::relu(t, v[0]), 13); }));
    require_pass(check(ps, [](Tape& t, std::vector<Var>& v) { return reduce(t, ad::row_softmax(t, v[0]), 14); }));
    require_pass(check(ps, [](Tape& t, std::vector<Var>& v) {
      RngStream mask_rng(77);
      return reduce(t, ad::dropout(t, v[0], 0.5, mask_rng, true), 15);
    }));
    Tape t;
    Var x = t.constant(ps[0].value);
    RngStream r(1);
    CHECK(ad::dropout(t, x, 0.5, r, false).id == x.id);
    CHECK(ad::dropout(t, x, 0.0, r, true).id == x.id);
  }

  TEST_CASE("losses") {
    RngStream rng(7);
    std::vector<int> labels{0, 2, 1, 1, 0, 2};
    std::vector<std::size_t> mask{0, 1, 3, 5};
    std::vector<Parameter> ps{{"za", oracle::random_matrix(6, 3, rng)}, {"zp", oracle::random_matrix(6, 3, rng)}};
    for (Reduction red : {Reduction::sum, Reduction::mean}) {
      require_pass(check(ps, [&](Tape& t, std::vector<Var>& v) {
        return ad::masked_cross_entropy(t, ad::row_softmax(t, v[0]), labels, mask, red);
      }));
    }
    require_pass(check(ps, [&](Tape& t, std::vector<Var>& v) {
      return ad::branch_agreement(t, ad::row_softmax(t, v[1]), ad::row_softmax(t, v[0]));
    }));
    Tape t;
    Var z = ad::row_softmax(t, t.constant(ps[0].value));
    CHECK(t.scalar(ad::masked_cross_entropy(t, z, labels, mask, Reduction::sum)) ==
          doctest::Approx(masked_cross_entropy(t.value(z), labels, mask)).epsilon(1e-14));
  }

  TEST_CASE("pair scores, support softmax and the graph-learning loss") {
    RngStream rng(8);
    auto sup = random_support(6, 8);
    auto dist2 = std::make_shared<std::vector<double>>(sup->nnz());
    for (double& d : *dist2) d = rng.uniform() * 3.0;
    std::vector<Parameter> ps{{"h", oracle::random_matrix(6, 4, rng)}, {"a", oracle::random_matrix(4, 1, rng)}};
    require_pass(check(ps, [&](Tape& t, std::vector<Var>& v) {
      return reduce(t, ad::pair_scores(t, v[0], v[1], sup), 16);
    }));
    for (bool fidelity : {false, true}) {
      require_pass(check(ps, [&](Tape& t, std::vector<Var>& v) {
        Var s = ad::support_softmax(t, ad::relu(t, ad::pair_scores(t, v[0], v[1], sup)), sup);
        return ad::graph_learning_loss(t, s, dist2, 0.3, 0.7, fidelity);
      }));
    }
  }

  TEST_CASE("tape accounts memory") {
    Tape t;
    Var x = t.variable(DenseMatrix(100, 10, 1.0));
    Var y = ad::scale(t, x, 2.0);
    t.backward(ad::sum(t, y));
    CHECK(t.peak_bytes() >= 2 * 100 * 10 * sizeof(double));
    CHECK(t.size() == 3);
  }
}
