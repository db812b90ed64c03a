#include <doctest.h>

#include <cmath>

#include "gldgcn/errors.hpp"
#include "gldgcn/optim.hpp"

using namespace gldgcn;

TEST_SUITE("optim") {
  TEST_CASE("zero gradient without decay leaves parameters alone") {
    Parameter p("w", DenseMatrix(2, 2, std::vector<double>{1, -2, 3, 4}));
    const DenseMatrix before = p.value;
    AdamState s;
    for (int i = 0; i < 5; ++i) adam_step(p, s, 0.1, 0.0);
    CHECK(p.value == before);
    CHECK(s.step == 5);
  }

  TEST_CASE("quadratic converges to its minimum") {
    Parameter p("theta", DenseMatrix(1, 1, 0.0));
    AdamState s;
    for (int i = 0; i < 500; ++i) {
      p.grad(0, 0) = p.value(0, 0) - 3.0;
      adam_step(p, s, 0.1, 0.0);
    }
    CHECK(std::abs(p.value(0, 0) - 3.0) < 1e-3);
  }

  TEST_CASE("first step has magnitude lr whatever the gradient scale") {
    for (double g : {1e-6, -0.3, 1.0, 250.0, -1e5}) {
      CAPTURE(g);
      Parameter p("w", DenseMatrix(1, 1, 0.5));
      AdamState s;
      p.grad(0, 0) = g;
      adam_step(p, s, 0.01, 0.0);
      const double step = std::abs(p.value(0, 0) - 0.5);
      CHECK(step >= 0.9 * 0.01);
      CHECK(step <= 0.01 + 1e-15);
    }
  }

  TEST_CASE("weight decay folds into the gradient and grads are cleared") {
    Parameter p("w", DenseMatrix(1, 1, 2.0));
    AdamState s;
    adam_step(p, s, 0.01, 0.5);
    CHECK(p.value(0, 0) < 2.0);
    CHECK(p.grad(0, 0) == 0.0);
  }

  TEST_CASE("invalid arguments") {
    Parameter p("w", DenseMatrix(1, 1, 2.0));
    AdamState s;
    CHECK_THROWS_AS(adam_step(p, s, 0.0, 0.0), ConfigError);
    p.grad = DenseMatrix(2, 1);
    CHECK_THROWS_AS(adam_step(p, s, 0.1, 0.0), ShapeError);
  }
}
