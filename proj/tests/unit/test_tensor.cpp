#include <doctest.h>

#include <cmath>
#include <random>

#include "bregman_perceptron/errors.hpp"
#include "bregman_perceptron/tensor.hpp"

using namespace bregman;

TEST_CASE("matvec_transposed") {
  SUBCASE("identity") {
    CHECK(matvec_transposed(DenseMatrix::identity(2), DenseVector{3, 4}) == DenseVector{3, 4});
  }
  SUBCASE("column sums") {
    CHECK(matvec_transposed(DenseMatrix{{1, 2}, {3, 4}}, DenseVector{1, 1}) == DenseVector{4, 6});
  }
  SUBCASE("single row scales") {
    CHECK(matvec_transposed(DenseMatrix{{1, 2, 3}}, DenseVector{2}) == DenseVector{2, 4, 6});
  }
  SUBCASE("mismatch names both shapes") {
    try {
      matvec_transposed(DenseMatrix(2, 3), DenseVector{1, 2, 3});
      FAIL("no throw");
    } catch (const DimensionError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("(2x3)") != std::string::npos);
      CHECK(msg.find("3") != std::string::npos);
    }
  }
  SUBCASE("identity property on random vectors") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(-5, 5);
    for (std::size_t n = 1; n < 12; ++n) {
      DenseVector x(n);
      for (auto& v : x) v = u(gen);
      CHECK(matvec_transposed(DenseMatrix::identity(n), x) == x);
    }
  }
}

TEST_CASE("outer_product") {
  CHECK(outer_product(DenseVector{1}, DenseVector{2, 3}) == DenseMatrix{{2}, {3}});
  CHECK(outer_product(DenseVector{0, 0, 0}, DenseVector{1, 2}) == DenseMatrix(2, 3, 0.0));
  CHECK(outer_product(DenseVector{1, 0}, DenseVector{5}) == DenseMatrix{{5, 0}});
}

TEST_CASE("axpy_matrix") {
  const DenseMatrix B{{1, -2}, {0.5, 4}};
  CHECK(axpy_matrix(0.0, DenseMatrix{{9, 9}, {9, 9}}, B) == B);
  CHECK(axpy_matrix(1.0, scale(-1.0, B), B) == DenseMatrix(2, 2, 0.0));
  CHECK(axpy_matrix(0.5, DenseMatrix{{2}}, DenseMatrix{{1}}) == DenseMatrix{{2}});
  CHECK_THROWS_AS(axpy_matrix(1.0, DenseMatrix(2, 2), DenseMatrix(2, 3)), DimensionError);
}

TEST_CASE("outer product plus axpy traces the classic update by hand") {
  // W = [[1, 0], [0, 1]], x = (2, -1), e = (0.5, -1):
  // W + x e^T = [[1 + 1, 0 - 2], [0 - 0.5, 1 + 1]]
  const DenseMatrix W = DenseMatrix::identity(2);
  const DenseMatrix got = axpy_matrix(1.0, outer_product(DenseVector{0.5, -1}, DenseVector{2, -1}), W);
  CHECK(got == DenseMatrix{{2, -2}, {-0.5, 2}});

  const DenseMatrix W2{{0.25, -1}, {3, 0}};
  const DenseMatrix got2 = axpy_matrix(1.0, outer_product(DenseVector{1, 1}, DenseVector{0, 4}), W2);
  CHECK(got2 == DenseMatrix{{0.25, -1}, {7, 4}});
}

TEST_CASE("l1_norm") {
  CHECK(l1_norm(DenseMatrix(3, 2, 0.0)) == 0.0);
  CHECK(l1_norm(DenseMatrix{{1, -2}, {3, -4}}) == 10.0);
  CHECK(l1_norm(DenseMatrix{{-0.5}}) == 0.5);

  SUBCASE("absolute homogeneity") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int t = 0; t < 200; ++t) {
      DenseMatrix W(1 + t % 5, 1 + t % 7);
      for (double& v : W.values()) v = u(gen);
      const double c = u(gen);
      const double lhs = l1_norm(scale(c, W));
      const double rhs = std::abs(c) * l1_norm(W);
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, rhs));
    }
  }
}

TEST_CASE("construction checks") {
  CHECK_THROWS_AS(DenseMatrix(2, 2, std::vector<double>{1, 2, 3}), DimensionError);
  CHECK_THROWS_AS((DenseMatrix{{1, 2}, {3}}), DimensionError);
  const DenseMatrix m(2, 3, std::vector<double>{1, 2, 3, 4, 5, 6});
  CHECK(m(1, 0) == 4);
  CHECK(m.row(1)[2] == 6);
  CHECK(m.shape_string() == "(2x3)");
}

TEST_CASE("vector helpers") {
  CHECK(dot(DenseVector{1, 2, 3}.values(), DenseVector{4, 5, 6}.values()) == 32);
  CHECK(squared_norm(DenseVector{3, 4}.values()) == 25);
  CHECK(subtract(DenseVector{3, 4}, DenseVector{1, 1}) == DenseVector{2, 3});
  CHECK(add(DenseVector{3, 4}, DenseVector{1, 1}) == DenseVector{4, 5});
  CHECK(scale(2.0, DenseVector{3, 4}) == DenseVector{6, 8});
  CHECK(all_finite(DenseVector{1, 2}.values()));
  CHECK_FALSE(all_finite(DenseVector{1, NAN}.values()));
  CHECK_FALSE(all_finite(DenseVector{INFINITY}.values()));
  CHECK_THROWS_AS(subtract(DenseVector{1}, DenseVector{1, 2}), DimensionError);
}
