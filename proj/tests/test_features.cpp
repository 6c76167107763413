#include <doctest.h>

#include <set>

#include "qdnn/error.hpp"
#include "qdnn/features.hpp"
#include "qdnn/rng.hpp"

using namespace qdnn;

namespace {

// Pascal's rule, independent of the closed form used by feature_dim.
std::uint64_t binomial(int n, int k) {
  std::vector<std::uint64_t> row(n + 1, 0);
  row[0] = 1;
  for (int i = 1; i <= n; ++i)
    for (int j = i; j > 0; --j) row[j] += row[j - 1];
  return row[k];
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("dimension table for 7 and 9 parameters") {
  const std::uint64_t n7[] = {8, 36, 120, 330, 792, 1716, 3432, 6435, 11440};
  const std::uint64_t n9[] = {10, 55, 220, 715, 2002, 5005, 11440, 24310, 48620};
  for (int l = 1; l <= 9; ++l) {
    CHECK(feature_dim(7, l) == n7[l - 1]);
    CHECK(feature_dim(9, l) == n9[l - 1]);
  }
}

TEST_CASE("feature_dim agrees with Pascal's triangle and rejects overflow") {
  for (int n = 1; n <= 12; ++n)
    for (int l = 1; l <= 12; ++l) CHECK(feature_dim(n, l) == binomial(n + l, n));
  CHECK_THROWS_AS(feature_dim(200, 200), Error);
  CHECK_THROWS_AS(feature_dim(0, 2), Error);
  CHECK_THROWS_AS(feature_dim(3, 0), Error);
}

TEST_CASE("multi-indices are graded-lex ordered, distinct and complete") {
  const auto idx = enumerate_multi_indices(4, 3);
  REQUIRE(idx.size() == feature_dim(4, 3));
  CHECK(idx.front() == MultiIndex(4, 0));
  std::set<MultiIndex> seen(idx.begin(), idx.end());
  CHECK(seen.size() == idx.size());
  auto total = [](const MultiIndex& a) {
    int s = 0;
    for (int v : a) s += v;
    return s;
  };
  for (std::size_t j = 1; j < idx.size(); ++j) {
    const int t0 = total(idx[j - 1]), t1 = total(idx[j]);
    CHECK(t0 <= t1);
    if (t0 == t1) CHECK(idx[j - 1] < idx[j]);
  }
  CHECK(total(idx.back()) == 3);
}

TEST_CASE("basis evaluation equals the direct monomials bitwise") {
  CounterRng rng(5);
  for (int n : {1, 3, 7, 9}) {
    const FeatureBasis basis(n, 4);
    for (int k = 0; k < 10; ++k) {
      std::vector<double> x(n);
      for (auto& v : x) v = rng.uniform(-1.0, 1.0);
      const auto phi = basis(x);
      REQUIRE(phi.size() == basis.dim());
      CHECK(phi[0] == 1.0);
      for (std::size_t j = 0; j < phi.size(); ++j) CHECK(phi[j] == monomial(x, basis.indices()[j]));
    }
  }
}

TEST_CASE("first-degree features are the inputs") {
  const std::vector<double> x = {0.1, -0.2, 0.3};
  const auto phi = feature_map(x, 2);
  CHECK(phi.size() == 10);
  // After the constant come x3, x2, x1 in ascending exponent-tuple order.
  CHECK(phi[1] == 0.3);
  CHECK(phi[2] == -0.2);
  CHECK(phi[3] == 0.1);
}

TEST_CASE("zero input gives the unit vector, 0^0 = 1") {
  const std::vector<double> x(5, 0.0);
  const auto phi = feature_map(x, 3);
  CHECK(phi[0] == 1.0);
  for (std::size_t j = 1; j < phi.size(); ++j) CHECK(phi[j] == 0.0);
}

TEST_CASE("wrong input length is a shape error") {
  const FeatureBasis basis(3, 2);
  const std::vector<double> x(4, 0.5);
  CHECK_THROWS_AS(basis(x), Error);
  std::vector<double> out(3);
  CHECK_THROWS_AS(basis.evaluate(std::vector<double>(3, 0.5), out), Error);
}

TEST_CASE("evaluate_rows stacks samples") {
  const FeatureBasis basis(2, 3);
  const std::vector<std::vector<double>> xs = {{0.5, 2.0}, {-1.0, 0.25}};
  const Matrix m = basis.evaluate_rows(xs);
  REQUIRE(m.rows() == 2);
  REQUIRE(m.cols() == basis.dim());
  for (std::size_t r = 0; r < 2; ++r) {
    const auto phi = basis(xs[r]);
    for (std::size_t j = 0; j < basis.dim(); ++j) CHECK(m(r, j) == phi[j]);
  }
}

}  // TEST_SUITE
