#include <doctest.h>

#include <cmath>
#include <sstream>

#include "pnn/symtensor.hpp"
#include "support.hpp"

using namespace pnn;
using pnn::test::all_tuples;

namespace {

std::uint64_t factorial(int n) {
  std::uint64_t f = 1;
  for (int i = 2; i <= n; ++i) f *= static_cast<std::uint64_t>(i);
  return f;
}

/// Brute-force multiset count of tuples of length d over n symbols.
std::size_t count_multisets(int n, int d) {
  std::size_t c = 0;
  for (const auto& t : all_tuples(n, d)) c += std::is_sorted(t.begin(), t.end()) ? 1 : 0;
  return c;
}

// x1^3 + 3 x1 x2^2 + 3 x2^3
RationalPoly cubic() {
  RationalPoly p(2, 3);
  p.set({3, 0}, 1);
  p.set({1, 2}, 3);
  p.set({0, 3}, 3);
  return p;
}

}  // namespace

TEST_CASE("enumerate_multiindices: order and count") {
  const auto m = enumerate_multiindices(2, 2);
  REQUIRE(m.size() == 3);
  CHECK(m[0] == MultiIndex{2, 0});
  CHECK(m[1] == MultiIndex{1, 1});
  CHECK(m[2] == MultiIndex{0, 2});
  const auto one = enumerate_multiindices(1, 5);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == MultiIndex{5});
  CHECK(enumerate_multiindices(3, 0).size() == 1);
  for (int n = 1; n <= 4; ++n)
    for (int d = 0; d <= 5; ++d) {
      const auto list = enumerate_multiindices(n, d);
      CHECK(list.size() == count_multisets(n, d));
      for (std::size_t i = 0; i < list.size(); ++i) {
        CHECK(list[i].degree() == d);
        CHECK(graded_lex_rank(list[i]) == i);
        if (i > 0) CHECK(GradedLex{}(list[i - 1], list[i]));
      }
    }
  CHECK(enumerate_multiindices(3, 4).size() == 15);
}

TEST_CASE("multinomial") {
  CHECK(multinomial({2, 0}) == 1);
  CHECK(multinomial({1, 1}) == 2);
  CHECK(multinomial({2, 1, 1}) == factorial(4) / (factorial(2) * factorial(1) * factorial(1)));
  CHECK(multinomial({2, 1, 1}) == 12);
  for (int n = 1; n <= 4; ++n)
    for (int d = 0; d <= 6; ++d) {
      std::uint64_t sum = 0;
      for (const auto& m : enumerate_multiindices(n, d)) sum += multinomial(m);
      CHECK(sum == static_cast<std::uint64_t>(std::pow(n, d)));
    }
  CHECK_THROWS_AS(multinomial({30, 30, 30}), std::overflow_error);
  CHECK(multinomial_big({30, 30, 30}) > BigInt(std::numeric_limits<std::uint64_t>::max()));
}

TEST_CASE("poly_to_tensor on the cubic example") {
  const auto t = poly_to_tensor(cubic());
  const auto f = flatten(t, {0, 1});
  const Matrix<Rational> expected{{1, 0}, {0, 1}, {0, 1}, {1, 3}};
  CHECK(f.matrix == expected);
  const auto g = flatten(t, {0});
  CHECK(g.matrix == Matrix<Rational>{{1, 0, 0, 1}, {0, 1, 1, 3}});
  CHECK(tensor_to_poly(t) == cubic());
  CHECK(poly_to_tensor(RationalPoly(2, 3)).is_zero());
}

TEST_CASE("tensor_to_poly") {
  RationalSymTensor t(2, 2);
  t.set({0, 0}, 1);
  RationalPoly x1sq(2, 2);
  x1sq.set({2, 0}, 1);
  CHECK(tensor_to_poly(t) == x1sq);
}

TEST_CASE("poly/tensor round trip is exact") {
  Rng rng(11);
  for (int n = 1; n <= 4; ++n)
    for (int r = 1; r <= 5; ++r)
      for (int rep = 0; rep < 5; ++rep) {
        const auto p = test::random_rational_poly(n, r, rng);
        const auto t = poly_to_tensor(p);
        CHECK(tensor_to_poly(t) == p);
        CHECK(t.entries().size() <= enumerate_multiindices(n, r).size());
      }
}

TEST_CASE("tensor entries re-expand to the polynomial") {
  // sum over all ordered tuples of T_j x_j1 ... x_jr reproduces every coefficient.
  Rng rng(5);
  for (int n = 1; n <= 3; ++n)
    for (int r = 1; r <= 4; ++r) {
      const auto p = test::random_rational_poly(n, r, rng);
      const auto t = poly_to_tensor(p);
      RationalPoly back(n, r);
      for (const auto& tuple : all_tuples(n, r)) back.add(MultiIndex(test::exponents_of(tuple, n)), t.at(tuple));
      CHECK(back == p);
    }
}

TEST_CASE("flatten") {
  Rng rng(3);
  SUBCASE("order 2 gives the symmetric matrix") {
    const auto p = test::random_rational_poly(3, 2, rng, 5, 1.0);
    const auto t = poly_to_tensor(p);
    const auto f = flatten(t, {0});
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(f.matrix(i, j) == t.at({i, j}));
    CHECK(f.matrix == f.matrix.transpose());
  }
  SUBCASE("rejects empty or full parts") {
    const auto t = poly_to_tensor(cubic());
    CHECK_THROWS(flatten(t, {}));
    CHECK_THROWS(flatten(t, {0, 1, 2}));
  }
  SUBCASE("rank-one tensor has rank-one flattenings") {
    for (int rep = 0; rep < 10; ++rep) {
      std::uniform_int_distribution<int> u(-5, 5);
      std::vector<Rational> v{u(rng), u(rng), u(rng)};
      if (v[0] == 0 && v[1] == 0 && v[2] == 0) v[0] = 1;
      const auto t = poly_to_tensor(power_form<Rational>(v, 3, Rational(1)));
      for (const std::vector<int>& part : {std::vector<int>{0}, std::vector<int>{1}, std::vector<int>{0, 2}})
        CHECK(exact_rank(flatten(t, part).matrix) == 1);
    }
  }
  SUBCASE("entries agree with the expanded tensor, Frobenius norm preserved") {
    const auto p = test::random_rational_poly(3, 3, rng, 5, 1.0);
    const auto t = poly_to_tensor(p);
    Rational full_norm = 0;
    for (const auto& tuple : all_tuples(3, 3)) full_norm += t.at(tuple) * t.at(tuple);
    for (const std::vector<int>& part : {std::vector<int>{0}, std::vector<int>{2}, std::vector<int>{0, 1}}) {
      const auto f = flatten(t, part);
      Rational norm = 0;
      for (const auto& v : f.matrix.data()) norm += v * v;
      CHECK(norm == full_norm);
      CHECK(f.matrix.rows() == static_cast<std::size_t>(std::pow(3, part.size())));
    }
  }
}

TEST_CASE("is_rank_one") {
  const std::vector<double> v{1, 2};
  const auto t = poly_to_tensor(power_form<double>(v, 3, 1.0));
  CHECK(is_rank_one(t).verdict == RankOneVerdict::yes);

  const std::vector<double> w{1, -1};
  const auto sum = poly_to_tensor(power_form<double>(v, 3, 1.0) + power_form<double>(w, 3, 1.0));
  const auto res = is_rank_one(sum);
  CHECK(res.verdict == RankOneVerdict::no);
  CHECK(res.worst_minor > 1e-3);

  CHECK(is_rank_one(poly_to_tensor(cubic())).verdict == RankOneVerdict::no);
  CHECK(exact_rank(flatten(poly_to_tensor(cubic()), {0, 1}).matrix) == 2);
  CHECK(is_rank_one(RationalSymTensor(2, 3)).verdict == RankOneVerdict::zero);

  Rng rng(9);
  for (int n = 1; n <= 4; ++n)
    for (int r = 1; r <= 5; ++r) {
      const auto u = test::random_vector(static_cast<std::size_t>(n), rng);
      CHECK(is_rank_one(poly_to_tensor(power_form<double>(u, r, 1.0))).verdict == RankOneVerdict::yes);
    }
}

TEST_CASE("power_form") {
  const std::vector<Rational> ones{1, 1};
  RationalPoly sq(2, 2);
  sq.set({2, 0}, 1);
  sq.set({1, 1}, 2);
  sq.set({0, 2}, 1);
  CHECK(power_form<Rational>(ones, 2, Rational(1)) == sq);

  // w211 (w111 x1 + w112 x2)^2
  const Rational a(3), b(-2), s(5);
  RationalPoly expected(2, 2);
  expected.set({2, 0}, s * a * a);
  expected.set({1, 1}, s * 2 * a * b);
  expected.set({0, 2}, s * b * b);
  const std::vector<Rational> ab{a, b};
  CHECK(power_form<Rational>(ab, 2, s) == expected);

  // The tensor of v^r is the r-fold outer power of v entrywise.
  Rng rng(4);
  for (int r = 1; r <= 4; ++r) {
    std::uniform_int_distribution<int> u(-4, 4);
    const std::vector<Rational> v{u(rng), u(rng), u(rng)};
    const auto t = poly_to_tensor(power_form<Rational>(v, r, Rational(1)));
    for (const auto& tuple : all_tuples(3, r)) {
      Rational outer = 1;
      for (const int i : tuple) outer *= v[static_cast<std::size_t>(i)];
      CHECK(t.at(tuple) == outer);
    }
  }
}

TEST_CASE("polynomial text format round trip") {
  Rng rng(21);
  std::stringstream ss;
  std::vector<RationalPoly> polys;
  for (int i = 0; i < 4; ++i) {
    polys.push_back(test::random_rational_poly(3, 2 + i % 2, rng));
    write_poly(ss, polys.back());
  }
  CHECK(read_polys(ss) == polys);
  std::stringstream dec("# comment\n2 2\n2,0\t0.25\n1,1\t-3/4\n");
  const auto p = read_poly(dec);
  REQUIRE(p);
  CHECK(p->coeff({2, 0}) == Rational(1, 4));
  CHECK(p->coeff({1, 1}) == Rational(-3, 4));
}
