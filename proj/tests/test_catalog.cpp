#include <doctest.h>

#include <set>

#include "pnn/catalog.hpp"
#include "pnn/dimension.hpp"

using namespace pnn;

namespace {

std::uint64_t binom(std::uint64_t n, std::uint64_t k) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

TEST_CASE("table rows") {
  const auto& rows = table1();
  REQUIRE(rows.size() == 27);
  std::set<std::string> seen;
  for (const auto& f : rows) {
    CAPTURE(f.arch.to_string());
    CHECK(f.arch.r == 2);
    CHECK(f.arch.depth() == 2);
    seen.insert(f.arch.to_string());
    REQUIRE(f.dim.has_value());
    CHECK(*f.dim <= f.edim);
    CHECK(f.edim == f.arch.expected_dim());
    CHECK(f.ambient == f.arch.ambient_dim());
    CHECK(f.source == FactSource::table1);
    REQUIRE(f.filling.has_value());
    if (*f.filling) CHECK(*f.dim == f.ambient);
    if (f.manifold_equals_variety == false && f.arch.widths[0] == 3 && f.arch.widths[1] == 2)
      CHECK(f.confidence == Confidence::remark);
  }
  CHECK(seen.size() == 27);
}

TEST_CASE("specific rows") {
  const auto f321 = lookup(Architecture({3, 2, 1}, 2));
  REQUIRE(f321);
  CHECK(*f321->dim == 5);
  CHECK(f321->edim == 6);
  CHECK(*f321->defect() == 1);

  const auto f222 = lookup(Architecture({2, 2, 2}, 2));
  REQUIRE(f222);
  CHECK(*f222->dim == 6);
  CHECK(f222->ambient == 6);
  CHECK(*f222->filling);
  CHECK_FALSE(*f222->manifold_equals_variety);

  const auto f312 = lookup(Architecture({3, 1, 2}, 2));
  REQUIRE(f312);
  CHECK(*f312->dim == 4);
  CHECK(f312->ambient == 12);
}

TEST_CASE("Alexander-Hirschowitz") {
  CHECK(ah_expected_dim(5, 7, 3) == 34);
  CHECK(ah_expected_dim(3, 5, 4) == 14);
  CHECK(ah_expected_dim(4, 9, 4) == 34);
  CHECK(ah_expected_dim(5, 14, 4) == 69);
  CHECK(ah_expected_dim(2, 2, 2) == 3);
  CHECK_FALSE(ah_exceptional(2, 2, 2));
  CHECK(ah_exceptional(3, 2, 2));
  // rank <= d1 symmetric d0 x d0 matrices
  CHECK(ah_expected_dim(3, 2, 2) == 5);
  CHECK(ah_expected_dim(5, 3, 2) == 12);
  CHECK_THROWS(ah_expected_dim(0, 1, 2));

  SUBCASE("agrees with the single-output rows of the table") {
    for (const auto& f : table1())
      if (f.arch.outputs() == 1) CHECK(ah_expected_dim(f.arch.widths[0], f.arch.widths[1], 2) == *f.dim);
  }
  SUBCASE("non-exceptional cases are the generic minimum") {
    for (int d0 = 1; d0 <= 6; ++d0)
      for (int d1 = 1; d1 <= 15; ++d1)
        for (int r = 3; r <= 5; ++r)
          if (!ah_exceptional(d0, d1, r)) {
            const auto a = static_cast<std::uint64_t>(d0), b = static_cast<std::uint64_t>(d1);
            CHECK(ah_expected_dim(d0, d1, r) == std::min(a * b, binom(a + static_cast<std::uint64_t>(r) - 1, static_cast<std::uint64_t>(r))));
          }
  }
  SUBCASE("lookup falls back to Alexander-Hirschowitz") {
    const auto f = lookup(Architecture({4, 9, 1}, 4));
    REQUIRE(f);
    CHECK(f->source == FactSource::ah);
    CHECK(*f->dim == 34);
    CHECK(*f->defect() == 1);
  }
}

TEST_CASE("width-1 rule") {
  CHECK(width1_normalize(Architecture({3, 1, 5, 1}, 3)) == Architecture({3, 1, 1, 1}, 3));
  CHECK(width1_normalize(Architecture({2, 1, 2, 3, 4}, 2)) == Architecture({2, 1, 1, 1, 4}, 2));
  CHECK(width1_normalize(Architecture({2, 2, 3}, 2)) == Architecture({2, 2, 3}, 2));

  const auto f = lookup(Architecture({2, 1, 2, 1}, 3));
  REQUIRE(f);
  CHECK(f->source == FactSource::width1);
  CHECK(*f->dim == 2);
  REQUIRE(f->rewritten_from);
  CHECK(*f->rewritten_from == Architecture({2, 1, 1, 1}, 3));

  const auto g = lookup(Architecture({3, 1, 5, 1}, 3));
  REQUIRE(g);
  CHECK(*g->dim == 3);
  CHECK(*g->defect() == 4);

  // (2,2,1,2): prefix (2,2,1) from the table, plus d_L - 1
  const auto h = lookup(Architecture({2, 2, 1, 2}, 2));
  REQUIRE(h);
  CHECK(*h->dim == 4);
  CHECK(*h->defect() == 1);

  SUBCASE("agrees with the computed dimension") {
    for (const Architecture& a : {Architecture({2, 1, 2, 1}, 2), Architecture({2, 1, 2, 1}, 4), Architecture({3, 1, 5, 1}, 3),
                                 Architecture({2, 2, 1, 2}, 2), Architecture({3, 2, 1, 3}, 2), Architecture({2, 1, 3, 2}, 3),
                                 Architecture({3, 3, 1, 2, 2}, 2)}) {
      CAPTURE(a.to_string());
      const auto fact = lookup(a);
      REQUIRE(fact);
      CHECK(neurovariety_dim(a).dim == *fact->dim);
    }
  }
}

TEST_CASE("absent architectures") {
  CHECK_FALSE(lookup(Architecture({7, 7, 7}, 9)));
  CHECK_FALSE(lookup(Architecture({3, 3, 3, 3}, 2)));
  CHECK_FALSE(typical_rank_filling(9, 9, 2));
}

TEST_CASE("typical-rank filling") {
  const auto f = typical_rank_filling(2, 3, 4);
  REQUIRE(f);
  CHECK(f->filling);
  CHECK(f->closure == ClosureStatus::strict);
  CHECK(f->chain.find("cl M(2,3,1) < cl M(2,4,1)") != std::string::npos);

  const auto g = typical_rank_filling(4, 5, 3);
  REQUIRE(g);
  CHECK(g->filling);
  CHECK(typical_rank_filling(4, 6, 3)->closure == ClosureStatus::equal);
  CHECK_FALSE(typical_rank_filling(4, 4, 3));
  CHECK(typical_rank_filling(2, 2, 3)->filling);
  CHECK(typical_rank_filling(2, 3, 3)->closure == ClosureStatus::equal);
  CHECK(typical_rank_filling(3, 10, 5)->closure == ClosureStatus::unknown);
  CHECK(typical_rank_filling(3, 13, 5)->closure == ClosureStatus::equal);

  SUBCASE("filling facts agree with the computed dimension") {
    for (const auto& [d0, d1, r] : std::vector<std::tuple<int, int, int>>{{2, 2, 3}, {2, 3, 4}, {2, 3, 5}, {3, 6, 4}, {3, 7, 5}, {4, 5, 3}}) {
      const Architecture a({d0, d1, 1}, r);
      CAPTURE(a.to_string());
      REQUIRE(typical_rank_filling(d0, d1, r));
      CHECK(neurovariety_dim(a).filling);
      if (d1 > 1) {
        const Architecture below({d0, d1 - 1, 1}, r);
        CHECK_FALSE(typical_rank_filling(d0, d1 - 1, r));
        CHECK_FALSE(neurovariety_dim(below).filling);
      }
    }
  }
}

TEST_CASE("conjecture flag") {
  CHECK(conjecture_nonincreasing_applies(Architecture({3, 3, 2, 2}, 3)));
  CHECK_FALSE(conjecture_nonincreasing_applies(Architecture({2, 2, 1, 2}, 2)));
  CHECK_FALSE(conjecture_nonincreasing_applies(Architecture({3, 2, 1}, 2)));
}

TEST_CASE("source names") {
  CHECK(to_string(FactSource::table1) == "table-1");
  CHECK(to_string(FactSource::ah) == "AH");
  CHECK(to_string(FactSource::typical_rank) == "typical-rank");
  CHECK(to_string(FactSource::width1) == "width-1");
}
