#include <doctest.h>

#include <array>

#include <algorithm>

#include "smlab/error.hpp"
#include "smlab/matching.hpp"
#include "test_support.hpp"

using namespace smlab;

namespace {

Matching cyclic_shift(int n, int k) {
  std::vector<int> p(n);
  for (int i = 0; i < n; ++i) p[i] = (i + k) % n;
  return Matching::from_partners_of_1(p);
}

}  // namespace

TEST_CASE("mutual-best matching of a symmetric market has no blocking pairs") {
  Instance inst = generate_instance(Variant::SM, PrefType::Symmetric, 5, 17);
  Matching best = oracle::mutual_best_pairing(inst);
  CHECK(find_blocking_pairs(inst, best).empty());
  CHECK(is_stable(inst, best));
}

TEST_CASE("swapped couple blocks when both prefer their first choice") {
  // Both sides rank the same-index partner first; the crossed matching
  // leaves (0, 0) wanting each other.
  Instance inst = fixtures::from_utilities(
      Variant::SM, PrefType::Asymmetric,
      {{2.0, 1.0}, {2.0, 1.0}}, {{2.0, 1.0}, {2.0, 1.0}});
  Matching crossed = Matching::from_partners_of_1({1, 0});
  auto bp = find_blocking_pairs(inst, crossed);
  REQUIRE(bp.size() == 1);
  CHECK(bp[0] == BlockingPair{0, 0});
  CHECK_FALSE(is_stable(inst, crossed));
}

TEST_CASE("blocking pairs match the double-loop oracle on random inputs") {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    Variant v = std::array{Variant::SM, Variant::SMI, Variant::SMT}[trial % 3];
    PrefType p = trial % 2 ? PrefType::Symmetric : PrefType::Asymmetric;
    int n = 2 + rng.uniform_int(4);
    Instance inst = generate_instance(v, p, n, 1000 + trial);
    Matching m = oracle::random_matching(n, rng);
    auto got = find_blocking_pairs(inst, m);
    auto want = oracle::blocking_pairs(inst, m);
    REQUIRE(got.size() == want.size());
    for (size_t k = 0; k < got.size(); ++k) {
      CHECK(got[k].i == want[k].first);
      CHECK(got[k].j == want[k].second);
    }
  }
}

TEST_CASE("inconsistent matchings are rejected") {
  Instance inst = generate_instance(Variant::SM, PrefType::Asymmetric, 3, 1);
  Matching broken = Matching::empty(3);
  broken.partner_of_1[0] = 1;  // one-sided edit
  CHECK_THROWS_AS(find_blocking_pairs(inst, broken), ContractViolation);
  CHECK_THROWS_AS(is_stable(inst, broken), ContractViolation);
  Matching wrong_size = Matching::empty(4);
  CHECK_THROWS_AS(is_stable(inst, wrong_size), ContractViolation);
}

TEST_CASE("deferred acceptance is stable across variants and sides") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    Variant v = std::array{Variant::SM, Variant::SMI, Variant::SMT}[trial % 3];
    PrefType p = trial % 2 ? PrefType::Symmetric : PrefType::Asymmetric;
    int n = 2 + rng.uniform_int(5);
    Instance inst = generate_instance(v, p, n, 7000 + trial);
    CHECK(is_stable(inst, gale_shapley(inst, 1)));
    CHECK(is_stable(inst, gale_shapley(inst, 2)));
  }
}

TEST_CASE("symmetric strict markets have one stable matching: mutual best") {
  Instance inst = generate_instance(Variant::SM, PrefType::Symmetric, 4, 23);
  Matching best = oracle::mutual_best_pairing(inst);
  CHECK(gale_shapley(inst, 1) == best);
  CHECK(gale_shapley(inst, 2) == best);
  auto all = enumerate_stable_matchings(inst);
  REQUIRE(all.size() == 1);
  CHECK(all[0] == best);
}

TEST_CASE("the cyclic 3x3 market behaves as computed by enumeration") {
  Instance inst = fixtures::cyclic3();
  auto stable = enumerate_stable_matchings(inst);
  REQUIRE(stable.size() == 3);
  for (int k = 0; k < 3; ++k) {
    CHECK(std::find(stable.begin(), stable.end(), cyclic_shift(3, k)) !=
          stable.end());
  }

  // Proposing side gets its first choice everywhere.
  CHECK(gale_shapley(inst, 1) == cyclic_shift(3, 0));
  CHECK(gale_shapley(inst, 2) == cyclic_shift(3, 2));

  // Odd stable-set size: the middle matching gives everyone its second-best
  // stable partner.
  auto median = median_stable_matching(inst);
  REQUIRE(median.has_value());
  CHECK(*median == cyclic_shift(3, 1));
}

TEST_CASE("unacceptable agents stay unmatched under deferred acceptance") {
  // Side-2 agent 0 is disliked by everyone on side 1.
  Instance inst = fixtures::from_utilities(
      Variant::SMI, PrefType::Asymmetric,
      {{-1.0, 5.0, 4.0}, {-2.0, 3.0, 6.0}, {-3.0, 7.0, 2.0}},
      {{1.0, 2.0, 3.0}, {3.0, 1.0, 2.0}, {2.0, 3.0, 1.0}});
  for (int side : {1, 2}) {
    Matching m = gale_shapley(inst, side);
    CHECK(m.partner_of_2[0] == kUnmatched);
    CHECK(is_stable(inst, m));
  }
}

TEST_CASE("fully negative market has exactly the empty stable matching") {
  Instance inst = fixtures::all_negative(3);
  CHECK(is_stable(inst, Matching::empty(3)));
  auto all = enumerate_stable_matchings(inst);
  REQUIRE(all.size() == 1);
  CHECK(all[0] == Matching::empty(3));
  CHECK(gale_shapley(inst, 1) == Matching::empty(3));
}

TEST_CASE("both deferred-acceptance outcomes appear in the enumeration") {
  Rng rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    Variant v = std::array{Variant::SM, Variant::SMI, Variant::SMT}[trial % 3];
    int n = 2 + rng.uniform_int(4);
    Instance inst = generate_instance(v, PrefType::Asymmetric, n, 300 + trial);
    auto all = enumerate_stable_matchings(inst);
    CHECK(!all.empty());
    for (int side : {1, 2}) {
      Matching m = gale_shapley(inst, side);
      CHECK(std::find(all.begin(), all.end(), m) != all.end());
    }
  }
}

TEST_CASE("enumeration respects its size guard") {
  Instance inst = generate_instance(Variant::SM, PrefType::Asymmetric, 9, 1);
  CHECK_THROWS_AS(enumerate_stable_matchings(inst), SizeGuardError);
}

TEST_CASE("median matching is empty for an even stable set") {
  Instance inst = fixtures::two_stable();
  CHECK(enumerate_stable_matchings(inst).size() == 2);
  CHECK_FALSE(median_stable_matching(inst).has_value());
}

TEST_CASE("single stable matching is its own median") {
  Instance inst = generate_instance(Variant::SM, PrefType::Symmetric, 4, 5);
  auto median = median_stable_matching(inst);
  REQUIRE(median.has_value());
  CHECK(*median == oracle::mutual_best_pairing(inst));
}

TEST_CASE("odd stable sets yield a stable median on random strict markets") {
  int odd_cases = 0;
  for (std::int64_t seed = 0; seed < 120; ++seed) {
    Instance inst = generate_instance(Variant::SM, PrefType::Asymmetric, 5, seed);
    auto stable = enumerate_stable_matchings(inst);
    if (stable.size() % 2 == 0) continue;
    ++odd_cases;
    auto median = median_stable_matching(inst);
    REQUIRE(median.has_value());
    CHECK(is_stable(inst, *median));
    CHECK(std::find(stable.begin(), stable.end(), *median) != stable.end());
  }
  CHECK(odd_cases > 20);
}

TEST_CASE("partial matchings keep both sides consistent") {
  Matching m = Matching::from_partners_of_1({2, kUnmatched, 0});
  CHECK(m.consistent());
  CHECK(m.matched_pairs() == 2);
  CHECK(m.partner_of_2[0] == 2);
  CHECK(m.partner_of_2[1] == kUnmatched);
  CHECK(m.partner_of_2[2] == 0);
  CHECK_THROWS_AS(Matching::from_partners_of_1({0, 0}), ContractViolation);
  CHECK_THROWS_AS(Matching::from_partners_of_1({3}), ContractViolation);
}
