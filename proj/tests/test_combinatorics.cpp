#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <set>
#include <vector>

#include "hlab/combinatorics.hpp"

using namespace hlab;

namespace {

// Independent Bell-number oracle: B_{n+1} = sum_k C(n,k) B_k.  The library
// uses the Bell triangle, so the two routes share no code.
std::int64_t bell_oracle(int n) {
  std::vector<std::int64_t> b{1};
  for (int m = 0; m < n; ++m) {
    std::int64_t next = 0;
    for (int k = 0; k <= m; ++k) next += binomial(m, k) * b[static_cast<std::size_t>(k)];
    b.push_back(next);
  }
  return b[static_cast<std::size_t>(n)];
}

}  // namespace

TEST_CASE("partition counts match the Bell numbers") {
  CHECK(enumerate_partitions(1).size() == 1);
  CHECK(enumerate_partitions(3).size() == 5);
  CHECK(enumerate_partitions(4).size() == 15);
  for (int k = 0; k <= 8; ++k) {
    CHECK(static_cast<std::int64_t>(enumerate_partitions(k).size()) == bell_oracle(k));
    CHECK(bell_number(k) == bell_oracle(k));
  }
}

TEST_CASE("partitions are valid and enumerated exactly once") {
  for (int k = 1; k <= 6; ++k) {
    auto parts = enumerate_partitions(k);
    std::set<std::vector<std::vector<int>>> seen;
    for (const auto& p : parts) {
      std::vector<bool> hit(static_cast<std::size_t>(k), false);
      for (const auto& block : p.blocks) {
        REQUIRE(!block.empty());
        for (int e : block) {
          REQUIRE(!hit[static_cast<std::size_t>(e)]);
          hit[static_cast<std::size_t>(e)] = true;
        }
      }
      for (bool h : hit) REQUIRE(h);
      CHECK(seen.insert(p.blocks).second);
    }
  }
}

TEST_CASE("enumeration order is deterministic and canonical") {
  auto a = enumerate_partitions(5);
  auto b = enumerate_partitions(5);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].blocks == b[i].blocks);
  // First partition is the single block, last is all singletons.
  CHECK(a.front().block_count() == 1);
  CHECK(a.back().block_count() == 5);
}

TEST_CASE("ground size limit is enforced") {
  CHECK_THROWS_AS(enumerate_partitions(11), ResourceLimitError);
  CHECK_THROWS_AS(enumerate_partitions(4, 3), ResourceLimitError);
  CHECK_NOTHROW(enumerate_partitions(10));
}

TEST_CASE("mobius coefficients") {
  CHECK(mobius_coefficient_for_block_count(1) == 1);
  CHECK(mobius_coefficient_for_block_count(2) == -1);
  CHECK(mobius_coefficient_for_block_count(3) == 2);
  CHECK(mobius_coefficient_for_block_count(4) == -6);
  Partition p;
  p.blocks = {{0}, {1}, {2}, {3}};
  CHECK(mobius_coefficient(p) == -6);
}

TEST_CASE("alternating partition sum equals (-1)^k") {
  CHECK(alternating_partition_sum(0) == 1);
  CHECK(alternating_partition_sum(2) == 1);
  CHECK(alternating_partition_sum(3) == -1);
  for (int k = 0; k <= 8; ++k)
    CHECK(alternating_partition_sum(k) == ((k % 2 == 0) ? 1 : -1));
}

TEST_CASE("declusterize flattens clusters") {
  ClusterTuple t({ClusterElement::cluster(IndexSet({1, 2})), ClusterElement::atom(3)});
  CHECK(declusterize(t) == IndexSet({1, 2, 3}));
  CHECK(t.particle_count() == 3);

  ClusterTuple single_atom({ClusterElement::atom(1)});
  CHECK(declusterize(single_atom) == IndexSet({1}));

  ClusterTuple single_cluster({ClusterElement::cluster(IndexSet({1, 2, 3}))});
  CHECK(declusterize(single_cluster) == IndexSet({1, 2, 3}));
}

TEST_CASE("duplicate labels are rejected") {
  CHECK_THROWS_AS(IndexSet({1, 1}), InvariantError);
  CHECK_THROWS_AS(ClusterTuple({ClusterElement::cluster(IndexSet({1, 2})), ClusterElement::atom(2)}),
                  InvariantError);
  CHECK_THROWS_AS(ClusterElement::cluster(IndexSet(std::vector<Label>{})), InvariantError);
}

TEST_CASE("axis lookup respects label order") {
  ClusterTuple t({ClusterElement::atom(7), ClusterElement::cluster(IndexSet({2, 5}))});
  // Declusterized labels (2,5,7) occupy axes 0,1,2.
  CHECK(element_axes(t, 0) == std::vector<int>{2});
  CHECK(element_axes(t, 1) == std::vector<int>{0, 1});
  CHECK(block_axes(t, {0, 1}) == std::vector<int>{0, 1, 2});
}
