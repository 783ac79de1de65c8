// Copyright 2026 The flexconv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <sstream>

#include "flexconv/core/parallel.hpp"
#include "flexconv/core/point_cloud.hpp"
#include "flexconv/neighborhood.hpp"
#include "support.hpp"

using namespace flexconv;
using flexconv::testing::random_matrix;

namespace {

std::vector<std::vector<Index>> rows_of(const NeighborIndex& nb) {
  std::vector<std::vector<Index>> out;
  for (std::size_t i = 0; i < nb.size(); ++i) out.emplace_back(nb.row(i).begin(), nb.row(i).end());
  return out;
}

const Matrix kLine{{0.0}, {1.0}, {3.0}};

TEST(Knn, LineExample) {
  const std::vector<std::vector<Index>> expected = {{0, 1}, {1, 0}, {2, 1}};
  EXPECT_EQ(rows_of(compute_neighbors(kLine, 2)), expected);
  EXPECT_EQ(rows_of(knn_brute_force(kLine, 2)), expected);
}

TEST(Knn, KOneIsSelfOnly) {
  Rng rng(1);
  const Matrix loc = random_matrix(50, 3, rng);
  for (const auto& nb : {compute_neighbors(loc, 1), knn_brute_force(loc, 1)})
    for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(nb.row(i)[0], static_cast<Index>(i));
}

TEST(Knn, TieGoesToLowerIndex) {
  const Matrix loc{{0.0}, {1.0}, {-1.0}};
  EXPECT_EQ(compute_neighbors(loc, 2).row(0)[1], 1);
  EXPECT_EQ(knn_brute_force(loc, 2).row(0)[1], 1);
  const Matrix loc2{{0.0}, {-1.0}, {1.0}};
  EXPECT_EQ(compute_neighbors(loc2, 2).row(0)[1], 1);
}

TEST(Knn, KOutOfRangeIsConfigInvalid) {
  EXPECT_ENGINE_ERROR(compute_neighbors(kLine, 4), ErrorKind::ConfigInvalid);
  EXPECT_ENGINE_ERROR(compute_neighbors(kLine, 0), ErrorKind::ConfigInvalid);
  EXPECT_ENGINE_ERROR(knn_brute_force(kLine, 4), ErrorKind::ConfigInvalid);
}

TEST(KdTree, SinglePointIsOneLeaf) {
  const KdTree tree(Matrix{{1.0, 2.0}});
  ASSERT_EQ(tree.nodes().size(), 1u);
  EXPECT_EQ(tree.nodes()[0].split_dim, -1);
  EXPECT_EQ(compute_neighbors(Matrix{{1.0, 2.0}}, 1).row(0)[0], 0);
}

TEST(KdTree, EveryPointInExactlyOneLeaf) {
  Rng rng(2);
  const KdTree tree(random_matrix(1000, 3, rng), 8);
  std::vector<int> hits(1000, 0);
  for (const auto& node : tree.nodes()) {
    if (node.split_dim != -1) continue;
    EXPECT_LE(node.end - node.begin, 8u);
    for (std::size_t p = node.begin; p < node.end; ++p) ++hits[static_cast<std::size_t>(tree.point_order()[p])];
  }
  for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(KdTree, RejectsEmptyAndNonFinite) {
  EXPECT_ENGINE_ERROR(KdTree(Matrix(0, 3)), ErrorKind::EmptyInput);
  Matrix bad(3, 2);
  bad(1, 1) = std::nan("");
  EXPECT_ENGINE_ERROR(KdTree{bad}, ErrorKind::NonFinite);
}

TEST(KdTree, ArbitraryQueriesMatchScan) {
  Rng rng(3);
  const Matrix loc = random_matrix(1000, 3, rng);
  const KdTree tree(loc);
  for (int q = 0; q < 200; ++q) {
    const std::vector<double> query = {rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2)};
    std::vector<std::pair<double, Index>> all;
    for (std::size_t i = 0; i < 1000; ++i) {
      double s = 0.0;
      for (std::size_t t = 0; t < 3; ++t) s += (loc(i, t) - query[t]) * (loc(i, t) - query[t]);
      all.push_back({s, static_cast<Index>(i)});
    }
    std::sort(all.begin(), all.end());
    const auto got = tree.nearest(query, 10);
    ASSERT_EQ(got.size(), 10u);
    for (std::size_t s = 0; s < 10; ++s) EXPECT_EQ(got[s], all[s].second);
  }
}

TEST(Knn, DuplicatePointsBothRetrievable) {
  const Matrix loc{{0.0, 0.0}, {1.0, 1.0}, {0.0, 0.0}, {5.0, 5.0}};
  const NeighborIndex nb = compute_neighbors(loc, 2);
  EXPECT_EQ(nb.row(0)[1], 2);
  EXPECT_EQ(nb.row(2)[1], 0);
  EXPECT_EQ(nb, knn_brute_force(loc, 2));
}

// Exact agreement with the brute-force oracle on many shapes of input,
// including lattices where ties are everywhere.
TEST(Knn, MatchesBruteForceExactly) {
  Rng rng(4);
  for (std::size_t n : {1u, 2u, 7u, 33u, 200u, 2000u}) {
    for (std::size_t d : {1u, 2u, 3u}) {
      const Matrix loc = random_matrix(n, d, rng);
      for (std::size_t k : {1u, 4u, 9u}) {
        if (k > n) continue;
        for (std::size_t leaf : {1u, 4u, 16u}) {
          const NeighborIndex fast = compute_neighbors(loc, k, leaf);
          ASSERT_EQ(fast, knn_brute_force(loc, k)) << "n=" << n << " d=" << d << " k=" << k << " leaf=" << leaf;
          EXPECT_TRUE(satisfies_neighbor_invariants(fast, loc));
        }
      }
    }
  }
}

TEST(Knn, MatchesBruteForceOnLatticesWithTies) {
  for (std::size_t side : {5u, 12u}) {
    Matrix loc(side * side, 2);
    for (std::size_t i = 0; i < side * side; ++i) {
      loc(i, 0) = static_cast<double>(i / side);
      loc(i, 1) = static_cast<double>(i % side);
    }
    for (std::size_t k : {5u, 9u, 13u, 25u}) EXPECT_EQ(compute_neighbors(loc, k), knn_brute_force(loc, k));
  }
  Rng rng(5);
  Matrix coarse(500, 3);
  for (double& v : coarse.data()) v = static_cast<double>(rng.below(4));
  EXPECT_EQ(compute_neighbors(coarse, 8), knn_brute_force(coarse, 8));
}

TEST(Knn, GridInteriorGetsThreeByThreeStencil) {
  const PointCloud c = image_to_cloud(DenseImage(6, 6, 1));
  const NeighborIndex nb = compute_neighbors(c.locations(), 9);
  for (std::size_t r = 1; r < 5; ++r) {
    for (std::size_t col = 1; col < 5; ++col) {
      std::vector<Index> got(nb.row(r * 6 + col).begin(), nb.row(r * 6 + col).end());
      std::sort(got.begin(), got.end());
      std::vector<Index> want;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc)
          want.push_back(static_cast<Index>((static_cast<int>(r) + dr) * 6 + static_cast<int>(col) + dc));
      EXPECT_EQ(got, want);
    }
  }
}

TEST(Knn, DeterministicAcrossThreadCounts) {
  Rng rng(6);
  const Matrix loc = random_matrix(3000, 3, rng);
  NeighborIndex one, four;
  {
    ThreadScope s(1);
    one = compute_neighbors(loc, 8);
  }
  {
    ThreadScope s(4);
    four = compute_neighbors(loc, 8);
  }
  EXPECT_EQ(one, four);
}

TEST(Knn, QueryCostIsSubQuadratic) {
  Rng rng(7);
  auto time_for = [&](std::size_t n) {
    const Matrix loc = random_matrix(n, 3, rng);
    double best = 1e300;
    for (int r = 0; r < 3; ++r) {
      const auto a = std::chrono::steady_clock::now();
      const NeighborIndex nb = compute_neighbors(loc, 8);
      const auto b = std::chrono::steady_clock::now();
      best = std::min(best, std::chrono::duration<double>(b - a).count());
    }
    return best;
  };
  const double t16 = time_for(16000), t64 = time_for(64000);
  EXPECT_LT(t64, 10.0 * t16) << "16k: " << t16 << " s, 64k: " << t64 << " s";
}

TEST(NeighborInvariants, DetectViolations) {
  const NeighborIndex good = compute_neighbors(kLine, 2);
  EXPECT_TRUE(satisfies_neighbor_invariants(good, kLine));
  EXPECT_FALSE(satisfies_neighbor_invariants(NeighborIndex(3, 2, {1, 0, 1, 0, 2, 1}), kLine));  // self not first
  EXPECT_FALSE(satisfies_neighbor_invariants(NeighborIndex(3, 2, {0, 0, 1, 0, 2, 1}), kLine));  // duplicate
  EXPECT_TRUE(satisfies_neighbor_invariants(NeighborIndex(3, 3, {0, 1, 2, 1, 0, 2, 2, 1, 0}), kLine));
  EXPECT_FALSE(satisfies_neighbor_invariants(NeighborIndex(3, 3, {0, 1, 2, 1, 2, 0, 2, 1, 0}), kLine));  // order
  EXPECT_FALSE(satisfies_neighbor_invariants(NeighborIndex(3, 2, {0, 3, 1, 0, 2, 1}), kLine));           // out of range
}

TEST(NeighborIndex, RangeCheck) {
  EXPECT_ENGINE_ERROR(check_neighbor_range(NeighborIndex(2, 1, {0, 2}), 2), ErrorKind::IndexOutOfRange);
  EXPECT_ENGINE_ERROR(check_neighbor_range(NeighborIndex(2, 1, {0, 1}), 3), ErrorKind::ShapeMismatch);
  EXPECT_ENGINE_ERROR(NeighborIndex(2, 2, {0, 1, 1}), ErrorKind::ShapeMismatch);
}

TEST(ReverseIndex, GroupsIncomingEdgesBySlot) {
  const NeighborIndex nb = compute_neighbors(kLine, 2);  // [0,1],[1,0],[2,1]
  const ReverseIndex rev = build_reverse_index(nb);
  EXPECT_EQ(rev.offsets, (std::vector<std::size_t>{0, 2, 5, 6}));
  EXPECT_EQ(rev.slots, (std::vector<std::size_t>{0, 3, 1, 2, 5, 4}));
}

TEST(NeighborIo, RoundTripAndMalformed) {
  Rng rng(8);
  const NeighborIndex nb = compute_neighbors(random_matrix(40, 2, rng), 5);
  std::stringstream ss;
  write_neighbors(ss, nb);
  EXPECT_EQ(ss.str().rfind("flexknn v1 40 5\n", 0), 0u);
  EXPECT_EQ(read_neighbors(ss), nb);
  std::stringstream bad("flexknn v1 2 2\n0 1\n");
  EXPECT_ENGINE_ERROR(read_neighbors(bad), ErrorKind::ConfigInvalid);
  std::stringstream bad_tag("knn v1 1 1\n0\n");
  EXPECT_ENGINE_ERROR(read_neighbors(bad_tag), ErrorKind::ConfigInvalid);
  std::stringstream out_of_range("flexknn v1 1 1\n3\n");
  EXPECT_ENGINE_ERROR(read_neighbors(out_of_range), ErrorKind::IndexOutOfRange);
  EXPECT_ENGINE_ERROR(load_neighbors("/nonexistent/x.flexknn"), ErrorKind::IoFailure);
}

}  // namespace
