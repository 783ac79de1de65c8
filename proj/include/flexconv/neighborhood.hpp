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

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "flexconv/core/matrix.hpp"

namespace flexconv {

/// Fixed-width table of k neighbor indices per point. Row i starts with i
/// itself; the remaining entries are the other points in nondecreasing
/// Euclidean distance, equal distances ordered by ascending index.
class NeighborIndex {
 public:
  NeighborIndex() = default;
  NeighborIndex(std::size_t n, std::size_t k, std::vector<Index> indices);

  std::size_t size() const noexcept { return n_; }
  std::size_t k() const noexcept { return k_; }

  std::span<const Index> row(std::size_t i) const { return {indices_.data() + i * k_, k_}; }
  const std::vector<Index>& indices() const noexcept { return indices_; }

  friend bool operator==(const NeighborIndex&, const NeighborIndex&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t k_ = 0;
  std::vector<Index> indices_;
};

/// Throws unless every entry lies in [0, n_points) and the table has
/// n_points rows. Only range and shape are checked, not ordering.
void check_neighbor_range(const NeighborIndex& neighbors, std::size_t n_points);

/// Full invariant check (range, self first, distinct, distance order).
/// Returns false instead of throwing; used by tests and loaders.
bool satisfies_neighbor_invariants(const NeighborIndex& neighbors, const Matrix& locations);

/// Incoming edges of a NeighborIndex grouped by target: for target j,
/// entries [offsets[j], offsets[j+1]) list the flat slots (i*k + s) whose
/// neighbor is j, in ascending slot order. Gradient scatters reduce over this
/// fixed order so their result does not depend on scheduling.
struct ReverseIndex {
  std::vector<std::size_t> offsets;
  std::vector<std::size_t> slots;
};

ReverseIndex build_reverse_index(const NeighborIndex& neighbors);

/// Static kD-tree over a copy of the given locations. Nodes split on the
/// dimension of largest spread at the median; leaves hold at most
/// `leaf_size` points.
class KdTree {
 public:
  struct Node {
    int split_dim = -1;  // -1 for leaves
    double split_value = 0.0;
    std::size_t begin = 0;  // range into point_order()
    std::size_t end = 0;
    int left = -1;
    int right = -1;
  };

  static constexpr std::size_t kDefaultLeafSize = 16;

  explicit KdTree(const Matrix& locations, std::size_t leaf_size = kDefaultLeafSize);

  std::size_t size() const noexcept { return points_.rows(); }
  std::size_t dim() const noexcept { return points_.cols(); }
  std::size_t leaf_size() const noexcept { return leaf_size_; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  /// Original point indices in leaf order.
  const std::vector<Index>& point_order() const noexcept { return order_; }
  const Matrix& points() const noexcept { return points_; }

  /// k nearest stored points to `query` ordered by (squared distance, index).
  /// If `self` is a valid index, that point is placed first regardless of
  /// distance.
  std::vector<Index> nearest(std::span<const double> query, std::size_t k, Index self = -1) const;

 private:
  int build(std::size_t begin, std::size_t end);

  Matrix points_;
  std::size_t leaf_size_;
  std::vector<Index> order_;
  std::vector<Node> nodes_;
  std::vector<double> box_lo_;  // per node, dim() entries
  std::vector<double> box_hi_;
};

KdTree build_kdtree(const Matrix& locations, std::size_t leaf_size = KdTree::kDefaultLeafSize);

/// Exact kNN table for the tree's own points. `locations` must be the matrix
/// the tree was built from. Throws ConfigInvalid unless 1 <= k <= n.
NeighborIndex knn_query(const KdTree& tree, const Matrix& locations, std::size_t k);

/// O(n^2) reference with the identical contract; for tests and tiny inputs.
NeighborIndex knn_brute_force(const Matrix& locations, std::size_t k);

/// Convenience: build a tree and query it.
NeighborIndex compute_neighbors(const Matrix& locations, std::size_t k,
                                std::size_t leaf_size = KdTree::kDefaultLeafSize);

// ASCII table: header `flexknn v1 <n> <k>`, then n lines of k integers.
void write_neighbors(std::ostream& out, const NeighborIndex& neighbors);
NeighborIndex read_neighbors(std::istream& in);
void save_neighbors(const std::filesystem::path& path, const NeighborIndex& neighbors);
NeighborIndex load_neighbors(const std::filesystem::path& path);

}  // namespace flexconv
