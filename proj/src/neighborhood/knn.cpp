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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "flexconv/core/error.hpp"
#include "flexconv/core/parallel.hpp"
#include "flexconv/neighborhood.hpp"

namespace flexconv {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    const double diff = a[t] - b[t];
    s += diff * diff;
  }
  return s;
}

void check_k(std::size_t k, std::size_t n) {
  require(k >= 1, ErrorKind::ConfigInvalid, "neighborhood size k must be >= 1");
  if (k > n)
    fail(ErrorKind::ConfigInvalid,
         "neighborhood size k = " + std::to_string(k) + " exceeds point count " + std::to_string(n));
}

}  // namespace

NeighborIndex::NeighborIndex(std::size_t n, std::size_t k, std::vector<Index> indices)
    : n_(n), k_(k), indices_(std::move(indices)) {
  require(indices_.size() == n_ * k_, ErrorKind::ShapeMismatch, "neighbor table size differs from n*k");
}

void check_neighbor_range(const NeighborIndex& neighbors, std::size_t n_points) {
  if (neighbors.size() != n_points)
    fail(ErrorKind::ShapeMismatch, "neighbor table has " + std::to_string(neighbors.size()) + " rows for " +
                                       std::to_string(n_points) + " points");
  require(neighbors.k() >= 1, ErrorKind::ShapeMismatch, "neighbor table has zero columns");
  for (Index j : neighbors.indices()) {
    if (!(j >= 0 && static_cast<std::size_t>(j) < n_points))
      fail(ErrorKind::IndexOutOfRange,
           "neighbor index " + std::to_string(j) + " outside [0, " + std::to_string(n_points) + ")");
  }
}

bool satisfies_neighbor_invariants(const NeighborIndex& neighbors, const Matrix& locations) {
  const std::size_t n = locations.rows();
  if (neighbors.size() != n || neighbors.k() < 1 || neighbors.k() > n) return false;
  for (std::size_t i = 0; i < n; ++i) {
    auto row = neighbors.row(i);
    if (row[0] != static_cast<Index>(i)) return false;
    std::vector<Index> sorted(row.begin(), row.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) return false;
    double prev = -1.0;
    Index prev_idx = -1;
    for (std::size_t s = 0; s < row.size(); ++s) {
      if (row[s] < 0 || static_cast<std::size_t>(row[s]) >= n) return false;
      if (s == 0) continue;
      const double d2 = squared_distance(locations.row(i), locations.row(static_cast<std::size_t>(row[s])));
      if (s > 1 && (d2 < prev || (d2 == prev && row[s] < prev_idx))) return false;
      prev = d2;
      prev_idx = row[s];
    }
  }
  return true;
}

ReverseIndex build_reverse_index(const NeighborIndex& neighbors) {
  const std::size_t n = neighbors.size();
  ReverseIndex rev;
  rev.offsets.assign(n + 1, 0);
  for (Index j : neighbors.indices()) ++rev.offsets[static_cast<std::size_t>(j) + 1];
  for (std::size_t j = 0; j < n; ++j) rev.offsets[j + 1] += rev.offsets[j];
  rev.slots.resize(neighbors.indices().size());
  std::vector<std::size_t> cursor(rev.offsets.begin(), rev.offsets.end() - 1);
  for (std::size_t slot = 0; slot < neighbors.indices().size(); ++slot) {
    const auto j = static_cast<std::size_t>(neighbors.indices()[slot]);
    rev.slots[cursor[j]++] = slot;
  }
  return rev;
}

NeighborIndex knn_query(const KdTree& tree, const Matrix& locations, std::size_t k) {
  require(locations.rows() == tree.size() && locations.cols() == tree.dim(), ErrorKind::ShapeMismatch,
          "knn_query locations do not match the tree's point set");
  const std::size_t n = tree.size();
  check_k(k, n);
  std::vector<Index> table(n * k);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) num_threads(num_threads())
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto row = tree.nearest(locations.row(static_cast<std::size_t>(i)), k, static_cast<Index>(i));
    std::copy(row.begin(), row.end(), table.begin() + i * static_cast<std::ptrdiff_t>(k));
  }
  return NeighborIndex(n, k, std::move(table));
}

NeighborIndex knn_brute_force(const Matrix& locations, std::size_t k) {
  const std::size_t n = locations.rows();
  require(n >= 1, ErrorKind::EmptyInput, "kNN over zero points");
  require(locations.all_finite(), ErrorKind::NonFinite, "kNN locations contain NaN or Inf");
  check_k(k, n);
  std::vector<Index> table(n * k);
  std::vector<std::pair<double, Index>> all(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d2 = i == j ? -1.0 : squared_distance(locations.row(i), locations.row(j));
      all[j] = {d2, static_cast<Index>(j)};
    }
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
    for (std::size_t s = 0; s < k; ++s) table[i * k + s] = all[s].second;
  }
  return NeighborIndex(n, k, std::move(table));
}

NeighborIndex compute_neighbors(const Matrix& locations, std::size_t k, std::size_t leaf_size) {
  const KdTree tree(locations, leaf_size);
  return knn_query(tree, locations, k);
}

void write_neighbors(std::ostream& out, const NeighborIndex& neighbors) {
  out << "flexknn v1 " << neighbors.size() << ' ' << neighbors.k() << '\n';
  std::string line;
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    line.clear();
    for (Index j : neighbors.row(i)) {
      if (!line.empty()) line += ' ';
      line += std::to_string(j);
    }
    line += '\n';
    out << line;
  }
}

NeighborIndex read_neighbors(std::istream& in) {
  std::string tag, version;
  std::size_t n = 0, k = 0;
  require(static_cast<bool>(in >> tag >> version >> n >> k) && tag == "flexknn" && version == "v1",
          ErrorKind::ConfigInvalid, "malformed flexknn header");
  require(k >= 1 && k <= n, ErrorKind::ConfigInvalid, "flexknn header has invalid k");
  std::vector<Index> table(n * k);
  for (auto& v : table) require(static_cast<bool>(in >> v), ErrorKind::ConfigInvalid, "flexknn body truncated");
  NeighborIndex out(n, k, std::move(table));
  check_neighbor_range(out, n);
  return out;
}

void save_neighbors(const std::filesystem::path& path, const NeighborIndex& neighbors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::IoFailure, "cannot open '" + path.string() + "' for writing");
  write_neighbors(out, neighbors);
  if (!out.flush()) fail(ErrorKind::IoFailure, "write to '" + path.string() + "' failed");
}

NeighborIndex load_neighbors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoFailure, "cannot open '" + path.string() + "' for reading");
  return read_neighbors(in);
}

}  // namespace flexconv
