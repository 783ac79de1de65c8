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
#include <limits>
#include <numeric>
#include <queue>
#include <string>
#include <utility>

#include "flexconv/core/error.hpp"
#include "flexconv/neighborhood.hpp"

namespace flexconv {

namespace {

struct Candidate {
  double dist2;
  Index index;
  bool operator<(const Candidate& o) const { return dist2 < o.dist2 || (dist2 == o.dist2 && index < o.index); }
};

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    const double diff = a[t] - b[t];
    s += diff * diff;
  }
  return s;
}

}  // namespace

KdTree::KdTree(const Matrix& locations, std::size_t leaf_size)
    : points_(locations), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
  require(locations.rows() >= 1, ErrorKind::EmptyInput, "cannot build a kD-tree over zero points");
  require(locations.cols() >= 1, ErrorKind::ShapeMismatch, "kD-tree needs spatial dimension >= 1");
  require(locations.all_finite(), ErrorKind::NonFinite, "kD-tree locations contain NaN or Inf");
  order_.resize(locations.rows());
  std::iota(order_.begin(), order_.end(), Index{0});
  nodes_.reserve(2 * (locations.rows() / leaf_size_ + 1));
  build(0, order_.size());
}

int KdTree::build(std::size_t begin, std::size_t end) {
  const std::size_t d = dim();
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{-1, 0.0, begin, end, -1, -1});
  box_lo_.resize(box_lo_.size() + d, std::numeric_limits<double>::infinity());
  box_hi_.resize(box_hi_.size() + d, -std::numeric_limits<double>::infinity());
  double* lo = box_lo_.data() + static_cast<std::size_t>(id) * d;
  double* hi = box_hi_.data() + static_cast<std::size_t>(id) * d;
  for (std::size_t p = begin; p < end; ++p) {
    auto row = points_.row(static_cast<std::size_t>(order_[p]));
    for (std::size_t t = 0; t < d; ++t) {
      lo[t] = std::min(lo[t], row[t]);
      hi[t] = std::max(hi[t], row[t]);
    }
  }
  if (end - begin <= leaf_size_) return id;

  std::size_t split_dim = 0;
  double best_spread = -1.0;
  for (std::size_t t = 0; t < d; ++t) {
    if (hi[t] - lo[t] > best_spread) {
      best_spread = hi[t] - lo[t];
      split_dim = t;
    }
  }
  if (best_spread <= 0.0) return id;  // all points coincide; keep one leaf

  const std::size_t mid = begin + (end - begin) / 2;
  auto first = order_.begin() + static_cast<std::ptrdiff_t>(begin);
  auto middle = order_.begin() + static_cast<std::ptrdiff_t>(mid);
  auto last = order_.begin() + static_cast<std::ptrdiff_t>(end);
  std::nth_element(first, middle, last, [&](Index a, Index b) {
    const double va = points_(static_cast<std::size_t>(a), split_dim);
    const double vb = points_(static_cast<std::size_t>(b), split_dim);
    return va < vb || (va == vb && a < b);
  });
  const double split_value = points_(static_cast<std::size_t>(order_[mid]), split_dim);

  const int left = build(begin, mid);
  const int right = build(mid, end);
  Node& node = nodes_[static_cast<std::size_t>(id)];
  node.split_dim = static_cast<int>(split_dim);
  node.split_value = split_value;
  node.left = left;
  node.right = right;
  return id;
}

std::vector<Index> KdTree::nearest(std::span<const double> query, std::size_t k, Index self) const {
  require(query.size() == dim(), ErrorKind::ShapeMismatch, "query dimension differs from tree dimension");
  if (!(k >= 1 && k <= size()))
    fail(ErrorKind::ConfigInvalid, "k = " + std::to_string(k) + " must lie in [1, " + std::to_string(size()) + "]");
  const std::size_t d = dim();
  std::priority_queue<Candidate> heap;  // max-heap, top = current worst

  auto box_distance = [&](int node) {
    const double* lo = box_lo_.data() + static_cast<std::size_t>(node) * d;
    const double* hi = box_hi_.data() + static_cast<std::size_t>(node) * d;
    double s = 0.0;
    for (std::size_t t = 0; t < d; ++t) {
      double diff = 0.0;
      if (query[t] < lo[t])
        diff = lo[t] - query[t];
      else if (query[t] > hi[t])
        diff = query[t] - hi[t];
      s += diff * diff;
    }
    return s;
  };

  // Depth-first with the nearer child first. A subtree is skipped only when
  // its box is strictly farther than the current k-th candidate, so an
  // equidistant lower index can never be missed.
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    if (heap.size() == k && box_distance(id) > heap.top().dist2) continue;
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.split_dim < 0) {
      for (std::size_t p = node.begin; p < node.end; ++p) {
        const Index idx = order_[p];
        const double dist2 = idx == self ? -1.0 : squared_distance(query, points_.row(static_cast<std::size_t>(idx)));
        const Candidate cand{dist2, idx};
        if (heap.size() < k) {
          heap.push(cand);
        } else if (cand < heap.top()) {
          heap.pop();
          heap.push(cand);
        }
      }
      continue;
    }
    const bool go_left_first = query[static_cast<std::size_t>(node.split_dim)] < node.split_value;
    const int near_child = go_left_first ? node.left : node.right;
    const int far_child = go_left_first ? node.right : node.left;
    stack.push_back(far_child);
    stack.push_back(near_child);
  }

  std::vector<Index> out(heap.size());
  for (std::size_t i = heap.size(); i-- > 0;) {
    out[i] = heap.top().index;
    heap.pop();
  }
  return out;
}

KdTree build_kdtree(const Matrix& locations, std::size_t leaf_size) { return KdTree(locations, leaf_size); }

}  // namespace flexconv
