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

#include <string>

#include "flexconv/core/error.hpp"
#include "flexconv/core/parallel.hpp"
#include "flexconv/flexops.hpp"

namespace flexconv {

PoolResult flex_max_pool(const Matrix& features, const NeighborIndex& neighbors) {
  const std::size_t n = features.rows(), C = features.cols();
  check_neighbor_range(neighbors, n);
  PoolResult out{Matrix(n, C), PoolRecord{n, C, n, std::vector<Index>(n * C)}};
#pragma omp parallel for schedule(static) num_threads(num_threads())
  for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(n); ++si) {
    const auto i = static_cast<std::size_t>(si);
    auto row = neighbors.row(i);
    double* dst = out.pooled.row(i).data();
    Index* arg = out.record.argmax.data() + i * C;
    for (std::size_t c = 0; c < C; ++c) {
      Index best = row[0];
      double best_value = features(static_cast<std::size_t>(best), c);
      for (std::size_t s = 1; s < row.size(); ++s) {
        const Index j = row[s];
        const double v = features(static_cast<std::size_t>(j), c);
        if (v > best_value || (v == best_value && j < best)) {
          best = j;
          best_value = v;
        }
      }
      dst[c] = best_value;
      arg[c] = best;
    }
  }
  return out;
}

Matrix flex_max_pool_backward(const Matrix& upstream, const PoolRecord& record) {
  require(upstream.rows() == record.rows && upstream.cols() == record.channels, ErrorKind::ShapeMismatch,
          "upstream gradient shape does not match the pooling record");
  require(record.argmax.size() == record.rows * record.channels, ErrorKind::IndexOutOfRange,
          "pooling record is truncated");
  for (Index j : record.argmax) {
    if (!(j >= 0 && static_cast<std::size_t>(j) < record.sources))
      fail(ErrorKind::IndexOutOfRange,
           "pooling record entry " + std::to_string(j) + " outside [0, " + std::to_string(record.sources) + ")");
  }
  const std::size_t C = record.channels;
  Matrix out(record.sources, C);
  // One channel per task; within a channel rows are visited in order.
#pragma omp parallel for schedule(static) num_threads(num_threads())
  for (std::ptrdiff_t sc = 0; sc < static_cast<std::ptrdiff_t>(C); ++sc) {
    const auto c = static_cast<std::size_t>(sc);
    for (std::size_t i = 0; i < record.rows; ++i)
      out(static_cast<std::size_t>(record.argmax[i * C + c]), c) += upstream(i, c);
  }
  return out;
}

Matrix downsample_gather(const Matrix& features, const SelectionMap& selection) {
  return gather_rows(features, selection.selected);
}

Matrix downsample_gather_backward(const Matrix& upstream, const SelectionMap& selection, std::size_t n) {
  require(upstream.rows() == selection.size(), ErrorKind::ShapeMismatch,
          "upstream rows do not match the selection size");
  Matrix out(n, upstream.cols());
  for (std::size_t r = 0; r < selection.size(); ++r) {
    const Index j = selection.selected[r];
    if (!(j >= 0 && static_cast<std::size_t>(j) < n))
      fail(ErrorKind::IndexOutOfRange,
           "selection index " + std::to_string(j) + " outside [0, " + std::to_string(n) + ")");
    auto src = upstream.row(r);
    auto dst = out.row(static_cast<std::size_t>(j));
    for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
  }
  return out;
}

PoolResult flex_upsample(const Matrix& coarse, const SelectionMap& selection, const NeighborIndex& fine_neighbors,
                         std::size_t n) {
  if (coarse.rows() != selection.size())
    fail(ErrorKind::ShapeMismatch, "coarse features have " + std::to_string(coarse.rows()) +
                                       " rows for a selection of " + std::to_string(selection.size()));
  require(fine_neighbors.size() == n, ErrorKind::ShapeMismatch, "fine neighbor table does not have n rows");
  const Matrix scattered = downsample_gather_backward(coarse, selection, n);
  return flex_max_pool(scattered, fine_neighbors);
}

Matrix flex_upsample_backward(const Matrix& upstream, const SelectionMap& selection, const PoolRecord& record) {
  const Matrix fine = flex_max_pool_backward(upstream, record);
  return downsample_gather(fine, selection);
}

}  // namespace flexconv
