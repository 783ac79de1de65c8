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
#include <string>

#include "flexconv/core/error.hpp"
#include "flexconv/network.hpp"

namespace flexconv {

Matrix softmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) z += (out(i, c) = std::exp(row[c] - mx));
    for (std::size_t c = 0; c < row.size(); ++c) out(i, c) /= z;
  }
  return out;
}

std::vector<int> argmax_rows(const Matrix& logits) {
  std::vector<int> out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row(i);
    out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

LossResult softmax_cross_entropy(const Matrix& logits, std::span<const int> labels) {
  if (logits.rows() != labels.size())
    fail(ErrorKind::ShapeMismatch,
         "logits have " + std::to_string(logits.rows()) + " rows but " + std::to_string(labels.size()) + " labels");
  require(logits.rows() > 0 && logits.cols() > 0, ErrorKind::EmptyInput, "empty logits");
  for (int y : labels)
    if (!(y >= 0 && static_cast<std::size_t>(y) < logits.cols()))
      fail(ErrorKind::IndexOutOfRange,
           "label " + std::to_string(y) + " outside [0, " + std::to_string(logits.cols()) + ")");
  const double inv_n = 1.0 / static_cast<double>(logits.rows());
  LossResult r;
  r.grad = Matrix(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    const double log_z = std::log(z);
    const auto y = static_cast<std::size_t>(labels[i]);
    r.loss += (log_z - (row[y] - mx)) * inv_n;
    for (std::size_t c = 0; c < row.size(); ++c)
      r.grad(i, c) = (std::exp(row[c] - mx - log_z) - (c == y ? 1.0 : 0.0)) * inv_n;
  }
  return r;
}

}  // namespace flexconv
