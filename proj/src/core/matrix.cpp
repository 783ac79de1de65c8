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

#include "flexconv/core/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flexconv/core/error.hpp"

namespace flexconv {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ShapeMismatch:
      return "ShapeMismatch";
    case ErrorKind::IndexOutOfRange:
      return "IndexOutOfRange";
    case ErrorKind::NonFinite:
      return "NonFinite";
    case ErrorKind::EmptyInput:
      return "EmptyInput";
    case ErrorKind::ConfigInvalid:
      return "ConfigInvalid";
    case ErrorKind::IoFailure:
      return "IoFailure";
  }
  return "Unknown";
}

EngineError::EngineError(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) { throw EngineError(kind, message); }

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols)
    fail(ErrorKind::ShapeMismatch,
         "matrix data has " + std::to_string(data_.size()) + " entries, expected " + std::to_string(rows * cols));
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require(r.size() == cols_, ErrorKind::ShapeMismatch, "ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Matrix hconcat(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows())
    fail(ErrorKind::ShapeMismatch,
         "hconcat row counts differ: " + std::to_string(a.rows()) + " vs " + std::to_string(b.rows()));
  Matrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    std::copy(a.row(i).begin(), a.row(i).end(), dst.begin());
    std::copy(b.row(i).begin(), b.row(i).end(), dst.begin() + static_cast<std::ptrdiff_t>(a.cols()));
  }
  return out;
}

Matrix gather_rows(const Matrix& m, std::span<const Index> indices) {
  Matrix out(indices.size(), m.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const Index src = indices[i];
    if (!(src >= 0 && static_cast<std::size_t>(src) < m.rows()))
      fail(ErrorKind::IndexOutOfRange,
           "gather index " + std::to_string(src) + " outside [0, " + std::to_string(m.rows()) + ")");
    auto from = m.row(static_cast<std::size_t>(src));
    std::copy(from.begin(), from.end(), out.row(i).begin());
  }
  return out;
}

double max_abs_difference(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::ShapeMismatch, "max_abs_difference shape mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  return worst;
}

}  // namespace flexconv
