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
#include <vector>

#include "flexconv/core/matrix.hpp"

namespace flexconv {

/// Throws ShapeMismatch, EmptyInput or NonFinite when the pair cannot form a
/// point cloud. Never mutates its arguments.
void validate_cloud(const Matrix& locations, const Matrix& features);

/// n points with locations in R^d and C feature channels. Locations and
/// features live in separate matrices; the network attaches coordinates to
/// features explicitly where it needs them.
class PointCloud {
 public:
  PointCloud(Matrix locations, Matrix features);

  std::size_t size() const noexcept { return locations_.rows(); }
  std::size_t dim() const noexcept { return locations_.cols(); }
  std::size_t channels() const noexcept { return features_.cols(); }

  const Matrix& locations() const noexcept { return locations_; }
  const Matrix& features() const noexcept { return features_; }

  friend bool operator==(const PointCloud&, const PointCloud&) = default;

 private:
  Matrix locations_;
  Matrix features_;
};

void validate_cloud(const PointCloud& cloud);

struct LabeledCloud {
  PointCloud cloud;
  std::vector<int> labels;

  friend bool operator==(const LabeledCloud&, const LabeledCloud&) = default;
};

/// H x W x C image, pixel (r, c, ch) stored row-major.
class DenseImage {
 public:
  DenseImage(std::size_t height, std::size_t width, std::size_t channels, double fill = 0.0);
  DenseImage(std::size_t height, std::size_t width, std::size_t channels, std::vector<double> pixels);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return channels_; }

  double& at(std::size_t r, std::size_t c, std::size_t ch) { return pixels_[(r * width_ + c) * channels_ + ch]; }
  double at(std::size_t r, std::size_t c, std::size_t ch) const { return pixels_[(r * width_ + c) * channels_ + ch]; }

  const std::vector<double>& pixels() const noexcept { return pixels_; }

 private:
  std::size_t height_;
  std::size_t width_;
  std::size_t channels_;
  std::vector<double> pixels_;
};

/// One point per pixel in row-major raster order: point r*W + c sits at
/// location (r, c) and carries the pixel's channels as features.
PointCloud image_to_cloud(const DenseImage& img);

}  // namespace flexconv
