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

#include "flexconv/core/point_cloud.hpp"

#include <cmath>
#include <string>

#include "flexconv/core/error.hpp"

namespace flexconv {

void validate_cloud(const Matrix& locations, const Matrix& features) {
  if (locations.rows() != features.rows())
    fail(ErrorKind::ShapeMismatch, "locations have " + std::to_string(locations.rows()) + " rows, features have " +
                                       std::to_string(features.rows()));
  require(locations.rows() >= 1, ErrorKind::EmptyInput, "point cloud has no points");
  require(locations.cols() >= 1, ErrorKind::ShapeMismatch, "spatial dimension must be >= 1");
  require(features.cols() >= 1, ErrorKind::ShapeMismatch, "channel count must be >= 1");
  require(locations.all_finite(), ErrorKind::NonFinite, "locations contain NaN or Inf");
  require(features.all_finite(), ErrorKind::NonFinite, "features contain NaN or Inf");
}

PointCloud::PointCloud(Matrix locations, Matrix features)
    : locations_(std::move(locations)), features_(std::move(features)) {
  validate_cloud(locations_, features_);
}

void validate_cloud(const PointCloud& cloud) { validate_cloud(cloud.locations(), cloud.features()); }

DenseImage::DenseImage(std::size_t height, std::size_t width, std::size_t channels, double fill)
    : DenseImage(height, width, channels, std::vector<double>(height * width * channels, fill)) {}

DenseImage::DenseImage(std::size_t height, std::size_t width, std::size_t channels, std::vector<double> pixels)
    : height_(height), width_(width), channels_(channels), pixels_(std::move(pixels)) {
  require(height_ >= 1 && width_ >= 1 && channels_ >= 1, ErrorKind::ShapeMismatch, "image dimensions must be positive");
  require(pixels_.size() == height_ * width_ * channels_, ErrorKind::ShapeMismatch,
          "pixel buffer size does not match H*W*C");
  for (double v : pixels_) require(std::isfinite(v), ErrorKind::NonFinite, "image contains NaN or Inf");
}

PointCloud image_to_cloud(const DenseImage& img) {
  const std::size_t n = img.height() * img.width();
  Matrix locations(n, 2);
  Matrix features(n, img.channels());
  for (std::size_t r = 0; r < img.height(); ++r) {
    for (std::size_t c = 0; c < img.width(); ++c) {
      const std::size_t i = r * img.width() + c;
      locations(i, 0) = static_cast<double>(r);
      locations(i, 1) = static_cast<double>(c);
      for (std::size_t ch = 0; ch < img.channels(); ++ch) features(i, ch) = img.at(r, c, ch);
    }
  }
  return PointCloud(std::move(locations), std::move(features));
}

}  // namespace flexconv
