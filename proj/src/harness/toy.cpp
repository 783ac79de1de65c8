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
#include <numbers>
#include <string>

#include "flexconv/core/error.hpp"
#include "flexconv/flexops.hpp"
#include "flexconv/harness.hpp"

namespace flexconv {

std::string_view to_string(ToyKind kind) {
  switch (kind) {
    case ToyKind::PrewittX:
      return "PrewittX";
    case ToyKind::PrewittY:
      return "PrewittY";
    case ToyKind::Blur:
      return "Blur";
    case ToyKind::SyntheticShapesSeg:
      return "SyntheticShapesSeg";
    case ToyKind::TwoClassClouds:
      return "TwoClassClouds";
  }
  return "Unknown";
}

ToyKind parse_toy_kind(std::string_view name) {
  for (ToyKind k :
       {ToyKind::PrewittX, ToyKind::PrewittY, ToyKind::Blur, ToyKind::SyntheticShapesSeg, ToyKind::TwoClassClouds})
    if (to_string(k) == name) return k;
  fail(ErrorKind::ConfigInvalid, "unknown task kind '" + std::string(name) + "'");
}

std::pair<std::array<double, 2>, double> toy_target_params(ToyKind kind) {
  switch (kind) {
    case ToyKind::PrewittX:
      return {{1.0, 0.0}, 0.0};
    case ToyKind::PrewittY:
      return {{0.0, 1.0}, 0.0};
    case ToyKind::Blur:
      return {{0.0, 0.0}, 1.0 / 9.0};
    default:
      fail(ErrorKind::ConfigInvalid, "task '" + std::string(to_string(kind)) + "' is not an image task");
  }
}

std::vector<DenseImage> toy_images(const ToyTask& task) {
  require(task.height >= 3 && task.width >= 3, ErrorKind::ConfigInvalid, "toy images must be at least 3 x 3");
  require(task.images >= 1, ErrorKind::ConfigInvalid, "toy task needs at least one image");
  Rng rng(task.seed);
  std::vector<DenseImage> out;
  out.reserve(task.images);
  for (std::size_t i = 0; i < task.images; ++i) {
    DenseImage img(task.height, task.width, 1);
    for (std::size_t r = 0; r < task.height; ++r)
      for (std::size_t c = 0; c < task.width; ++c) img.at(r, c, 0) = rng.uniform(-1.0, 1.0);
    out.push_back(std::move(img));
  }
  return out;
}

DenseImage cloud_to_image(const PointCloud& cloud) {
  require(cloud.dim() == 2, ErrorKind::ShapeMismatch, "image clouds are 2-D");
  const Matrix& loc = cloud.locations();
  const std::size_t n = cloud.size();
  const auto W = static_cast<std::size_t>(loc(n - 1, 1)) + 1;
  const std::size_t H = n / W;
  require(H * W == n, ErrorKind::ShapeMismatch, "cloud is not a full raster");
  std::vector<double> pixels(n * cloud.channels());
  for (std::size_t i = 0; i < n; ++i) {
    if (loc(i, 0) != static_cast<double>(i / W) || loc(i, 1) != static_cast<double>(i % W))
      fail(ErrorKind::ShapeMismatch, "point " + std::to_string(i) + " is not at its raster position");
    const auto f = cloud.features().row(i);
    std::copy(f.begin(), f.end(), pixels.begin() + static_cast<std::ptrdiff_t>(i * cloud.channels()));
  }
  return DenseImage(H, W, cloud.channels(), std::move(pixels));
}

ToyResult run_toy_regression(const ToyTask& task, std::size_t steps, double lr, Rng& rng) {
  return run_toy_regression(task.kind, toy_images(task), steps, lr, rng);
}

ToyResult run_toy_regression(ToyKind kind, const std::vector<DenseImage>& images, std::size_t steps, double lr,
                             Rng& rng) {
  require(lr > 0.0 && std::isfinite(lr), ErrorKind::ConfigInvalid, "learning rate must be positive");
  require(!images.empty(), ErrorKind::EmptyInput, "toy regression needs at least one image");
  const auto [target_theta, target_b] = toy_target_params(kind);
  const DenseConvOracle oracle = kernel_from_flex(target_theta, target_b);

  const std::size_t H = images[0].height(), W = images[0].width();
  for (const auto& img : images)
    require(img.height() == H && img.width() == W && img.channels() == 1, ErrorKind::ShapeMismatch,
            "toy images must share one size and have a single channel");
  struct Sample {
    PointCloud cloud;
    Matrix target;  // n x 1, only interior rows are used
  };
  std::vector<Sample> samples;
  for (const auto& img : images) {
    const DenseImage t = dense_conv2d(img, oracle);
    Matrix target(H * W, 1);
    for (std::size_t r = 0; r < t.height(); ++r)
      for (std::size_t c = 0; c < t.width(); ++c) target((r + 1) * W + c + 1, 0) = t.at(r, c, 0);
    samples.push_back({image_to_cloud(img), std::move(target)});
  }
  // Every image shares the same raster, hence the same neighbor table.
  const NeighborIndex nb = compute_neighbors(samples[0].cloud.locations(), 9);
  const ReverseIndex rev = build_reverse_index(nb);
  std::vector<std::size_t> interior;
  for (std::size_t r = 1; r + 1 < H; ++r)
    for (std::size_t c = 1; c + 1 < W; ++c) interior.push_back(r * W + c);
  const double inv_count = 1.0 / static_cast<double>(interior.size() * samples.size());

  FlexConvParams params(FlexConvShape{1, 1, 2});
  params.theta(0, 0, 0) = rng.uniform(-0.5, 0.5);
  params.theta(0, 0, 1) = rng.uniform(-0.5, 0.5);
  params.theta_b(0, 0) = rng.uniform(-0.5, 0.5);

  // Loss and gradient in the order theta0, theta1, theta_b.
  auto evaluate = [&](std::vector<double>* grad) {
    double loss = 0.0;
    if (grad) grad->assign(3, 0.0);
    for (const auto& s : samples) {
      const Matrix out = flex_conv_forward(s.cloud.features(), s.cloud.locations(), nb, params);
      Matrix upstream(out.rows(), 1);
      for (std::size_t i : interior) {
        const double e = out(i, 0) - s.target(i, 0);
        loss += e * e * inv_count;
        upstream(i, 0) = 2.0 * e * inv_count;
      }
      if (grad) {
        const GradBundle g = flex_conv_backward(upstream, s.cloud.features(), s.cloud.locations(), nb, params,
                                                BackwardOptions{false, false}, &rev);
        (*grad)[0] += g.d_theta[0];
        (*grad)[1] += g.d_theta[1];
        (*grad)[2] += g.d_theta_b[0];
      }
    }
    require(std::isfinite(loss), ErrorKind::NonFinite, "toy regression diverged");
    return loss;
  };

  ToyResult result;
  std::vector<double> flat = {params.theta(0, 0, 0), params.theta(0, 0, 1), params.theta_b(0, 0)};
  AdamState adam = make_adam(3, lr);
  std::vector<double> grad;
  for (std::size_t step = 0; step < steps; ++step) {
    const double loss = evaluate(&grad);
    result.losses.push_back(loss);
    adam.lr = 0.5 * lr * (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / static_cast<double>(steps)));
    adam_step(adam, flat, grad);
    params.theta(0, 0, 0) = flat[0];
    params.theta(0, 0, 1) = flat[1];
    params.theta_b(0, 0) = flat[2];
  }
  result.final_mse = evaluate(nullptr);
  result.initial_mse = result.losses.empty() ? result.final_mse : result.losses.front();
  result.theta = {flat[0], flat[1]};
  result.theta_b = flat[2];
  return result;
}

}  // namespace flexconv
