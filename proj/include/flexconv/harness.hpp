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

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "flexconv/core/matrix.hpp"
#include "flexconv/core/point_cloud.hpp"
#include "flexconv/core/rng.hpp"
#include "flexconv/network.hpp"
#include "flexconv/sampling.hpp"

namespace flexconv {

// ---------------------------------------------------------------------------
// Dense reference convolution

/// Kernel tensor kh x kw x C x C', stored [a][b][in][out]. Tap (a, b) holds
/// K(tau) for the offset tau = (a - kh/2, b - kw/2).
struct DenseConvOracle {
  std::size_t kh = 3;
  std::size_t kw = 3;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::vector<double> kernel;

  DenseConvOracle() = default;
  DenseConvOracle(std::size_t kh, std::size_t kw, std::size_t in_channels, std::size_t out_channels);

  double& at(std::size_t a, std::size_t b, std::size_t in, std::size_t out) {
    return kernel[((a * kw + b) * in_channels + in) * out_channels + out];
  }
  double at(std::size_t a, std::size_t b, std::size_t in, std::size_t out) const {
    return kernel[((a * kw + b) * in_channels + in) * out_channels + out];
  }
};

/// out(p, o) = sum_tau sum_c K(tau)[c][o] * img(p - tau, c) over the valid
/// region, so out has (H - kh + 1) x (W - kw + 1) pixels and out(0, 0) is
/// centered on input pixel (kh/2, kw/2). The offset tau = p - q between the
/// output pixel p and the read pixel q is exactly the l_i - l_j offset of a
/// flex convolution on the image-as-cloud.
///
/// Throws ShapeMismatch for even or empty kernel dimensions, a channel
/// mismatch, or an image smaller than the kernel.
DenseImage dense_conv2d(const DenseImage& img, const DenseConvOracle& oracle);

/// K(tau) = <theta, tau> + theta_b over tau in {-1, 0, 1}^2, C = C' = 1.
/// theta = (1, 0) gives columns (-1, 0, 1); theta = (0, 0), b = 1/9 is a box
/// blur. Note that on the ramp img(r, c) = r the response of theta = (1, 0)
/// is -6: the textbook Prewitt-x response +6 corresponds to theta = (-1, 0).
DenseConvOracle kernel_from_flex(std::array<double, 2> theta, double theta_b);

// ---------------------------------------------------------------------------
// Toy tasks

enum class ToyKind { PrewittX, PrewittY, Blur, SyntheticShapesSeg, TwoClassClouds };

std::string_view to_string(ToyKind kind);
/// Parses the names printed by to_string; ConfigInvalid otherwise.
ToyKind parse_toy_kind(std::string_view name);

/// Exact flex parameters of an image target: PrewittX = ((1, 0), 0),
/// PrewittY = ((0, 1), 0), Blur = ((0, 0), 1/9). ConfigInvalid for the
/// cloud tasks.
std::pair<std::array<double, 2>, double> toy_target_params(ToyKind kind);

struct ToyTask {
  ToyKind kind = ToyKind::PrewittX;
  // image tasks
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t images = 4;
  // cloud tasks
  std::size_t n_points = 1024;
  std::size_t n_scenes = 8;
  std::uint64_t seed = 0;
};

/// Inputs ~ U(-1, 1) per pixel, regenerated bit-exactly from task.seed.
std::vector<DenseImage> toy_images(const ToyTask& task);

struct ToyResult {
  double initial_mse = 0.0;
  double final_mse = 0.0;
  std::array<double, 2> theta{};
  double theta_b = 0.0;
  std::vector<double> losses;  // one per step, before the update
};

/// Fits one flex-conv layer (C = C' = 1, k = 9 grid neighborhoods) to the
/// dense-oracle output of the task's target by full-batch Adam on the MSE
/// over interior pixels; the learning rate follows a cosine decay from `lr`
/// to zero over `steps`. Parameters start at rng draws in (-0.5, 0.5).
/// Throws NonFinite on divergence.
ToyResult run_toy_regression(const ToyTask& task, std::size_t steps, double lr, Rng& rng);
/// Same, on caller-provided single-channel images of equal size.
ToyResult run_toy_regression(ToyKind kind, const std::vector<DenseImage>& images, std::size_t steps, double lr,
                             Rng& rng);

/// Inverse of image_to_cloud: ShapeMismatch unless the locations form the
/// full row-major raster.
DenseImage cloud_to_image(const PointCloud& cloud);

// ---------------------------------------------------------------------------
// Synthetic 3-D scenes

enum class PrimitiveKind { Plane, Sphere, Box };

/// Plane: axis-aligned rectangle, `normal_axis` fixed at center[normal_axis],
/// half extents in `half`. Sphere: center and radius. Box: center and half
/// extents; the bottom face is open.
struct Primitive {
  PrimitiveKind kind = PrimitiveKind::Plane;
  std::array<double, 3> center{};
  std::array<double, 3> half{};
  double radius = 0.0;
  int normal_axis = 2;
};

/// Euclidean distance from p to the primitive's surface.
double distance_to_primitive(std::span<const double> p, const Primitive& prim);

struct SegScene {
  LabeledCloud cloud;  // labels: 0 plane, 1 sphere, 2 box
  std::vector<Primitive> primitives;
  std::vector<int> primitive_of_point;
};

struct SegGenConfig {
  std::size_t n_points = 4096;
  std::size_t n_scenes = 1;
  std::size_t classes = 3;  // 2 = plane / sphere only
};

/// Scenes of 3-5 primitives: a floor (plus a wall sometimes), one or two
/// spheres resting on the floor and, for 3 classes, one or two open boxes.
/// Points lie on the surfaces, split evenly over classes and area-weighted
/// within a class. Features are the constant 1.
std::vector<SegScene> gen_synthetic_seg(const SegGenConfig& config, Rng& rng);

struct ClassSample {
  PointCloud cloud;
  int label = 0;
};

/// Two-class shape clouds: label 0 a sphere surface, label 1 a cube surface,
/// each with random center offset and scale. Features are the constant 1.
std::vector<ClassSample> gen_two_class_clouds(std::size_t n_points, std::size_t n_clouds, Rng& rng);

// ---------------------------------------------------------------------------
// Metrics

struct Metrics {
  std::size_t classes = 0;
  double accuracy = 0.0;
  std::vector<double> iou;             // per class; 0 for classes absent everywhere
  std::vector<bool> present;           // class occurs in the ground truth
  double miou = 0.0;                   // mean IoU over present classes
  std::vector<std::size_t> confusion;  // classes x classes, [truth][predicted]

  std::size_t at(std::size_t truth, std::size_t predicted) const { return confusion[truth * classes + predicted]; }
};

/// Predictions are row-wise argmax of the logits.
Metrics evaluate(const Matrix& logits, std::span<const int> labels);
Metrics evaluate_predictions(std::span<const int> predicted, std::span<const int> labels, std::size_t classes);

// CSV, header `metric,value`: accuracy, miou, then iou_<c> per class.
void write_metrics_csv(std::ostream& out, const Metrics& metrics);

// ---------------------------------------------------------------------------
// Benchmarks

/// Analytic sizes of the live buffers of one flex-conv forward pass.
struct MemoryEstimate {
  std::size_t input_bytes = 0;
  std::size_t output_bytes = 0;
  std::size_t param_bytes = 0;
  std::size_t neighbor_bytes = 0;
  std::size_t total_bytes = 0;
};

MemoryEstimate estimate_memory(std::size_t n, std::size_t in_channels, std::size_t out_channels, std::size_t k,
                               std::size_t dim, std::size_t scalar_bytes, std::size_t index_bytes = 4);

struct BenchConfig {
  std::vector<std::size_t> sizes;
  std::size_t k = 8;
  std::size_t channels = 16;  // C = C'
  std::size_t dim = 3;
  std::size_t reps = 3;
  bool backward = true;
  /// The naive kernel is timed only up to this size (0 disables it).
  std::size_t naive_max_n = 200000;
  std::uint64_t seed = 0;
};

struct BenchRow {
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t channels = 0;
  std::size_t threads = 0;
  double forward_ms = 0.0;        // median
  double backward_ms = 0.0;       // median; NaN when not timed
  double naive_forward_ms = 0.0;  // median; NaN when not timed
  std::size_t memory_bytes = 0;   // MemoryEstimate::total_bytes, 64-bit scalars
};

/// Points uniform in the unit cube, ordered along a Morton curve.
Matrix bench_locations(std::size_t n, std::size_t dim, Rng& rng);

/// Times one flex-conv layer per size at the current thread count. Throws
/// ConfigInvalid for an empty size list or any n < k.
std::vector<BenchRow> bench_scaling(const BenchConfig& config);

inline constexpr const char* kBenchCsvHeader =
    "n,k,channels,threads,forward_ms,backward_ms,naive_forward_ms,memory_bytes";
void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows);

// ---------------------------------------------------------------------------
// Training loops

struct PreparedScene {
  ResolutionHierarchy hierarchy;
  Matrix features;
  std::vector<int> labels;  // per point (segmentation) or a single entry
};

/// Builds the hierarchy a network of `config` needs for one cloud.
PreparedScene prepare_scene(const PointCloud& cloud, std::vector<int> labels, const NetworkConfig& config, Rng& rng);

struct TrainOptions {
  std::size_t epochs = 10;
  std::size_t batch = 1;  // scenes per optimizer step (gradients averaged)
  double lr = 3e-3;
  bool cosine = true;  // cosine decay of lr to 0 over all steps
  bool shuffle = true;
  double clip_norm = 0.0;  // rescale the gradient to this global L2 norm when larger; 0 = off
};

struct TrainLog {
  std::vector<double> step_losses;
  std::vector<double> epoch_losses;  // mean step loss per epoch
};

/// Called after every optimizer step with (step index, batch loss).
using StepCallback = std::function<void(std::size_t, double)>;

TrainLog train_network(LayerGraph& graph, AdamState& adam, std::span<const PreparedScene> scenes,
                       const TrainOptions& options, Rng& rng, const StepCallback& on_step = {});

/// Confusion over all points of all scenes (segmentation) or over scenes
/// (classification).
Metrics evaluate_network(LayerGraph& graph, std::span<const PreparedScene> scenes);

/// True when the loss series has at most `max_upticks` increases and the
/// last value is below `ratio` times the first.
bool monotone_trend(std::span<const double> losses, std::size_t max_upticks, double ratio);

}  // namespace flexconv
