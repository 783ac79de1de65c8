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
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "flexconv/core/matrix.hpp"
#include "flexconv/core/rng.hpp"
#include "flexconv/flexops.hpp"
#include "flexconv/sampling.hpp"

namespace flexconv {

enum class LayerKind {
  Input,
  AttachLocation,
  PointwiseConv,
  FlexConv,
  ReLU,
  ResNetBlock,
  FlexMaxPoolDownsample,
  FlexUpsample,
  Concat,
  GlobalPool,
  Dense,
  SoftmaxClassifier,
};

std::string_view to_string(LayerKind kind);

/// One node of the layer graph. `level` is the hierarchy level the node's
/// output lives on; pooling reads level-1 and upsampling reads level+1.
struct LayerSpec {
  LayerKind kind = LayerKind::Input;
  std::string name;
  std::vector<int> inputs;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t k = 0;
  std::size_t level = 0;
  std::size_t param_offset = 0;
  std::size_t param_size = 0;
};

enum class NetworkKind { Segmentation, Classification };

/// How AttachLocation presents coordinates: raw, or centered on the level's
/// centroid and divided by its RMS radius.
enum class AttachMode { Raw, Normalized };

struct NetworkConfig {
  NetworkKind kind = NetworkKind::Segmentation;
  std::size_t dim = 3;             // d
  std::size_t input_features = 1;  // n_f
  std::size_t classes = 2;         // n_c
  std::size_t stages = 1;
  std::size_t base_channels = 8;
  std::size_t k = 8;
  std::size_t factor = 4;
  AttachMode attach = AttachMode::Raw;

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

/// Activations recorded by forward() for the following backward().
struct Tape {
  const ResolutionHierarchy* hierarchy = nullptr;
  std::vector<Matrix> outputs;                    // per layer
  std::vector<std::vector<Matrix>> scratch;       // per layer intermediates
  std::vector<PoolRecord> records;                // per layer (pool/upsample)
  std::vector<std::vector<Index>> global_argmax;  // per layer (global pool)
  std::vector<ReverseIndex> reverse;              // per level

  bool empty() const noexcept { return outputs.empty(); }
  void clear();
};

/// Ordered layers, skip-connection pairs, a flat parameter store with
/// per-layer views, and the tape of the last forward pass.
class LayerGraph {
 public:
  explicit LayerGraph(NetworkConfig config);

  const NetworkConfig& config() const noexcept { return config_; }
  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
  /// (encoder layer, decoder layer) pairs merged by concatenation.
  const std::vector<std::pair<int, int>>& skips() const noexcept { return skips_; }

  std::vector<double>& params() noexcept { return params_; }
  const std::vector<double>& params() const noexcept { return params_; }
  std::span<double> layer_params(std::size_t layer);
  std::span<const double> layer_params(std::size_t layer) const;

  /// Hierarchy levels (including level 0) the graph reads.
  std::size_t levels_required() const noexcept { return levels_required_; }

  Tape& tape() noexcept { return tape_; }
  const Tape& tape() const noexcept { return tape_; }

  /// Appends a layer, assigning its parameter range; returns its id.
  int add_layer(LayerSpec spec);
  void add_skip(int encoder_layer, int decoder_layer);

  /// Throws ConfigInvalid unless every layer's declared channels chain
  /// through its inputs.
  void validate() const;

 private:
  NetworkConfig config_;
  std::vector<LayerSpec> layers_;
  std::vector<std::pair<int, int>> skips_;
  std::vector<double> params_;
  std::size_t levels_required_ = 1;
  Tape tape_;
};

/// Trainable scalars a layer of this shape owns.
std::size_t layer_param_size(const LayerSpec& spec, std::size_t dim);

/// Encoder of `stages` stages (location attachment, 1x1 conv, two ResNet
/// blocks, flex-max-pool with subsampling), a bottleneck at the coarsest
/// level, a mirrored decoder (flex-upsample, skip concatenation, location
/// attachment, 1x1 conv, two ResNet blocks) and a per-point classifier.
/// Stage s works at width base_channels * 2^s.
LayerGraph build_segnet(std::size_t dim, std::size_t input_features, std::size_t classes, std::size_t stages,
                        std::size_t base_channels, std::size_t k, std::size_t factor);
LayerGraph build_segnet(const NetworkConfig& config);

/// Encoder stages, global max pool over the remaining points, a dense layer
/// and the class logits.
LayerGraph build_classifier(std::size_t dim, std::size_t input_features, std::size_t classes, std::size_t stages,
                            std::size_t base_channels, std::size_t k);
LayerGraph build_classifier(const NetworkConfig& config);

LayerGraph build_network(const NetworkConfig& config);

/// Draws all parameters. Flex weights: theta ~ U(-s, s) with
/// s = 1 / (k sqrt(C * D)), D the mean neighbor distance on level 0 of
/// `hierarchy`; theta_b ~ U(-1/k, 1/k) / sqrt(C). 1x1 and dense weights use
/// He-uniform, biases start at zero.
void init_params(LayerGraph& graph, const ResolutionHierarchy& hierarchy, Rng& rng);

/// Mean distance from a point to its non-self neighbors, over level 0.
double mean_neighbor_distance(const ResolutionHierarchy& hierarchy);

/// Per-point logits (segmentation, n x classes) or class logits
/// (classification, 1 x classes). Records the tape.
Matrix forward(LayerGraph& graph, const ResolutionHierarchy& hierarchy, const Matrix& features);

/// Gradient of the loss w.r.t. every parameter given d loss / d output.
/// Clears the tape. Throws NonFinite naming the first layer whose gradient
/// is not finite.
std::vector<double> backward(LayerGraph& graph, const Matrix& loss_grad);

struct LossResult {
  double loss = 0.0;
  Matrix grad;  // d loss / d logits
};

/// Mean over rows of -log softmax(logits)[label], max-subtracted.
LossResult softmax_cross_entropy(const Matrix& logits, std::span<const int> labels);

Matrix softmax(const Matrix& logits);
std::vector<int> argmax_rows(const Matrix& logits);

struct AdamState {
  double lr = 3e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

AdamState make_adam(std::size_t param_count, double lr = 3e-3);

/// One bias-corrected Adam update in place. Throws NonFinite on a non-finite
/// gradient before touching any state.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

// Checkpoint blob (little-endian):
//   magic "FLXCKPT\0", u32 version = 1,
//   u64 config length, config text (the echo of the run config),
//   u64 parameter count, f64 parameters,
//   f64 lr, beta1, beta2, eps, u64 step, f64 m[count], f64 v[count],
//   u64 trailer = count (guards against truncation).
struct Checkpoint {
  std::string config_text;
  std::vector<double> params;
  AdamState adam;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
/// Throws IoFailure if the file cannot be opened and ConfigInvalid if it is
/// truncated or not a checkpoint.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace flexconv
