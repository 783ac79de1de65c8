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

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Input:
      return "Input";
    case LayerKind::AttachLocation:
      return "AttachLocation";
    case LayerKind::PointwiseConv:
      return "PointwiseConv";
    case LayerKind::FlexConv:
      return "FlexConv";
    case LayerKind::ReLU:
      return "ReLU";
    case LayerKind::ResNetBlock:
      return "ResNetBlock";
    case LayerKind::FlexMaxPoolDownsample:
      return "FlexMaxPoolDownsample";
    case LayerKind::FlexUpsample:
      return "FlexUpsample";
    case LayerKind::Concat:
      return "Concat";
    case LayerKind::GlobalPool:
      return "GlobalPool";
    case LayerKind::Dense:
      return "Dense";
    case LayerKind::SoftmaxClassifier:
      return "SoftmaxClassifier";
  }
  return "Unknown";
}

void Tape::clear() {
  hierarchy = nullptr;
  outputs.clear();
  scratch.clear();
  records.clear();
  global_argmax.clear();
  reverse.clear();
}

std::size_t layer_param_size(const LayerSpec& spec, std::size_t dim) {
  switch (spec.kind) {
    case LayerKind::PointwiseConv:
    case LayerKind::Dense:
    case LayerKind::SoftmaxClassifier:
      return spec.out_channels * spec.in_channels + spec.out_channels;
    case LayerKind::FlexConv:
      return param_count(spec.in_channels, spec.out_channels, dim);
    case LayerKind::ResNetBlock: {
      const std::size_t c = spec.out_channels;
      return c * c + c + 2 * param_count(c, c, dim);
    }
    default:
      return 0;
  }
}

LayerGraph::LayerGraph(NetworkConfig config) : config_(config) {
  require(config_.dim >= 1, ErrorKind::ConfigInvalid, "network dimension must be >= 1");
  require(config_.input_features >= 1, ErrorKind::ConfigInvalid, "network needs at least one input feature");
  require(config_.classes >= 2, ErrorKind::ConfigInvalid, "network needs at least two classes");
  require(config_.stages >= 1, ErrorKind::ConfigInvalid, "network needs at least one stage");
  require(config_.base_channels >= 1, ErrorKind::ConfigInvalid, "base channel count must be >= 1");
  require(config_.k >= 1, ErrorKind::ConfigInvalid, "neighborhood size must be >= 1");
  require(config_.factor >= 2, ErrorKind::ConfigInvalid, "subsampling factor must be >= 2");
}

std::span<double> LayerGraph::layer_params(std::size_t layer) {
  const auto& spec = layers_.at(layer);
  return std::span<double>(params_).subspan(spec.param_offset, spec.param_size);
}

std::span<const double> LayerGraph::layer_params(std::size_t layer) const {
  const auto& spec = layers_.at(layer);
  return std::span<const double>(params_).subspan(spec.param_offset, spec.param_size);
}

int LayerGraph::add_layer(LayerSpec spec) {
  for (int in : spec.inputs) {
    if (!(in >= 0 && static_cast<std::size_t>(in) < layers_.size()))
      fail(ErrorKind::ConfigInvalid, "layer '" + spec.name + "' consumes a layer that does not exist yet");
  }
  spec.param_offset = params_.size();
  spec.param_size = layer_param_size(spec, config_.dim);
  params_.resize(params_.size() + spec.param_size, 0.0);
  levels_required_ = std::max(levels_required_, spec.level + 1);
  layers_.push_back(std::move(spec));
  return static_cast<int>(layers_.size()) - 1;
}

void LayerGraph::add_skip(int encoder_layer, int decoder_layer) {
  require(encoder_layer >= 0 && decoder_layer >= 0 && static_cast<std::size_t>(encoder_layer) < layers_.size() &&
              static_cast<std::size_t>(decoder_layer) < layers_.size(),
          ErrorKind::ConfigInvalid, "skip connection references a missing layer");
  skips_.emplace_back(encoder_layer, decoder_layer);
}

void LayerGraph::validate() const {
  auto bad = [](const LayerSpec& s, const std::string& why) {
    fail(ErrorKind::ConfigInvalid, "layer '" + s.name + "' (" + std::string(to_string(s.kind)) + "): " + why);
  };
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const LayerSpec& s = layers_[l];
    const std::size_t want_inputs = s.kind == LayerKind::Input ? 0 : s.kind == LayerKind::Concat ? 2 : 1;
    if (s.inputs.size() != want_inputs) bad(s, "wrong number of inputs");
    if (s.kind == LayerKind::Input) {
      if (l != 0) bad(s, "input must be the first layer");
      if (s.out_channels != config_.input_features) bad(s, "input width differs from configured feature count");
      continue;
    }
    for (int in : s.inputs)
      if (static_cast<std::size_t>(in) >= l) bad(s, "inputs must precede the layer");
    const LayerSpec& src = layers_[static_cast<std::size_t>(s.inputs[0])];
    if (s.kind != LayerKind::Concat && s.in_channels != src.out_channels) bad(s, "input width mismatch");
    switch (s.kind) {
      case LayerKind::AttachLocation:
        if (s.out_channels != s.in_channels + config_.dim) bad(s, "must widen by the spatial dimension");
        if (s.level != src.level) bad(s, "level mismatch");
        break;
      case LayerKind::FlexConv:
        if (s.k != config_.k) bad(s, "neighborhood size differs from the network's k");
        [[fallthrough]];
      case LayerKind::PointwiseConv:
      case LayerKind::ReLU:
        if (s.level != src.level) bad(s, "level mismatch");
        if (s.kind == LayerKind::ReLU && s.out_channels != s.in_channels) bad(s, "ReLU cannot change width");
        break;
      case LayerKind::ResNetBlock:
        if (s.out_channels != s.in_channels) bad(s, "residual block must preserve width");
        if (s.level != src.level) bad(s, "level mismatch");
        break;
      case LayerKind::FlexMaxPoolDownsample:
        if (s.level != src.level + 1) bad(s, "pooling must move one level down");
        if (s.out_channels != s.in_channels) bad(s, "pooling cannot change width");
        break;
      case LayerKind::FlexUpsample:
        if (src.level == 0 || s.level != src.level - 1) bad(s, "upsampling must move one level up");
        if (s.out_channels != s.in_channels) bad(s, "upsampling cannot change width");
        break;
      case LayerKind::Concat: {
        const LayerSpec& other = layers_[static_cast<std::size_t>(s.inputs[1])];
        if (src.level != other.level || s.level != src.level) bad(s, "concatenated inputs live on different levels");
        if (s.in_channels != src.out_channels + other.out_channels || s.out_channels != s.in_channels)
          bad(s, "concatenated width mismatch");
        break;
      }
      case LayerKind::GlobalPool:
        if (s.out_channels != s.in_channels) bad(s, "global pooling cannot change width");
        break;
      case LayerKind::Dense:
        if (src.kind != LayerKind::GlobalPool && src.kind != LayerKind::Dense && src.kind != LayerKind::ReLU)
          bad(s, "dense layers operate on pooled vectors");
        break;
      default:
        break;
    }
    if (s.param_size != layer_param_size(s, config_.dim)) bad(s, "parameter range size mismatch");
  }
  for (const auto& [enc, dec] : skips_) {
    const LayerSpec& a = layers_[static_cast<std::size_t>(enc)];
    const LayerSpec& b = layers_[static_cast<std::size_t>(dec)];
    if (a.level != b.level) fail(ErrorKind::ConfigInvalid, "skip connection joins different resolutions");
    if (b.kind != LayerKind::Concat) fail(ErrorKind::ConfigInvalid, "skip connection must end in a Concat layer");
  }
  require(!layers_.empty(), ErrorKind::ConfigInvalid, "empty layer graph");
}

}  // namespace flexconv
