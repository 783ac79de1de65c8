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
#include "flexconv/network.hpp"

namespace flexconv {

namespace {

class GraphBuilder {
 public:
  explicit GraphBuilder(NetworkConfig config) : graph_(config) {
    LayerSpec input;
    input.kind = LayerKind::Input;
    input.name = "input";
    input.out_channels = config.input_features;
    last_ = graph_.add_layer(input);
  }

  int add(LayerKind kind, const std::string& name, std::size_t out_channels, std::size_t level) {
    return add2(kind, name, {last_}, width(last_), out_channels, level);
  }

  int add2(LayerKind kind, const std::string& name, std::vector<int> inputs, std::size_t in_channels,
           std::size_t out_channels, std::size_t level) {
    LayerSpec s;
    s.kind = kind;
    s.name = name;
    s.inputs = std::move(inputs);
    s.in_channels = in_channels;
    s.out_channels = out_channels;
    s.level = level;
    if (kind == LayerKind::FlexConv || kind == LayerKind::ResNetBlock || kind == LayerKind::FlexMaxPoolDownsample ||
        kind == LayerKind::FlexUpsample)
      s.k = graph_.config().k;
    last_ = graph_.add_layer(std::move(s));
    return last_;
  }

  std::size_t width(int layer) const { return graph_.layers()[static_cast<std::size_t>(layer)].out_channels; }
  int last() const { return last_; }

  // attach -> 1x1 conv -> ReLU -> two residual blocks, all at `level`.
  void stage_body(const std::string& prefix, std::size_t channels, std::size_t level) {
    const std::size_t d = graph_.config().dim;
    add(LayerKind::AttachLocation, prefix + ".attach", width(last_) + d, level);
    add(LayerKind::PointwiseConv, prefix + ".pw", channels, level);
    add(LayerKind::ReLU, prefix + ".relu", channels, level);
    add(LayerKind::ResNetBlock, prefix + ".res0", channels, level);
    add(LayerKind::ResNetBlock, prefix + ".res1", channels, level);
  }

  LayerGraph finish() {
    graph_.validate();
    return std::move(graph_);
  }

  LayerGraph& graph() { return graph_; }

 private:
  LayerGraph graph_;
  int last_ = -1;
};

std::size_t stage_width(const NetworkConfig& c, std::size_t s) {
  require(s < 32, ErrorKind::ConfigInvalid, "too many stages");
  return c.base_channels << s;
}

}  // namespace

LayerGraph build_segnet(const NetworkConfig& config) {
  NetworkConfig c = config;
  c.kind = NetworkKind::Segmentation;
  GraphBuilder b(c);
  std::vector<int> skips(c.stages);
  for (std::size_t s = 0; s < c.stages; ++s) {
    const std::string p = "enc" + std::to_string(s);
    b.stage_body(p, stage_width(c, s), s);
    skips[s] = b.last();
    b.add(LayerKind::FlexMaxPoolDownsample, p + ".pool", stage_width(c, s), s + 1);
  }
  b.stage_body("bottleneck", stage_width(c, c.stages), c.stages);
  for (std::size_t s = c.stages; s-- > 0;) {
    const std::string p = "dec" + std::to_string(s);
    const int up = b.add(LayerKind::FlexUpsample, p + ".up", b.width(b.last()), s);
    const std::size_t merged = b.width(up) + b.width(skips[s]);
    const int cat = b.add2(LayerKind::Concat, p + ".concat", {up, skips[s]}, merged, merged, s);
    b.graph().add_skip(skips[s], cat);
    b.stage_body(p, stage_width(c, s), s);
  }
  b.add(LayerKind::SoftmaxClassifier, "classifier", c.classes, 0);
  return b.finish();
}

LayerGraph build_segnet(std::size_t dim, std::size_t input_features, std::size_t classes, std::size_t stages,
                        std::size_t base_channels, std::size_t k, std::size_t factor) {
  NetworkConfig c;
  c.kind = NetworkKind::Segmentation;
  c.dim = dim;
  c.input_features = input_features;
  c.classes = classes;
  c.stages = stages;
  c.base_channels = base_channels;
  c.k = k;
  c.factor = factor;
  return build_segnet(c);
}

LayerGraph build_classifier(const NetworkConfig& config) {
  NetworkConfig c = config;
  c.kind = NetworkKind::Classification;
  GraphBuilder b(c);
  for (std::size_t s = 0; s < c.stages; ++s) {
    const std::string p = "enc" + std::to_string(s);
    b.stage_body(p, stage_width(c, s), s);
    b.add(LayerKind::FlexMaxPoolDownsample, p + ".pool", stage_width(c, s), s + 1);
  }
  const std::size_t top = stage_width(c, c.stages);
  const std::size_t d = c.dim;
  b.add(LayerKind::AttachLocation, "head.attach", b.width(b.last()) + d, c.stages);
  b.add(LayerKind::PointwiseConv, "head.pw", top, c.stages);
  b.add(LayerKind::ReLU, "head.relu", top, c.stages);
  b.add(LayerKind::GlobalPool, "head.pool", top, c.stages);
  b.add(LayerKind::Dense, "head.dense", top, c.stages);
  b.add(LayerKind::ReLU, "head.dense_relu", top, c.stages);
  b.add(LayerKind::SoftmaxClassifier, "classifier", c.classes, c.stages);
  return b.finish();
}

LayerGraph build_classifier(std::size_t dim, std::size_t input_features, std::size_t classes, std::size_t stages,
                            std::size_t base_channels, std::size_t k) {
  NetworkConfig c;
  c.kind = NetworkKind::Classification;
  c.dim = dim;
  c.input_features = input_features;
  c.classes = classes;
  c.stages = stages;
  c.base_channels = base_channels;
  c.k = k;
  return build_classifier(c);
}

LayerGraph build_network(const NetworkConfig& config) {
  return config.kind == NetworkKind::Segmentation ? build_segnet(config) : build_classifier(config);
}

}  // namespace flexconv
