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

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "flexconv/core/error.hpp"
#include "flexconv/harness.hpp"

namespace flexconv {

PreparedScene prepare_scene(const PointCloud& cloud, std::vector<int> labels, const NetworkConfig& config, Rng& rng) {
  if (config.kind == NetworkKind::Segmentation)
    require(labels.size() == cloud.size(), ErrorKind::ShapeMismatch, "segmentation needs one label per point");
  else
    require(labels.size() == 1, ErrorKind::ShapeMismatch, "classification needs one label per cloud");
  require(cloud.dim() == config.dim, ErrorKind::ShapeMismatch, "cloud dimension differs from the network's");
  require(cloud.channels() == config.input_features, ErrorKind::ShapeMismatch,
          "cloud feature count differs from the network's");
  PreparedScene s{build_hierarchy(cloud, config.k, config.factor, config.stages, rng), cloud.features(),
                  std::move(labels)};
  return s;
}

TrainLog train_network(LayerGraph& graph, AdamState& adam, std::span<const PreparedScene> scenes,
                       const TrainOptions& options, Rng& rng, const StepCallback& on_step) {
  require(!scenes.empty(), ErrorKind::EmptyInput, "no training scenes");
  require(options.batch >= 1, ErrorKind::ConfigInvalid, "batch must be >= 1");
  require(options.lr > 0.0 && std::isfinite(options.lr), ErrorKind::ConfigInvalid, "learning rate must be positive");
  require(adam.m.size() == graph.params().size(), ErrorKind::ShapeMismatch, "optimizer state size mismatch");
  require(options.clip_norm >= 0.0 && std::isfinite(options.clip_norm), ErrorKind::ConfigInvalid,
          "clip_norm must be >= 0");

  const std::size_t steps_per_epoch = (scenes.size() + options.batch - 1) / options.batch;
  const std::size_t total = steps_per_epoch * options.epochs;
  std::vector<std::size_t> order(scenes.size());
  std::iota(order.begin(), order.end(), 0);

  TrainLog log;
  std::size_t step = 0;
  std::vector<double> grad(graph.params().size());
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    if (options.shuffle)
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < steps_per_epoch; ++b, ++step) {
      const std::size_t begin = b * options.batch, end = std::min(order.size(), begin + options.batch);
      const double inv = 1.0 / static_cast<double>(end - begin);
      std::fill(grad.begin(), grad.end(), 0.0);
      double loss = 0.0;
      for (std::size_t s = begin; s < end; ++s) {
        const PreparedScene& sc = scenes[order[s]];
        const Matrix logits = forward(graph, sc.hierarchy, sc.features);
        LossResult lr = softmax_cross_entropy(logits, sc.labels);
        const std::vector<double> g = backward(graph, lr.grad);
        for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i] * inv;
        loss += lr.loss * inv;
      }
      if (!std::isfinite(loss)) fail(ErrorKind::NonFinite, "training loss diverged at step " + std::to_string(step));
      if (options.clip_norm > 0.0) {
        double sq = 0.0;
        for (double v : grad) sq += v * v;
        const double norm = std::sqrt(sq);
        if (norm > options.clip_norm)
          for (double& v : grad) v *= options.clip_norm / norm;
      }
      adam.lr = options.cosine
                    ? 0.5 * options.lr *
                          (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / static_cast<double>(total)))
                    : options.lr;
      adam_step(adam, graph.params(), grad);
      log.step_losses.push_back(loss);
      epoch_loss += loss;
      if (on_step) on_step(step, loss);
    }
    log.epoch_losses.push_back(epoch_loss / static_cast<double>(steps_per_epoch));
  }
  return log;
}

Metrics evaluate_network(LayerGraph& graph, std::span<const PreparedScene> scenes) {
  require(!scenes.empty(), ErrorKind::EmptyInput, "no scenes to evaluate");
  std::vector<int> predicted, labels;
  for (const auto& sc : scenes) {
    const Matrix logits = forward(graph, sc.hierarchy, sc.features);
    graph.tape().clear();
    const std::vector<int> p = argmax_rows(logits);
    require(p.size() == sc.labels.size(), ErrorKind::ShapeMismatch, "label count differs from the network output");
    predicted.insert(predicted.end(), p.begin(), p.end());
    labels.insert(labels.end(), sc.labels.begin(), sc.labels.end());
  }
  return evaluate_predictions(predicted, labels, graph.config().classes);
}

bool monotone_trend(std::span<const double> losses, std::size_t max_upticks, double ratio) {
  if (losses.size() < 2) return false;
  std::size_t upticks = 0;
  for (std::size_t i = 1; i < losses.size(); ++i)
    if (losses[i] > losses[i - 1]) ++upticks;
  return upticks <= max_upticks && losses.back() < ratio * losses.front();
}

}  // namespace flexconv
