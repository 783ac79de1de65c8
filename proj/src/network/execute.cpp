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

namespace {

struct FlexSlices {
  FlexConvView view;
  std::span<double> d_theta;
  std::span<double> d_theta_b;
};

FlexConvView flex_view(std::span<const double> p, std::size_t in, std::size_t out, std::size_t dim) {
  const FlexConvShape shape{in, out, dim};
  return {shape, p.subspan(0, shape.theta_size()), p.subspan(shape.theta_size(), shape.bias_size())};
}

// Parameter sub-ranges of a residual block of width c.
struct BlockViews {
  std::span<const double> pw_w, pw_b;
  FlexConvView flex1, flex2;
  std::size_t pw_size, flex_size;
};

BlockViews block_views(std::span<const double> p, std::size_t c, std::size_t dim) {
  BlockViews v;
  v.pw_size = c * c + c;
  v.flex_size = param_count(c, c, dim);
  v.pw_w = p.subspan(0, c * c);
  v.pw_b = p.subspan(c * c, c);
  v.flex1 = flex_view(p.subspan(v.pw_size, v.flex_size), c, c, dim);
  v.flex2 = flex_view(p.subspan(v.pw_size + v.flex_size, v.flex_size), c, c, dim);
  return v;
}

Matrix relu(const Matrix& x) {
  Matrix out = x;
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return out;
}

// grad .* (activation > 0), where activation = relu(pre).
Matrix relu_backward(const Matrix& grad, const Matrix& activation) {
  Matrix out = grad;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!(activation.data()[i] > 0.0)) out.data()[i] = 0.0;
  return out;
}

void add_into(Matrix& dst, const Matrix& src) {
  if (dst.empty() && src.size() > 0) {
    dst = src;
    return;
  }
  require(dst.rows() == src.rows() && dst.cols() == src.cols(), ErrorKind::ShapeMismatch,
          "gradient accumulation shape mismatch");
  for (std::size_t i = 0; i < dst.size(); ++i) dst.data()[i] += src.data()[i];
}

void add_into(std::span<double> dst, std::span<const double> src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

Matrix attached_locations(const Matrix& locations, AttachMode mode) {
  if (mode == AttachMode::Raw) return locations;
  const std::size_t n = locations.rows(), d = locations.cols();
  std::vector<double> centroid(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < d; ++t) centroid[t] += locations(i, t);
  for (double& v : centroid) v /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < d; ++t) ss += (locations(i, t) - centroid[t]) * (locations(i, t) - centroid[t]);
  const double rms = std::sqrt(ss / static_cast<double>(n));
  const double scale = rms > 0.0 ? 1.0 / rms : 1.0;
  Matrix out(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t t = 0; t < d; ++t) out(i, t) = (locations(i, t) - centroid[t]) * scale;
  return out;
}

Matrix global_max_pool(const Matrix& x, std::vector<Index>& argmax) {
  Matrix out(1, x.cols());
  argmax.assign(x.cols(), 0);
  for (std::size_t c = 0; c < x.cols(); ++c) {
    double best = x(0, c);
    Index arg = 0;
    for (std::size_t i = 1; i < x.rows(); ++i) {
      if (x(i, c) > best) {
        best = x(i, c);
        arg = static_cast<Index>(i);
      }
    }
    out(0, c) = best;
    argmax[c] = arg;
  }
  return out;
}

const HierarchyLevel& level_of(const ResolutionHierarchy& h, std::size_t level) { return h.levels.at(level); }

}  // namespace

Matrix forward(LayerGraph& graph, const ResolutionHierarchy& hierarchy, const Matrix& features) {
  const NetworkConfig& cfg = graph.config();
  if (hierarchy.levels.size() < graph.levels_required())
    fail(ErrorKind::ShapeMismatch, "hierarchy has " + std::to_string(hierarchy.levels.size()) +
                                       " levels, graph needs " + std::to_string(graph.levels_required()));
  for (std::size_t t = 0; t < graph.levels_required(); ++t) {
    const auto& lvl = hierarchy.levels[t];
    require(lvl.cloud.dim() == cfg.dim, ErrorKind::ShapeMismatch, "hierarchy dimension differs from network");
    if (lvl.neighbors.k() != cfg.k)
      fail(ErrorKind::ShapeMismatch, "hierarchy level " + std::to_string(t) +
                                         " has k = " + std::to_string(lvl.neighbors.k()) + ", network expects " +
                                         std::to_string(cfg.k));
  }
  require(features.rows() == hierarchy.levels[0].cloud.size() && features.cols() == cfg.input_features,
          ErrorKind::ShapeMismatch, "input features do not match level 0 of the hierarchy");

  Tape& tape = graph.tape();
  tape.clear();
  const auto& layers = graph.layers();
  const std::size_t L = layers.size();
  tape.hierarchy = &hierarchy;
  tape.outputs.resize(L);
  tape.scratch.resize(L);
  tape.records.resize(L);
  tape.global_argmax.resize(L);

  for (std::size_t l = 0; l < L; ++l) {
    const LayerSpec& s = layers[l];
    const auto p = graph.layer_params(l);
    const Matrix* x = s.inputs.empty() ? &features : &tape.outputs[static_cast<std::size_t>(s.inputs[0])];
    Matrix out;
    switch (s.kind) {
      case LayerKind::Input:
        out = features;
        break;
      case LayerKind::AttachLocation:
        out = hconcat(*x, attached_locations(level_of(hierarchy, s.level).cloud.locations(), cfg.attach));
        break;
      case LayerKind::PointwiseConv:
      case LayerKind::Dense:
      case LayerKind::SoftmaxClassifier:
        out = pointwise_conv(*x, p.subspan(0, s.out_channels * s.in_channels),
                             p.subspan(s.out_channels * s.in_channels, s.out_channels));
        break;
      case LayerKind::FlexConv: {
        const auto& lvl = level_of(hierarchy, s.level);
        out = flex_conv_forward(*x, lvl.cloud.locations(), lvl.neighbors,
                                flex_view(p, s.in_channels, s.out_channels, cfg.dim));
        break;
      }
      case LayerKind::ReLU:
        out = relu(*x);
        break;
      case LayerKind::ResNetBlock: {
        const auto& lvl = level_of(hierarchy, s.level);
        const BlockViews v = block_views(p, s.out_channels, cfg.dim);
        Matrix a1 = relu(pointwise_conv(*x, v.pw_w, v.pw_b));
        Matrix a2 = relu(flex_conv_forward(a1, lvl.cloud.locations(), lvl.neighbors, v.flex1));
        out = flex_conv_forward(a2, lvl.cloud.locations(), lvl.neighbors, v.flex2);
        add_into(out, *x);
        tape.scratch[l] = {std::move(a1), std::move(a2)};
        break;
      }
      case LayerKind::FlexMaxPoolDownsample: {
        const auto& fine = level_of(hierarchy, s.level - 1);
        const auto& coarse = level_of(hierarchy, s.level);
        PoolResult pooled = flex_max_pool(*x, fine.neighbors);
        out = downsample_gather(pooled.pooled, coarse.selection);
        tape.records[l] = std::move(pooled.record);
        break;
      }
      case LayerKind::FlexUpsample: {
        const auto& fine = level_of(hierarchy, s.level);
        const auto& coarse = level_of(hierarchy, s.level + 1);
        PoolResult up = flex_upsample(*x, coarse.selection, fine.neighbors, fine.cloud.size());
        out = std::move(up.pooled);
        tape.records[l] = std::move(up.record);
        break;
      }
      case LayerKind::Concat:
        out = hconcat(*x, tape.outputs[static_cast<std::size_t>(s.inputs[1])]);
        break;
      case LayerKind::GlobalPool:
        out = global_max_pool(*x, tape.global_argmax[l]);
        break;
    }
    tape.outputs[l] = std::move(out);
  }
  return tape.outputs.back();
}

std::vector<double> backward(LayerGraph& graph, const Matrix& loss_grad) {
  Tape& tape = graph.tape();
  require(!tape.empty() && tape.hierarchy != nullptr, ErrorKind::ConfigInvalid,
          "backward called without a recorded forward pass");
  struct ClearOnExit {
    Tape& t;
    ~ClearOnExit() { t.clear(); }
  } clear_guard{tape};

  const NetworkConfig& cfg = graph.config();
  const ResolutionHierarchy& hierarchy = *tape.hierarchy;
  const auto& layers = graph.layers();
  const std::size_t L = layers.size();
  require(loss_grad.rows() == tape.outputs.back().rows() && loss_grad.cols() == tape.outputs.back().cols(),
          ErrorKind::ShapeMismatch, "loss gradient shape differs from the network output");

  if (tape.reverse.empty()) {
    tape.reverse.resize(graph.levels_required());
    for (std::size_t t = 0; t < graph.levels_required(); ++t)
      tape.reverse[t] = build_reverse_index(hierarchy.levels[t].neighbors);
  }
  const BackwardOptions features_only{true, false};

  std::vector<double> grads(graph.params().size(), 0.0);
  std::vector<Matrix> g(L);
  g[L - 1] = loss_grad;

  for (std::size_t l = L; l-- > 1;) {
    if (g[l].empty()) continue;
    const LayerSpec& s = layers[l];
    const auto p = graph.layer_params(l);
    std::span<double> dp = std::span<double>(grads).subspan(s.param_offset, s.param_size);
    const auto in0 = static_cast<std::size_t>(s.inputs[0]);
    const Matrix& x = tape.outputs[in0];
    Matrix gx;
    switch (s.kind) {
      case LayerKind::Input:
        break;
      case LayerKind::AttachLocation: {
        gx = Matrix(g[l].rows(), s.in_channels);
        for (std::size_t i = 0; i < gx.rows(); ++i) std::copy_n(g[l].row(i).begin(), s.in_channels, gx.row(i).begin());
        break;
      }
      case LayerKind::PointwiseConv:
      case LayerKind::Dense:
      case LayerKind::SoftmaxClassifier: {
        const std::size_t wsize = s.out_channels * s.in_channels;
        PointwiseGrads pg = pointwise_conv_backward(g[l], x, p.subspan(0, wsize));
        add_into(dp.subspan(0, wsize), pg.d_weights);
        add_into(dp.subspan(wsize, s.out_channels), pg.d_bias);
        gx = std::move(pg.d_features);
        break;
      }
      case LayerKind::FlexConv: {
        const auto& lvl = level_of(hierarchy, s.level);
        const FlexConvView v = flex_view(p, s.in_channels, s.out_channels, cfg.dim);
        GradBundle gb =
            flex_conv_backward(g[l], x, lvl.cloud.locations(), lvl.neighbors, v, features_only, &tape.reverse[s.level]);
        add_into(dp.subspan(0, v.shape.theta_size()), gb.d_theta);
        add_into(dp.subspan(v.shape.theta_size(), v.shape.bias_size()), gb.d_theta_b);
        gx = std::move(gb.d_features);
        break;
      }
      case LayerKind::ReLU:
        gx = relu_backward(g[l], tape.outputs[l]);
        break;
      case LayerKind::ResNetBlock: {
        const auto& lvl = level_of(hierarchy, s.level);
        const BlockViews v = block_views(p, s.out_channels, cfg.dim);
        const Matrix& a1 = tape.scratch[l][0];
        const Matrix& a2 = tape.scratch[l][1];
        const auto& locs = lvl.cloud.locations();
        const auto* rev = &tape.reverse[s.level];
        GradBundle g2 = flex_conv_backward(g[l], a2, locs, lvl.neighbors, v.flex2, features_only, rev);
        GradBundle g1 =
            flex_conv_backward(relu_backward(g2.d_features, a2), a1, locs, lvl.neighbors, v.flex1, features_only, rev);
        const std::size_t c = s.out_channels;
        PointwiseGrads pg = pointwise_conv_backward(relu_backward(g1.d_features, a1), x, v.pw_w);
        add_into(dp.subspan(0, c * c), pg.d_weights);
        add_into(dp.subspan(c * c, c), pg.d_bias);
        const std::size_t ts = v.flex1.shape.theta_size(), bs = v.flex1.shape.bias_size();
        add_into(dp.subspan(v.pw_size, ts), g1.d_theta);
        add_into(dp.subspan(v.pw_size + ts, bs), g1.d_theta_b);
        add_into(dp.subspan(v.pw_size + v.flex_size, ts), g2.d_theta);
        add_into(dp.subspan(v.pw_size + v.flex_size + ts, bs), g2.d_theta_b);
        gx = std::move(pg.d_features);
        add_into(gx, g[l]);  // identity shortcut
        break;
      }
      case LayerKind::FlexMaxPoolDownsample: {
        const auto& fine = level_of(hierarchy, s.level - 1);
        const auto& coarse = level_of(hierarchy, s.level);
        gx = flex_max_pool_backward(downsample_gather_backward(g[l], coarse.selection, fine.cloud.size()),
                                    tape.records[l]);
        break;
      }
      case LayerKind::FlexUpsample: {
        const auto& coarse = level_of(hierarchy, s.level + 1);
        gx = flex_upsample_backward(g[l], coarse.selection, tape.records[l]);
        break;
      }
      case LayerKind::Concat: {
        const auto in1 = static_cast<std::size_t>(s.inputs[1]);
        const std::size_t ca = layers[in0].out_channels, cb = layers[in1].out_channels;
        gx = Matrix(g[l].rows(), ca);
        Matrix gb(g[l].rows(), cb);
        for (std::size_t i = 0; i < g[l].rows(); ++i) {
          auto row = g[l].row(i);
          std::copy_n(row.begin(), ca, gx.row(i).begin());
          std::copy_n(row.begin() + static_cast<std::ptrdiff_t>(ca), cb, gb.row(i).begin());
        }
        add_into(g[in1], gb);
        break;
      }
      case LayerKind::GlobalPool: {
        gx = Matrix(x.rows(), x.cols());
        for (std::size_t c = 0; c < x.cols(); ++c)
          gx(static_cast<std::size_t>(tape.global_argmax[l][c]), c) += g[l](0, c);
        break;
      }
    }
    for (double v : dp)
      if (!std::isfinite(v)) fail(ErrorKind::NonFinite, "non-finite parameter gradient in layer '" + s.name + "'");
    if (!gx.all_finite()) fail(ErrorKind::NonFinite, "non-finite input gradient in layer '" + s.name + "'");
    if (!gx.empty()) add_into(g[in0], gx);
    g[l] = Matrix();
  }
  return grads;
}

double mean_neighbor_distance(const ResolutionHierarchy& hierarchy) {
  require(!hierarchy.levels.empty(), ErrorKind::EmptyInput, "empty hierarchy");
  const auto& lvl = hierarchy.levels[0];
  const Matrix& loc = lvl.cloud.locations();
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < lvl.cloud.size(); ++i) {
    for (Index j : lvl.neighbors.row(i)) {
      if (static_cast<std::size_t>(j) == i) continue;
      double s = 0.0;
      for (std::size_t t = 0; t < loc.cols(); ++t) {
        const double diff = loc(i, t) - loc(static_cast<std::size_t>(j), t);
        s += diff * diff;
      }
      sum += std::sqrt(s);
      ++count;
    }
  }
  return count == 0 ? 1.0 : sum / static_cast<double>(count);
}

void init_params(LayerGraph& graph, const ResolutionHierarchy& hierarchy, Rng& rng) {
  const NetworkConfig& cfg = graph.config();
  double spacing = mean_neighbor_distance(hierarchy);
  if (!(spacing > 0.0)) spacing = 1.0;
  const auto k = static_cast<double>(cfg.k);

  auto fill_uniform = [&](std::span<double> dst, double bound) {
    for (double& v : dst) v = rng.uniform(-bound, bound);
  };
  auto init_pointwise = [&](std::span<double> p, std::size_t in, std::size_t out) {
    fill_uniform(p.subspan(0, in * out), std::sqrt(6.0 / static_cast<double>(in)));
    std::fill(p.begin() + static_cast<std::ptrdiff_t>(in * out), p.end(), 0.0);
  };
  auto init_flex = [&](std::span<double> p, std::size_t in, std::size_t out) {
    const FlexConvShape shape{in, out, cfg.dim};
    const auto c = static_cast<double>(in);
    fill_uniform(p.subspan(0, shape.theta_size()), 1.0 / (k * std::sqrt(c * spacing)));
    fill_uniform(p.subspan(shape.theta_size(), shape.bias_size()), 1.0 / (k * std::sqrt(c)));
  };

  for (std::size_t l = 0; l < graph.layers().size(); ++l) {
    const LayerSpec& s = graph.layers()[l];
    auto p = graph.layer_params(l);
    switch (s.kind) {
      case LayerKind::PointwiseConv:
      case LayerKind::Dense:
      case LayerKind::SoftmaxClassifier:
        init_pointwise(p, s.in_channels, s.out_channels);
        break;
      case LayerKind::FlexConv:
        init_flex(p, s.in_channels, s.out_channels);
        break;
      case LayerKind::ResNetBlock: {
        const std::size_t c = s.out_channels;
        const std::size_t pw = c * c + c, fs = param_count(c, c, cfg.dim);
        init_pointwise(p.subspan(0, pw), c, c);
        init_flex(p.subspan(pw, fs), c, c);
        init_flex(p.subspan(pw + fs, fs), c, c);
        break;
      }
      default:
        break;
    }
  }
}

}  // namespace flexconv
