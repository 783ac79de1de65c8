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
#include <vector>

#include "flexconv/core/error.hpp"
#include "flexconv/core/parallel.hpp"
#include "flexconv/flexops.hpp"

namespace flexconv {

FlexConvParams::FlexConvParams(FlexConvShape shape)
    : shape_(shape), theta_(shape.theta_size(), 0.0), theta_b_(shape.bias_size(), 0.0) {}

FlexConvParams::FlexConvParams(FlexConvShape shape, std::vector<double> theta, std::vector<double> theta_b)
    : shape_(shape), theta_(std::move(theta)), theta_b_(std::move(theta_b)) {
  require(theta_.size() == shape_.theta_size() && theta_b_.size() == shape_.bias_size(), ErrorKind::ShapeMismatch,
          "flex-conv parameter buffers do not match the declared shape");
}

std::size_t param_count(std::size_t in_channels, std::size_t out_channels, std::size_t dim) {
  return out_channels * in_channels * (dim + 1);
}

std::size_t grid_param_count(std::size_t in_channels, std::size_t out_channels, std::size_t taps) {
  return out_channels * in_channels * taps;
}

namespace {

void check_inputs(const Matrix& features, const Matrix& locations, const NeighborIndex& neighbors,
                  const FlexConvView& p) {
  const auto& s = p.shape;
  if (features.rows() != locations.rows())
    fail(ErrorKind::ShapeMismatch,
         "features have " + std::to_string(features.rows()) + " rows, locations " + std::to_string(locations.rows()));
  if (features.cols() != s.in_channels)
    fail(ErrorKind::ShapeMismatch, "features have " + std::to_string(features.cols()) + " channels, layer expects " +
                                       std::to_string(s.in_channels));
  if (locations.cols() != s.dim)
    fail(ErrorKind::ShapeMismatch,
         "locations have dimension " + std::to_string(locations.cols()) + ", layer expects " + std::to_string(s.dim));
  require(p.theta.size() == s.theta_size() && p.theta_b.size() == s.bias_size(), ErrorKind::ShapeMismatch,
          "flex-conv parameter views do not match the declared shape");
  check_neighbor_range(neighbors, features.rows());
}

// Weights rearranged as out x (in * (d + 1)): column c*(d+1)+t holds
// theta[o][c][t] for t < d and theta_b[o][c] for t = d.
std::vector<double> packed_weights(const FlexConvView& p) {
  const std::size_t C = p.shape.in_channels, Cp = p.shape.out_channels, d = p.shape.dim, D1 = d + 1;
  std::vector<double> w(Cp * C * D1);
  for (std::size_t o = 0; o < Cp; ++o) {
    for (std::size_t c = 0; c < C; ++c) {
      double* dst = w.data() + o * C * D1 + c * D1;
      for (std::size_t t = 0; t < d; ++t) dst[t] = p.theta[(o * C + c) * d + t];
      dst[d] = p.theta_b[o * C + c];
    }
  }
  return w;
}

// Neighborhood moments of point i into m (size C*(d+1)).
void accumulate_moments(std::size_t i, const Matrix& features, const Matrix& locations, const NeighborIndex& neighbors,
                        double* m) {
  const std::size_t C = features.cols(), d = locations.cols(), D1 = d + 1;
  std::fill(m, m + C * D1, 0.0);
  const double* li = locations.row(i).data();
  double delta[8];
  std::vector<double> delta_heap;
  double* dl = delta;
  if (d > 8) {
    delta_heap.resize(d);
    dl = delta_heap.data();
  }
  for (Index j : neighbors.row(i)) {
    const auto uj = static_cast<std::size_t>(j);
    const double* lj = locations.row(uj).data();
    for (std::size_t t = 0; t < d; ++t) dl[t] = li[t] - lj[t];
    const double* fj = features.row(uj).data();
    for (std::size_t c = 0; c < C; ++c) {
      const double f = fj[c];
      double* mc = m + c * D1;
      for (std::size_t t = 0; t < d; ++t) mc[t] += dl[t] * f;
      mc[d] += f;
    }
  }
}

}  // namespace

Matrix flex_conv_forward(const Matrix& features, const Matrix& locations, const NeighborIndex& neighbors,
                         const FlexConvView& params) {
  check_inputs(features, locations, neighbors, params);
  const std::size_t n = features.rows();
  const std::size_t C = params.shape.in_channels, Cp = params.shape.out_channels, D1 = params.shape.dim + 1;
  const std::size_t width = C * D1;
  const auto w = packed_weights(params);
  Matrix out(n, Cp);
#pragma omp parallel num_threads(num_threads())
  {
    std::vector<double> m(width);
#pragma omp for schedule(static)
    for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(n); ++si) {
      const auto i = static_cast<std::size_t>(si);
      accumulate_moments(i, features, locations, neighbors, m.data());
      double* dst = out.row(i).data();
      for (std::size_t o = 0; o < Cp; ++o) {
        const double* wo = w.data() + o * width;
        double acc = 0.0;
        for (std::size_t col = 0; col < width; ++col) acc += wo[col] * m[col];
        dst[o] = acc;
      }
    }
  }
  return out;
}

Matrix flex_conv_forward_naive(const Matrix& features, const Matrix& locations, const NeighborIndex& neighbors,
                               const FlexConvView& params) {
  check_inputs(features, locations, neighbors, params);
  const std::size_t n = features.rows();
  const std::size_t C = params.shape.in_channels, Cp = params.shape.out_channels, d = params.shape.dim;
  Matrix out(n, Cp);
  std::vector<double> delta(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (Index j : neighbors.row(i)) {
      const auto uj = static_cast<std::size_t>(j);
      for (std::size_t t = 0; t < d; ++t) delta[t] = locations(i, t) - locations(uj, t);
      for (std::size_t o = 0; o < Cp; ++o) {
        for (std::size_t c = 0; c < C; ++c) {
          double weight = params.theta_b[o * C + c];
          for (std::size_t t = 0; t < d; ++t) weight += params.theta[(o * C + c) * d + t] * delta[t];
          out(i, o) += weight * features(uj, c);
        }
      }
    }
  }
  return out;
}

GradBundle flex_conv_backward(const Matrix& upstream, const Matrix& features, const Matrix& locations,
                              const NeighborIndex& neighbors, const FlexConvView& params,
                              const BackwardOptions& options, const ReverseIndex* reverse) {
  check_inputs(features, locations, neighbors, params);
  const std::size_t n = features.rows(), k = neighbors.k();
  const std::size_t C = params.shape.in_channels, Cp = params.shape.out_channels, d = params.shape.dim;
  const std::size_t D1 = d + 1, width = C * D1;
  require(upstream.rows() == n && upstream.cols() == Cp, ErrorKind::ShapeMismatch,
          "upstream gradient shape does not match the layer output");
  const auto w = packed_weights(params);
  const auto sn = static_cast<std::ptrdiff_t>(n);

  // Pass 1, per point: moments, their adjoint dM = W^T g, and the location
  // gradient of the point in its role as neighborhood center.
  Matrix moments(n, width);
  Matrix d_moments(n, width);
  Matrix d_center(options.locations ? n : 0, d);
#pragma omp parallel for schedule(static) num_threads(num_threads())
  for (std::ptrdiff_t si = 0; si < sn; ++si) {
    const auto i = static_cast<std::size_t>(si);
    double* m = moments.row(i).data();
    accumulate_moments(i, features, locations, neighbors, m);
    double* dm = d_moments.row(i).data();
    const double* g = upstream.row(i).data();
    for (std::size_t o = 0; o < Cp; ++o) {
      const double go = g[o];
      const double* wo = w.data() + o * width;
      for (std::size_t col = 0; col < width; ++col) dm[col] += go * wo[col];
    }
    if (options.locations) {
      double* dc = d_center.row(i).data();
      for (Index j : neighbors.row(i)) {
        const double* fj = features.row(static_cast<std::size_t>(j)).data();
        for (std::size_t c = 0; c < C; ++c) {
          const double f = fj[c];
          for (std::size_t t = 0; t < d; ++t) dc[t] += dm[c * D1 + t] * f;
        }
      }
    }
  }

  // Pass 2, per output channel: dW[o] = sum_i g(o, i) M_i, summed in point order.
  std::vector<double> dw(Cp * width, 0.0);
#pragma omp parallel for schedule(static) num_threads(num_threads())
  for (std::ptrdiff_t so = 0; so < static_cast<std::ptrdiff_t>(Cp); ++so) {
    const auto o = static_cast<std::size_t>(so);
    double* dwo = dw.data() + o * width;
    for (std::size_t i = 0; i < n; ++i) {
      const double go = upstream(i, o);
      if (go == 0.0) continue;
      const double* m = moments.row(i).data();
      for (std::size_t col = 0; col < width; ++col) dwo[col] += go * m[col];
    }
  }

  GradBundle out;
  out.d_theta.assign(params.shape.theta_size(), 0.0);
  out.d_theta_b.assign(params.shape.bias_size(), 0.0);
  for (std::size_t o = 0; o < Cp; ++o) {
    for (std::size_t c = 0; c < C; ++c) {
      const double* src = dw.data() + o * width + c * D1;
      for (std::size_t t = 0; t < d; ++t) out.d_theta[(o * C + c) * d + t] = src[t];
      out.d_theta_b[o * C + c] = src[d];
    }
  }
  if (!options.features && !options.locations) return out;

  // Pass 3, per neighbor target j: gather incoming edges in slot order.
  ReverseIndex local;
  if (reverse == nullptr) {
    local = build_reverse_index(neighbors);
    reverse = &local;
  }
  require(reverse->offsets.size() == n + 1 && reverse->slots.size() == n * k, ErrorKind::ShapeMismatch,
          "reverse index does not belong to this neighbor table");
  if (options.features) out.d_features = Matrix(n, C);
  if (options.locations) out.d_locations = Matrix(n, d);
#pragma omp parallel num_threads(num_threads())
  {
    std::vector<double> delta(d), incoming(d);
#pragma omp for schedule(static)
    for (std::ptrdiff_t sj = 0; sj < sn; ++sj) {
      const auto j = static_cast<std::size_t>(sj);
      const double* lj = locations.row(j).data();
      const double* fj = features.row(j).data();
      double* dfj = options.features ? out.d_features.row(j).data() : nullptr;
      std::fill(incoming.begin(), incoming.end(), 0.0);
      for (std::size_t e = reverse->offsets[j]; e < reverse->offsets[j + 1]; ++e) {
        const std::size_t i = reverse->slots[e] / k;
        const double* li = locations.row(i).data();
        for (std::size_t t = 0; t < d; ++t) delta[t] = li[t] - lj[t];
        const double* dm = d_moments.row(i).data();
        for (std::size_t c = 0; c < C; ++c) {
          const double* dmc = dm + c * D1;
          if (dfj != nullptr) {
            double v = dmc[d];
            for (std::size_t t = 0; t < d; ++t) v += dmc[t] * delta[t];
            dfj[c] += v;
          }
          if (options.locations) {
            for (std::size_t t = 0; t < d; ++t) incoming[t] += dmc[t] * fj[c];
          }
        }
      }
      if (options.locations) {
        double* dl = out.d_locations.row(j).data();
        const double* dc = d_center.row(j).data();
        for (std::size_t t = 0; t < d; ++t) dl[t] = dc[t] - incoming[t];
      }
    }
  }
  return out;
}

}  // namespace flexconv
