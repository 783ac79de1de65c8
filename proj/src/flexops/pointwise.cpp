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
#include "flexconv/core/parallel.hpp"
#include "flexconv/flexops.hpp"

namespace flexconv {

Matrix pointwise_conv(const Matrix& features, std::span<const double> weights, std::span<const double> bias) {
  const std::size_t n = features.rows(), C = features.cols(), Cp = bias.size();
  if (weights.size() != Cp * C)
    fail(ErrorKind::ShapeMismatch, "pointwise weights have " + std::to_string(weights.size()) + " entries, expected " +
                                       std::to_string(Cp) + "x" + std::to_string(C));
  Matrix out(n, Cp);
#pragma omp parallel for schedule(static) num_threads(num_threads())
  for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(n); ++si) {
    const auto i = static_cast<std::size_t>(si);
    const double* f = features.row(i).data();
    double* dst = out.row(i).data();
    for (std::size_t o = 0; o < Cp; ++o) {
      const double* wo = weights.data() + o * C;
      double acc = bias[o];
      for (std::size_t c = 0; c < C; ++c) acc += wo[c] * f[c];
      dst[o] = acc;
    }
  }
  return out;
}

PointwiseGrads pointwise_conv_backward(const Matrix& upstream, const Matrix& features, std::span<const double> weights,
                                       bool need_features) {
  const std::size_t n = features.rows(), C = features.cols(), Cp = upstream.cols();
  require(upstream.rows() == n, ErrorKind::ShapeMismatch, "upstream rows differ from feature rows");
  require(weights.size() == Cp * C, ErrorKind::ShapeMismatch, "pointwise weights do not match shapes");
  PointwiseGrads g;
  g.d_weights.assign(Cp * C, 0.0);
  g.d_bias.assign(Cp, 0.0);
#pragma omp parallel for schedule(static) num_threads(num_threads())
  for (std::ptrdiff_t so = 0; so < static_cast<std::ptrdiff_t>(Cp); ++so) {
    const auto o = static_cast<std::size_t>(so);
    double* dw = g.d_weights.data() + o * C;
    double db = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double go = upstream(i, o);
      db += go;
      const double* f = features.row(i).data();
      for (std::size_t c = 0; c < C; ++c) dw[c] += go * f[c];
    }
    g.d_bias[o] = db;
  }
  if (need_features) {
    g.d_features = Matrix(n, C);
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(n); ++si) {
      const auto i = static_cast<std::size_t>(si);
      const double* gi = upstream.row(i).data();
      double* dst = g.d_features.row(i).data();
      for (std::size_t o = 0; o < Cp; ++o) {
        const double go = gi[o];
        const double* wo = weights.data() + o * C;
        for (std::size_t c = 0; c < C; ++c) dst[c] += go * wo[c];
      }
    }
  }
  return g;
}

}  // namespace flexconv
