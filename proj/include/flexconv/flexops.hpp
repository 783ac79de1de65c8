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
#include <span>
#include <vector>

#include "flexconv/core/matrix.hpp"
#include "flexconv/neighborhood.hpp"
#include "flexconv/sampling.hpp"

namespace flexconv {

struct FlexConvShape {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t dim = 0;

  std::size_t theta_size() const noexcept { return out_channels * in_channels * dim; }
  std::size_t bias_size() const noexcept { return out_channels * in_channels; }
  friend bool operator==(const FlexConvShape&, const FlexConvShape&) = default;
};

/// Non-owning view of flex-convolution weights. theta is laid out
/// [out][in][dim], theta_b is [out][in].
struct FlexConvView {
  FlexConvShape shape;
  std::span<const double> theta;
  std::span<const double> theta_b;
};

/// Owning weights of one flex-convolution layer. The filter between input
/// channel c and output channel o is w(l_i, l_j) = <theta[o][c], l_i - l_j> + theta_b[o][c].
class FlexConvParams {
 public:
  explicit FlexConvParams(FlexConvShape shape);
  FlexConvParams(FlexConvShape shape, std::vector<double> theta, std::vector<double> theta_b);

  const FlexConvShape& shape() const noexcept { return shape_; }
  double& theta(std::size_t out, std::size_t in, std::size_t t) {
    return theta_[(out * shape_.in_channels + in) * shape_.dim + t];
  }
  double& theta_b(std::size_t out, std::size_t in) { return theta_b_[out * shape_.in_channels + in]; }
  std::vector<double>& theta_data() noexcept { return theta_; }
  std::vector<double>& theta_b_data() noexcept { return theta_b_; }
  const std::vector<double>& theta_data() const noexcept { return theta_; }
  const std::vector<double>& theta_b_data() const noexcept { return theta_b_; }

  FlexConvView view() const noexcept { return {shape_, theta_, theta_b_}; }
  operator FlexConvView() const noexcept { return view(); }  // NOLINT

 private:
  FlexConvShape shape_;
  std::vector<double> theta_;
  std::vector<double> theta_b_;
};

struct GradBundle {
  Matrix d_features;              // n x C
  std::vector<double> d_theta;    // C' x C x d
  std::vector<double> d_theta_b;  // C' x C
  Matrix d_locations;             // n x d (empty when not requested)
};

struct BackwardOptions {
  bool features = true;
  bool locations = true;
};

/// f'(o, i) = sum_c sum_{j in N(i)} (<theta[o][c], l_i - l_j> + theta_b[o][c]) f(c, j).
///
/// Evaluated through per-point neighborhood moments: for each point the
/// (d+1) x C table of sum_j (l_i - l_j)_t f(c, j) and sum_j f(c, j) is built
/// once and then contracted with the weights, so the cost is
/// O(n k C (d+1) + n C' C (d+1)) instead of O(n k C' C (d+1)). Neighbor
/// rows are read in place.
Matrix flex_conv_forward(const Matrix& features, const Matrix& locations, const NeighborIndex& neighbors,
                         const FlexConvView& params);

/// Direct evaluation of the defining double sum, one weight per
/// (point, neighbor, out, in) tuple, single threaded. Reference and
/// benchmark baseline.
Matrix flex_conv_forward_naive(const Matrix& features, const Matrix& locations, const NeighborIndex& neighbors,
                               const FlexConvView& params);

/// Exact gradients of sum(upstream .* forward(...)) with respect to features,
/// theta, theta_b and locations. Scatters onto neighbor points are reduced
/// in the fixed order given by the reverse index, so results are bitwise
/// independent of the thread count. `reverse` may be passed to reuse a
/// precomputed reverse index.
GradBundle flex_conv_backward(const Matrix& upstream, const Matrix& features, const Matrix& locations,
                              const NeighborIndex& neighbors, const FlexConvView& params,
                              const BackwardOptions& options = {}, const ReverseIndex* reverse = nullptr);

/// Winning neighbor (global point index) per (point, channel).
struct PoolRecord {
  std::size_t rows = 0;  // pooled points
  std::size_t channels = 0;
  std::size_t sources = 0;    // points in the pooled input
  std::vector<Index> argmax;  // rows x channels

  Index at(std::size_t i, std::size_t c) const { return argmax[i * channels + c]; }
};

struct PoolResult {
  Matrix pooled;
  PoolRecord record;
};

/// pooled(c, i) = max_{j in N(i)} f(c, j); ties go to the lowest index.
PoolResult flex_max_pool(const Matrix& features, const NeighborIndex& neighbors);

/// Routes each upstream entry to its recorded winner.
Matrix flex_max_pool_backward(const Matrix& upstream, const PoolRecord& record);

Matrix downsample_gather(const Matrix& features, const SelectionMap& selection);
/// Adjoint of downsample_gather: scatters rows back into an n-row zero matrix.
Matrix downsample_gather_backward(const Matrix& upstream, const SelectionMap& selection, std::size_t n);

/// Coarse rows are copied to their fine positions, every other fine point
/// starts at zero, then the fine level is flex-max-pooled. With negative
/// coarse features the zero fill can win the max.
PoolResult flex_upsample(const Matrix& coarse, const SelectionMap& selection, const NeighborIndex& fine_neighbors,
                         std::size_t n);
Matrix flex_upsample_backward(const Matrix& upstream, const SelectionMap& selection, const PoolRecord& record);

/// Per-point affine map; weights are [out][in] row-major.
Matrix pointwise_conv(const Matrix& features, std::span<const double> weights, std::span<const double> bias);

struct PointwiseGrads {
  Matrix d_features;
  std::vector<double> d_weights;
  std::vector<double> d_bias;
};

PointwiseGrads pointwise_conv_backward(const Matrix& upstream, const Matrix& features, std::span<const double> weights,
                                       bool need_features = true);

/// Trainable scalars of one flex-convolution layer: C' * C * (d + 1).
std::size_t param_count(std::size_t in_channels, std::size_t out_channels, std::size_t dim);

/// Trainable scalars of a dense grid kernel with `taps` positions: C' * C * taps.
std::size_t grid_param_count(std::size_t in_channels, std::size_t out_channels, std::size_t taps);

}  // namespace flexconv
