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

#include "flexconv/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "flexconv/core/error.hpp"
#include "flexconv/core/log.hpp"
#include "flexconv/core/parallel.hpp"

namespace flexconv {

namespace {

struct RaceKey {
  bool zero_mass;  // phi == 0 ranks behind every positive-mass point
  double key;
  Index index;
};

bool operator<(const RaceKey& a, const RaceKey& b) {
  if (a.zero_mass != b.zero_mass) return !a.zero_mass;
  if (a.key != b.key) return a.key < b.key;
  return a.index < b.index;
}

void check_m(std::size_t n, std::size_t m) {
  require(m >= 1, ErrorKind::ConfigInvalid, "sample size must be >= 1");
  if (m > n)
    fail(ErrorKind::ConfigInvalid, "sample size " + std::to_string(m) + " exceeds population " + std::to_string(n));
}

SelectionMap smallest_keys(std::vector<RaceKey>& keys, std::size_t m) {
  auto middle = keys.begin() + static_cast<std::ptrdiff_t>(m);
  if (m < keys.size()) std::nth_element(keys.begin(), middle, keys.end());
  SelectionMap out;
  out.selected.reserve(m);
  for (auto it = keys.begin(); it != middle; ++it) out.selected.push_back(it->index);
  std::sort(out.selected.begin(), out.selected.end());
  return out;
}

// key_i = E_i / weight_i with E_i ~ Exp(1) drawn at counter i of one stream.
std::vector<RaceKey> race_keys(std::span<const double> weights, Rng& rng) {
  const Rng stream = rng.split();
  std::vector<RaceKey> keys(weights.size());
  const auto n = static_cast<std::ptrdiff_t>(weights.size());
#pragma omp parallel for schedule(static) num_threads(num_threads())
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const double e = -std::log(stream.uniform_at(ui));
    const double w = weights[ui];
    keys[ui] = w > 0.0 ? RaceKey{false, e / w, static_cast<Index>(i)} : RaceKey{true, e, static_cast<Index>(i)};
  }
  return keys;
}

}  // namespace

DensityEstimate inverse_density(const Matrix& locations, const NeighborIndex& neighbors) {
  check_neighbor_range(neighbors, locations.rows());
  const std::size_t d = locations.cols();
  DensityEstimate out;
  out.phi.assign(locations.rows(), 0.0);
  const auto n = static_cast<std::ptrdiff_t>(locations.rows());
#pragma omp parallel for schedule(static) num_threads(num_threads())
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    auto li = locations.row(ui);
    double sum = 0.0;
    for (Index j : neighbors.row(ui)) {
      auto lj = locations.row(static_cast<std::size_t>(j));
      double s = 0.0;
      for (std::size_t t = 0; t < d; ++t) {
        const double diff = li[t] - lj[t];
        s += diff * diff;
      }
      sum += std::sqrt(s);
    }
    out.phi[ui] = sum;
  }
  return out;
}

SelectionMap idiss_sample(const DensityEstimate& density, std::size_t m, Rng& rng) {
  const auto& phi = density.phi;
  check_m(phi.size(), m);
  for (double v : phi) {
    require(std::isfinite(v), ErrorKind::NonFinite, "density contains NaN or Inf");
    require(v >= 0.0, ErrorKind::ConfigInvalid, "density values must be nonnegative");
  }
  if (std::all_of(phi.begin(), phi.end(), [](double v) { return v == 0.0; })) {
    log_warning("inverse density is zero everywhere; falling back to uniform sampling");
  }
  auto keys = race_keys(phi, rng);
  return smallest_keys(keys, m);
}

SelectionMap random_sample(std::size_t n, std::size_t m, Rng& rng) {
  check_m(n, m);
  const std::vector<double> ones(n, 1.0);
  auto keys = race_keys(ones, rng);
  return smallest_keys(keys, m);
}

double mean_nearest_spacing(const Matrix& locations) {
  require(locations.rows() >= 2, ErrorKind::EmptyInput, "spacing needs at least two points");
  const auto neighbors = compute_neighbors(locations, 2);
  double sum = 0.0;
  for (std::size_t i = 0; i < locations.rows(); ++i) {
    auto a = locations.row(i);
    auto b = locations.row(static_cast<std::size_t>(neighbors.row(i)[1]));
    double s = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) s += (a[t] - b[t]) * (a[t] - b[t]);
    sum += std::sqrt(s);
  }
  return sum / static_cast<double>(locations.rows());
}

}  // namespace flexconv
