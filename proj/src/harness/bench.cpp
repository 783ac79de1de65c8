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
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "flexconv/core/cloud_io.hpp"
#include "flexconv/core/error.hpp"
#include "flexconv/core/parallel.hpp"
#include "flexconv/flexops.hpp"
#include "flexconv/harness.hpp"

namespace flexconv {

namespace {

std::uint64_t spread_bits(std::uint64_t v, std::size_t dim) {
  // Interleave: bit b of v goes to bit b * dim.
  std::uint64_t out = 0;
  for (std::size_t b = 0; b * dim < 64 && b < 21; ++b) out |= ((v >> b) & 1u) << (b * dim);
  return out;
}

template <typename F>
double median_ms(std::size_t reps, F&& f) {
  std::vector<double> t;
  for (std::size_t r = 0; r < reps; ++r) {
    const auto a = std::chrono::steady_clock::now();
    f();
    const auto b = std::chrono::steady_clock::now();
    t.push_back(std::chrono::duration<double, std::milli>(b - a).count());
  }
  std::sort(t.begin(), t.end());
  return t.size() % 2 ? t[t.size() / 2] : 0.5 * (t[t.size() / 2 - 1] + t[t.size() / 2]);
}

}  // namespace

MemoryEstimate estimate_memory(std::size_t n, std::size_t in_channels, std::size_t out_channels, std::size_t k,
                               std::size_t dim, std::size_t scalar_bytes, std::size_t index_bytes) {
  require(n > 0, ErrorKind::ConfigInvalid, "memory estimate needs n > 0");
  MemoryEstimate m;
  m.input_bytes = n * (in_channels + dim) * scalar_bytes;
  m.output_bytes = n * out_channels * scalar_bytes;
  m.param_bytes = param_count(in_channels, out_channels, dim) * scalar_bytes;
  m.neighbor_bytes = n * k * index_bytes;
  m.total_bytes = m.input_bytes + m.output_bytes + m.param_bytes + m.neighbor_bytes;
  return m;
}

Matrix bench_locations(std::size_t n, std::size_t dim, Rng& rng) {
  Matrix raw(n, dim);
  for (double& v : raw.data()) v = rng.uniform();
  const std::size_t bits = std::min<std::size_t>(21, 63 / dim);
  const double cells = static_cast<double>(std::uint64_t{1} << bits);
  std::vector<std::pair<std::uint64_t, Index>> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t code = 0;
    for (std::size_t t = 0; t < dim; ++t) {
      const auto cell = static_cast<std::uint64_t>(std::min(cells - 1.0, raw(i, t) * cells));
      code |= spread_bits(cell, dim) << t;
    }
    keys[i] = {code, static_cast<Index>(i)};
  }
  std::sort(keys.begin(), keys.end());
  Matrix out(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    const auto src = raw.row(static_cast<std::size_t>(keys[i].second));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

std::vector<BenchRow> bench_scaling(const BenchConfig& config) {
  require(!config.sizes.empty(), ErrorKind::ConfigInvalid, "benchmark needs at least one size");
  require(config.k >= 1 && config.channels >= 1 && config.dim >= 1 && config.reps >= 1, ErrorKind::ConfigInvalid,
          "benchmark k, channels, dim and reps must be >= 1");
  for (std::size_t n : config.sizes)
    if (n < config.k) fail(ErrorKind::ConfigInvalid, "benchmark size " + std::to_string(n) + " is smaller than k");

  const std::size_t C = config.channels;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Rng rng(config.seed);
  FlexConvParams params(FlexConvShape{C, C, config.dim});
  for (double& v : params.theta_data()) v = rng.uniform(-0.1, 0.1);
  for (double& v : params.theta_b_data()) v = rng.uniform(-0.1, 0.1);

  std::vector<BenchRow> rows;
  for (std::size_t n : config.sizes) {
    Rng data_rng = rng.derive(n);
    const Matrix loc = bench_locations(n, config.dim, data_rng);
    Matrix feat(n, C);
    for (double& v : feat.data()) v = data_rng.uniform(-1.0, 1.0);
    const NeighborIndex nb = compute_neighbors(loc, config.k);

    BenchRow row;
    row.n = n;
    row.k = config.k;
    row.channels = C;
    row.threads = num_threads();
    Matrix out;
    row.forward_ms = median_ms(config.reps, [&] { out = flex_conv_forward(feat, loc, nb, params); });
    if (config.backward) {
      const ReverseIndex rev = build_reverse_index(nb);
      row.backward_ms = median_ms(config.reps, [&] {
        GradBundle g = flex_conv_backward(out, feat, loc, nb, params, BackwardOptions{}, &rev);
        (void)g;
      });
    } else {
      row.backward_ms = nan;
    }
    row.naive_forward_ms = n <= config.naive_max_n
                               ? median_ms(config.reps, [&] { out = flex_conv_forward_naive(feat, loc, nb, params); })
                               : nan;
    row.memory_bytes = estimate_memory(n, C, C, config.k, config.dim, sizeof(double)).total_bytes;
    rows.push_back(row);
  }
  return rows;
}

void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows) {
  auto ms = [](double v) { return std::isnan(v) ? std::string() : format_real(v); };
  out << kBenchCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.n << ',' << r.k << ',' << r.channels << ',' << r.threads << ',' << ms(r.forward_ms) << ','
        << ms(r.backward_ms) << ',' << ms(r.naive_forward_ms) << ',' << r.memory_bytes << '\n';
  }
}

}  // namespace flexconv
