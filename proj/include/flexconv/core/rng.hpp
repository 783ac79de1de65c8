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

#include <cstdint>
#include <limits>

namespace flexconv {

/// Counter-based generator: draw number t is a pure function of (seed, t), so
/// a sequence never depends on how work is split across threads. Parallel
/// consumers take a derived stream and index it with draw_at().
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) noexcept : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept { return draw_at(counter_++); }
  result_type operator()() noexcept { return next_u64(); }
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  /// Uniform in the open interval (0, 1).
  double uniform() noexcept { return to_open_unit(next_u64()); }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Standard exponential variate.
  double exponential() noexcept;
  /// Standard normal variate (Box-Muller, one value per call).
  double normal() noexcept;
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) noexcept;

  /// Stateless access to the t-th draw of this stream.
  std::uint64_t draw_at(std::uint64_t t) const noexcept;
  double uniform_at(std::uint64_t t) const noexcept { return to_open_unit(draw_at(t)); }

  /// Independent stream keyed by `stream`; does not advance this generator.
  Rng derive(std::uint64_t stream) const noexcept;
  /// Fresh stream seeded from the next draw; advances this generator by one.
  Rng split() noexcept { return Rng(next_u64()); }

  static double to_open_unit(std::uint64_t bits) noexcept {
    // 53 random bits, shifted off zero by half an ulp.
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace flexconv
