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
#include <string>

#include "flexconv/core/error.hpp"
#include "flexconv/harness.hpp"

namespace flexconv {

DenseConvOracle::DenseConvOracle(std::size_t kh_, std::size_t kw_, std::size_t in, std::size_t out)
    : kh(kh_), kw(kw_), in_channels(in), out_channels(out), kernel(kh_ * kw_ * in * out, 0.0) {}

DenseImage dense_conv2d(const DenseImage& img, const DenseConvOracle& k) {
  require(k.kh % 2 == 1 && k.kw % 2 == 1, ErrorKind::ShapeMismatch, "kernel dimensions must be odd");
  require(k.in_channels > 0 && k.out_channels > 0 && k.kernel.size() == k.kh * k.kw * k.in_channels * k.out_channels,
          ErrorKind::ShapeMismatch, "kernel tensor size does not match its declared shape");
  if (img.channels() != k.in_channels)
    fail(ErrorKind::ShapeMismatch,
         "image has " + std::to_string(img.channels()) + " channels, kernel expects " + std::to_string(k.in_channels));
  require(img.height() >= k.kh && img.width() >= k.kw, ErrorKind::ShapeMismatch, "image is smaller than the kernel");
  for (double v : k.kernel) require(std::isfinite(v), ErrorKind::NonFinite, "non-finite kernel entry");

  const std::size_t rh = k.kh / 2, rw = k.kw / 2;
  const std::size_t oh = img.height() - k.kh + 1, ow = img.width() - k.kw + 1;
  DenseImage out(oh, ow, k.out_channels);
  for (std::size_t r = 0; r < oh; ++r) {
    for (std::size_t c = 0; c < ow; ++c) {
      const std::size_t pr = r + rh, pc = c + rw;  // center pixel in the input
      for (std::size_t a = 0; a < k.kh; ++a) {
        for (std::size_t b = 0; b < k.kw; ++b) {
          // tau = (a - rh, b - rw); the read pixel is p - tau.
          const std::size_t qr = pr + rh - a, qc = pc + rw - b;
          for (std::size_t ci = 0; ci < k.in_channels; ++ci) {
            const double x = img.at(qr, qc, ci);
            for (std::size_t o = 0; o < k.out_channels; ++o) out.at(r, c, o) += k.at(a, b, ci, o) * x;
          }
        }
      }
    }
  }
  return out;
}

DenseConvOracle kernel_from_flex(std::array<double, 2> theta, double theta_b) {
  DenseConvOracle k(3, 3, 1, 1);
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) {
      const double t0 = static_cast<double>(a) - 1.0, t1 = static_cast<double>(b) - 1.0;
      k.at(a, b, 0, 0) = theta[0] * t0 + theta[1] * t1 + theta_b;
    }
  }
  return k;
}

}  // namespace flexconv
