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
#include <numbers>
#include <string>

#include "flexconv/core/error.hpp"
#include "flexconv/harness.hpp"

namespace flexconv {

namespace {

using Vec3 = std::array<double, 3>;

constexpr double kFloorHalf = 1.0;

double box_face_distance(const Vec3& q, const Vec3& h, int axis, double sign) {
  // Distance from q (box-local) to the face {x_axis = sign * h_axis} clipped
  // to the face rectangle.
  double s = 0.0;
  for (int t = 0; t < 3; ++t) {
    double diff;
    if (t == axis) {
      diff = q[static_cast<std::size_t>(t)] - sign * h[static_cast<std::size_t>(t)];
    } else {
      const double v = std::abs(q[static_cast<std::size_t>(t)]);
      diff = v > h[static_cast<std::size_t>(t)] ? v - h[static_cast<std::size_t>(t)] : 0.0;
    }
    s += diff * diff;
  }
  return std::sqrt(s);
}

double plane_area(const Primitive& p) {
  double a = 1.0;
  for (int t = 0; t < 3; ++t)
    if (t != p.normal_axis) a *= 2.0 * p.half[static_cast<std::size_t>(t)];
  return a;
}

double surface_area(const Primitive& p) {
  switch (p.kind) {
    case PrimitiveKind::Plane:
      return plane_area(p);
    case PrimitiveKind::Sphere:
      return 4.0 * std::numbers::pi * p.radius * p.radius;
    case PrimitiveKind::Box: {
      const auto& h = p.half;
      return 4.0 * h[0] * h[1] + 8.0 * h[2] * (h[0] + h[1]);  // top + four sides
    }
  }
  return 0.0;
}

Vec3 sample_surface(const Primitive& p, Rng& rng) {
  Vec3 x = p.center;
  switch (p.kind) {
    case PrimitiveKind::Plane:
      for (int t = 0; t < 3; ++t)
        if (t != p.normal_axis)
          x[static_cast<std::size_t>(t)] += rng.uniform(-1.0, 1.0) * p.half[static_cast<std::size_t>(t)];
      break;
    case PrimitiveKind::Sphere: {
      Vec3 g{rng.normal(), rng.normal(), rng.normal()};
      const double len = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
      for (std::size_t t = 0; t < 3; ++t) x[t] += p.radius * g[t] / len;
      break;
    }
    case PrimitiveKind::Box: {
      const auto& h = p.half;
      // Faces: top (+z), +-x, +-y; chosen by area.
      const double a_top = 4.0 * h[0] * h[1], a_x = 4.0 * h[1] * h[2], a_y = 4.0 * h[0] * h[2];
      const double u = rng.uniform() * (a_top + 2.0 * a_x + 2.0 * a_y);
      const double s0 = rng.uniform(-1.0, 1.0), s1 = rng.uniform(-1.0, 1.0);
      if (u < a_top) {
        x[0] += s0 * h[0];
        x[1] += s1 * h[1];
        x[2] += h[2];
      } else if (u < a_top + 2.0 * a_x) {
        x[0] += (u < a_top + a_x ? 1.0 : -1.0) * h[0];
        x[1] += s0 * h[1];
        x[2] += s1 * h[2];
      } else {
        x[1] += (u < a_top + 2.0 * a_x + a_y ? 1.0 : -1.0) * h[1];
        x[0] += s0 * h[0];
        x[2] += s1 * h[2];
      }
      break;
    }
  }
  return x;
}

// Footprint radius on the floor used to keep objects apart.
double footprint(const Primitive& p) {
  return p.kind == PrimitiveKind::Sphere ? p.radius : std::hypot(p.half[0], p.half[1]);
}

bool place(Primitive& p, const std::vector<Primitive>& placed, Rng& rng) {
  const double r = footprint(p);
  for (int attempt = 0; attempt < 200; ++attempt) {
    const double cx = rng.uniform(-kFloorHalf + r, kFloorHalf - r);
    const double cy = rng.uniform(-kFloorHalf + r, kFloorHalf - r);
    bool ok = true;
    for (const auto& q : placed) {
      if (q.kind == PrimitiveKind::Plane) continue;
      if (std::hypot(cx - q.center[0], cy - q.center[1]) < r + footprint(q) + 0.05) {
        ok = false;
        break;
      }
    }
    if (ok) {
      p.center[0] = cx;
      p.center[1] = cy;
      return true;
    }
  }
  return false;
}

int class_of(PrimitiveKind kind) { return static_cast<int>(kind); }

}  // namespace

double distance_to_primitive(std::span<const double> x, const Primitive& p) {
  require(x.size() == 3, ErrorKind::ShapeMismatch, "primitives live in 3-D");
  Vec3 q{x[0] - p.center[0], x[1] - p.center[1], x[2] - p.center[2]};
  switch (p.kind) {
    case PrimitiveKind::Plane: {
      double s = 0.0;
      for (int t = 0; t < 3; ++t) {
        const auto ut = static_cast<std::size_t>(t);
        double diff = t == p.normal_axis ? q[ut] : std::max(0.0, std::abs(q[ut]) - p.half[ut]);
        s += diff * diff;
      }
      return std::sqrt(s);
    }
    case PrimitiveKind::Sphere:
      return std::abs(std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2]) - p.radius);
    case PrimitiveKind::Box: {
      double best = box_face_distance(q, p.half, 2, 1.0);
      for (int axis = 0; axis < 2; ++axis)
        for (double sign : {-1.0, 1.0}) best = std::min(best, box_face_distance(q, p.half, axis, sign));
      return best;
    }
  }
  return 0.0;
}

std::vector<SegScene> gen_synthetic_seg(const SegGenConfig& config, Rng& rng) {
  require(config.n_scenes >= 1, ErrorKind::ConfigInvalid, "n_scenes must be >= 1");
  require(config.classes == 2 || config.classes == 3, ErrorKind::ConfigInvalid, "synthetic scenes have 2 or 3 classes");
  require(config.n_points >= 8 * config.classes, ErrorKind::ConfigInvalid, "too few points per scene");

  std::vector<SegScene> scenes;
  scenes.reserve(config.n_scenes);
  for (std::size_t s = 0; s < config.n_scenes; ++s) {
    Rng srng = rng.split();
    std::vector<Primitive> prims;
    Primitive floor;
    floor.kind = PrimitiveKind::Plane;
    floor.half = {kFloorHalf, kFloorHalf, 0.0};
    floor.normal_axis = 2;
    prims.push_back(floor);

    const std::size_t spheres = 1 + srng.below(2);
    const std::size_t boxes = config.classes == 3 ? 1 + srng.below(2) : 0;
    // The wall fills scenes up to three primitives and is optional otherwise.
    const bool wall = 1 + spheres + boxes < 3 || (srng.uniform() < 0.5 && 1 + spheres + boxes < 5);
    if (wall) {
      Primitive w;
      w.kind = PrimitiveKind::Plane;
      w.center = {-kFloorHalf, 0.0, 0.5};
      w.half = {0.0, kFloorHalf, 0.5};
      w.normal_axis = 0;
      prims.push_back(w);
    }
    for (std::size_t i = 0; i < spheres + boxes; ++i) {
      Primitive p;
      if (i < spheres) {
        p.kind = PrimitiveKind::Sphere;
        p.radius = srng.uniform(0.15, 0.3);
        p.center[2] = p.radius;
      } else {
        p.kind = PrimitiveKind::Box;
        p.half = {srng.uniform(0.1, 0.25), srng.uniform(0.1, 0.25), srng.uniform(0.1, 0.25)};
        p.center[2] = p.half[2];
      }
      if (!place(p, prims, srng)) continue;
      prims.push_back(p);
    }

    // Even split over classes, area-weighted within a class.
    std::vector<std::vector<std::size_t>> by_class(config.classes);
    for (std::size_t i = 0; i < prims.size(); ++i)
      by_class[static_cast<std::size_t>(class_of(prims[i].kind))].push_back(i);
    for (std::size_t c = 0; c < config.classes; ++c)
      if (by_class[c].empty()) fail(ErrorKind::ConfigInvalid, "could not place every primitive class");

    Matrix loc(config.n_points, 3);
    std::vector<int> labels(config.n_points);
    std::vector<int> owner(config.n_points);
    std::size_t row = 0;
    for (std::size_t c = 0; c < config.classes; ++c) {
      const std::size_t quota = config.n_points / config.classes + (c < config.n_points % config.classes ? 1 : 0);
      double total = 0.0;
      for (std::size_t i : by_class[c]) total += surface_area(prims[i]);
      for (std::size_t q = 0; q < quota; ++q) {
        double u = srng.uniform() * total;
        std::size_t pick = by_class[c].back();
        for (std::size_t i : by_class[c]) {
          if (u < surface_area(prims[i])) {
            pick = i;
            break;
          }
          u -= surface_area(prims[i]);
        }
        const Vec3 x = sample_surface(prims[pick], srng);
        for (std::size_t t = 0; t < 3; ++t) loc(row, t) = x[t];
        labels[row] = static_cast<int>(c);
        owner[row] = static_cast<int>(pick);
        ++row;
      }
    }
    // Interleave classes so point order carries no label information.
    std::vector<std::size_t> perm(config.n_points);
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[srng.below(i)]);
    Matrix sloc(config.n_points, 3);
    std::vector<int> slabels(config.n_points), sowner(config.n_points);
    for (std::size_t i = 0; i < perm.size(); ++i) {
      for (std::size_t t = 0; t < 3; ++t) sloc(i, t) = loc(perm[i], t);
      slabels[i] = labels[perm[i]];
      sowner[i] = owner[perm[i]];
    }
    SegScene scene{LabeledCloud{PointCloud(std::move(sloc), Matrix(config.n_points, 1, 1.0)), std::move(slabels)},
                   std::move(prims), std::move(sowner)};
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

std::vector<ClassSample> gen_two_class_clouds(std::size_t n_points, std::size_t n_clouds, Rng& rng) {
  require(n_points >= 8, ErrorKind::ConfigInvalid, "too few points per cloud");
  require(n_clouds >= 1, ErrorKind::ConfigInvalid, "n_clouds must be >= 1");
  std::vector<ClassSample> out;
  out.reserve(n_clouds);
  for (std::size_t s = 0; s < n_clouds; ++s) {
    Rng srng = rng.split();
    const int label = static_cast<int>(s % 2);
    Primitive p;
    const double scale = srng.uniform(0.6, 1.0);
    p.center = {srng.uniform(-0.1, 0.1), srng.uniform(-0.1, 0.1), srng.uniform(-0.1, 0.1)};
    if (label == 0) {
      p.kind = PrimitiveKind::Sphere;
      p.radius = scale;
    } else {
      p.kind = PrimitiveKind::Box;
      p.half = {scale * 0.8, scale * 0.8, scale * 0.8};
    }
    Matrix loc(n_points, 3);
    for (std::size_t i = 0; i < n_points; ++i) {
      Vec3 x = sample_surface(p, srng);
      if (p.kind == PrimitiveKind::Box && srng.uniform() < 1.0 / 6.0) x[2] = p.center[2] - p.half[2];  // closed cube
      for (std::size_t t = 0; t < 3; ++t) loc(i, t) = x[t];
    }
    out.push_back({PointCloud(std::move(loc), Matrix(n_points, 1, 1.0)), label});
  }
  return out;
}

}  // namespace flexconv
