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
#include <filesystem>
#include <vector>

#include "flexconv/core/point_cloud.hpp"
#include "flexconv/core/rng.hpp"
#include "flexconv/neighborhood.hpp"

namespace flexconv {

/// Inverse-density proxy: phi[i] is the sum of distances from point i to the
/// members of its neighbor row. Sparse regions get large values.
struct DensityEstimate {
  std::vector<double> phi;
};

/// Indices into a parent level, strictly increasing.
struct SelectionMap {
  std::vector<Index> selected;

  std::size_t size() const noexcept { return selected.size(); }
  friend bool operator==(const SelectionMap&, const SelectionMap&) = default;
};

enum class SamplingMode { Idiss, Random };

struct HierarchyLevel {
  PointCloud cloud;
  NeighborIndex neighbors;
  SelectionMap selection;  // into the previous level; empty for level 0
};

/// Level 0 is the input. Level t keeps ceil(n / factor^t) points picked from
/// level t-1, each level with its own kNN table.
struct ResolutionHierarchy {
  std::vector<HierarchyLevel> levels;

  std::size_t depth() const noexcept { return levels.empty() ? 0 : levels.size() - 1; }
};

DensityEstimate inverse_density(const Matrix& locations, const NeighborIndex& neighbors);

/// m distinct indices without replacement, the first draw landing on i with
/// probability phi[i] / sum(phi). Uses exponential-race keys E_i / phi[i]
/// and keeps the m smallest. Points with phi = 0 rank after all others in
/// uniform order; if every phi is zero the draw is uniform and a warning is
/// logged.
SelectionMap idiss_sample(const DensityEstimate& density, std::size_t m, Rng& rng);

/// Uniform draw of m of n indices without replacement.
SelectionMap random_sample(std::size_t n, std::size_t m, Rng& rng);

ResolutionHierarchy build_hierarchy(const PointCloud& cloud, std::size_t k, std::size_t factor, std::size_t depth,
                                    Rng& rng, SamplingMode mode = SamplingMode::Idiss);

/// Writes level<t>.flexcloud, level<t>.flexknn and manifest.json into dir.
void save_hierarchy(const std::filesystem::path& dir, const ResolutionHierarchy& hierarchy);
ResolutionHierarchy load_hierarchy(const std::filesystem::path& dir);

/// Mean distance from each point to its nearest other point; used to compare
/// sampling schemes by spatial coverage.
double mean_nearest_spacing(const Matrix& locations);

}  // namespace flexconv
