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

#include <fstream>
#include <json.hpp>
#include <string>

#include "flexconv/core/cloud_io.hpp"
#include "flexconv/core/error.hpp"
#include "flexconv/sampling.hpp"

namespace flexconv {

namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

std::string level_stem(std::size_t t) { return "level" + std::to_string(t); }

}  // namespace

ResolutionHierarchy build_hierarchy(const PointCloud& cloud, std::size_t k, std::size_t factor, std::size_t depth,
                                    Rng& rng, SamplingMode mode) {
  require(factor >= 2, ErrorKind::ConfigInvalid, "subsampling factor must be >= 2");
  require(depth >= 1, ErrorKind::ConfigInvalid, "hierarchy depth must be >= 1");
  require(k >= 1, ErrorKind::ConfigInvalid, "neighborhood size k must be >= 1");
  std::size_t coarsest = cloud.size();
  for (std::size_t t = 0; t < depth; ++t) {
    if (coarsest < factor)
      fail(ErrorKind::ConfigInvalid, std::to_string(cloud.size()) + " points are too few for depth " +
                                         std::to_string(depth) + " at factor " + std::to_string(factor));
    coarsest = ceil_div(coarsest, factor);
  }
  if (coarsest < k)
    fail(ErrorKind::ConfigInvalid,
         "coarsest level has " + std::to_string(coarsest) + " points, fewer than k = " + std::to_string(k));

  ResolutionHierarchy h;
  h.levels.reserve(depth + 1);
  h.levels.push_back(HierarchyLevel{cloud, compute_neighbors(cloud.locations(), k), SelectionMap{}});
  for (std::size_t t = 1; t <= depth; ++t) {
    const HierarchyLevel& parent = h.levels.back();
    const std::size_t m = ceil_div(parent.cloud.size(), factor);
    SelectionMap selection = mode == SamplingMode::Idiss
                                 ? idiss_sample(inverse_density(parent.cloud.locations(), parent.neighbors), m, rng)
                                 : random_sample(parent.cloud.size(), m, rng);
    PointCloud coarse(gather_rows(parent.cloud.locations(), selection.selected),
                      gather_rows(parent.cloud.features(), selection.selected));
    NeighborIndex neighbors = compute_neighbors(coarse.locations(), k);
    h.levels.push_back(HierarchyLevel{std::move(coarse), std::move(neighbors), std::move(selection)});
  }
  return h;
}

// manifest.json:
// {
//   "format": "flexhierarchy v1",
//   "levels": [ {"size": n_t, "k": k, "cloud": "level<t>.flexcloud",
//                "neighbors": "level<t>.flexknn", "selection": [indices into level t-1]} ]
// }
void save_hierarchy(const std::filesystem::path& dir, const ResolutionHierarchy& hierarchy) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::IoFailure, "cannot create '" + dir.string() + "'");
  nlohmann::json manifest;
  manifest["format"] = "flexhierarchy v1";
  manifest["levels"] = nlohmann::json::array();
  for (std::size_t t = 0; t < hierarchy.levels.size(); ++t) {
    const auto& level = hierarchy.levels[t];
    const std::string stem = level_stem(t);
    save_cloud(dir / (stem + ".flexcloud"), level.cloud);
    save_neighbors(dir / (stem + ".flexknn"), level.neighbors);
    manifest["levels"].push_back({{"size", level.cloud.size()},
                                  {"k", level.neighbors.k()},
                                  {"cloud", stem + ".flexcloud"},
                                  {"neighbors", stem + ".flexknn"},
                                  {"selection", level.selection.selected}});
  }
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) fail(ErrorKind::IoFailure, "cannot write manifest in '" + dir.string() + "'");
  out << manifest.dump(2) << '\n';
}

ResolutionHierarchy load_hierarchy(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) fail(ErrorKind::IoFailure, "cannot open manifest in '" + dir.string() + "'");
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ConfigInvalid, std::string("malformed hierarchy manifest: ") + e.what());
  }
  require(manifest.value("format", "") == "flexhierarchy v1", ErrorKind::ConfigInvalid,
          "unsupported hierarchy manifest format");
  ResolutionHierarchy h;
  try {
    for (const auto& entry : manifest.at("levels")) {
      PointCloud cloud = load_cloud(dir / entry.at("cloud").get<std::string>());
      NeighborIndex neighbors = load_neighbors(dir / entry.at("neighbors").get<std::string>());
      SelectionMap selection{entry.at("selection").get<std::vector<Index>>()};
      require(cloud.size() == entry.at("size").get<std::size_t>(), ErrorKind::ConfigInvalid,
              "manifest size disagrees with level file");
      check_neighbor_range(neighbors, cloud.size());
      if (!h.levels.empty()) {
        require(selection.size() == cloud.size(), ErrorKind::ConfigInvalid, "selection size disagrees with level size");
        for (Index s : selection.selected)
          require(s >= 0 && static_cast<std::size_t>(s) < h.levels.back().cloud.size(), ErrorKind::IndexOutOfRange,
                  "selection index outside parent level");
      }
      h.levels.push_back(HierarchyLevel{std::move(cloud), std::move(neighbors), std::move(selection)});
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ConfigInvalid, std::string("malformed hierarchy manifest: ") + e.what());
  }
  require(!h.levels.empty(), ErrorKind::ConfigInvalid, "hierarchy manifest lists no levels");
  return h;
}

}  // namespace flexconv
