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

#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>

#include "flexconv/core/point_cloud.hpp"

namespace flexconv {

// ASCII point-cloud files.
//
//   flexcloud v1 <n> <d> <C>
//   <d location reals> <C feature reals>          (n lines)
//
//   flexcloud-labeled v1 <n> <d> <C>
//   <d location reals> <C feature reals> <label>  (n lines)
//
// Reals are written in shortest round-trip form, so parse(write(x)) == x
// bitwise. A header with n = 0 parses but loading it as a cloud raises
// EmptyInput.

void write_cloud(std::ostream& out, const PointCloud& cloud);
void write_labeled_cloud(std::ostream& out, const LabeledCloud& cloud);

/// Either variant, decided by the header tag.
std::variant<PointCloud, LabeledCloud> read_any_cloud(std::istream& in);
PointCloud read_cloud(std::istream& in);
LabeledCloud read_labeled_cloud(std::istream& in);

void save_cloud(const std::filesystem::path& path, const PointCloud& cloud);
void save_labeled_cloud(const std::filesystem::path& path, const LabeledCloud& cloud);
std::variant<PointCloud, LabeledCloud> load_any_cloud(const std::filesystem::path& path);
PointCloud load_cloud(const std::filesystem::path& path);
LabeledCloud load_labeled_cloud(const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_real(double value);

}  // namespace flexconv
