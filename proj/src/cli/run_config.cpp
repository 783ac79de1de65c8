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

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>
#include <string>
#include <variant>

#include "flexconv/cli.hpp"
#include "flexconv/core/cloud_io.hpp"
#include "flexconv/harness.hpp"

namespace flexconv {

namespace {

static_assert(std::is_same_v<std::size_t, std::uint64_t>, "seed is stored through the size_t field path");
using FieldPtr = std::variant<std::string RunConfig::*, std::size_t RunConfig::*, double RunConfig::*,
                              bool RunConfig::*, std::vector<std::size_t> RunConfig::*>;

struct Field {
  const char* key;
  FieldPtr ptr;
};

// Schema order is the echo order.
const std::vector<Field>& schema() {
  static const std::vector<Field> fields = {
      {"task", &RunConfig::task},
      {"n_points", &RunConfig::n_points},
      {"n_scenes", &RunConfig::n_scenes},
      {"classes", &RunConfig::classes},
      {"image_size", &RunConfig::image_size},
      {"images", &RunConfig::images},
      {"holdout", &RunConfig::holdout},
      {"dim", &RunConfig::dim},
      {"stages", &RunConfig::stages},
      {"base_channels", &RunConfig::base_channels},
      {"k", &RunConfig::k},
      {"factor", &RunConfig::factor},
      {"attach", &RunConfig::attach},
      {"location_scale", &RunConfig::location_scale},
      {"lr", &RunConfig::lr},
      {"steps", &RunConfig::steps},
      {"epochs", &RunConfig::epochs},
      {"batch", &RunConfig::batch},
      {"cosine", &RunConfig::cosine},
      {"clip_norm", &RunConfig::clip_norm},
      {"seed", &RunConfig::seed},
      {"threads", &RunConfig::threads},
      {"dataset", &RunConfig::dataset},
      {"checkpoint", &RunConfig::checkpoint},
      {"input", &RunConfig::input},
      {"output_dir", &RunConfig::output_dir},
      {"bench_sizes", &RunConfig::bench_sizes},
      {"bench_k", &RunConfig::bench_k},
      {"bench_channels", &RunConfig::bench_channels},
      {"bench_reps", &RunConfig::bench_reps},
      {"bench_naive_max_n", &RunConfig::bench_naive_max_n},
  };
  return fields;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty())
    fail(ErrorKind::ConfigInvalid, "bad value '" + text + "' for key '" + key + "'");
  return v;
}

void assign(RunConfig& c, const Field& f, const std::string& value) {
  std::visit(
      [&](auto ptr) {
        using T = std::remove_reference_t<decltype(c.*ptr)>;
        if constexpr (std::is_same_v<T, std::string>) {
          c.*ptr = value;
        } else if constexpr (std::is_same_v<T, bool>) {
          if (value == "true")
            c.*ptr = true;
          else if (value == "false")
            c.*ptr = false;
          else
            fail(ErrorKind::ConfigInvalid, "key '" + std::string(f.key) + "' expects true or false");
        } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
          std::vector<std::size_t> list;
          std::stringstream ss(value);
          std::string item;
          while (std::getline(ss, item, ',')) list.push_back(parse_number<std::size_t>(f.key, trim(item)));
          c.*ptr = std::move(list);
        } else {
          c.*ptr = parse_number<T>(f.key, value);
        }
      },
      f.ptr);
}

std::string render(const RunConfig& c, const Field& f) {
  return std::visit(
      [&](auto ptr) -> std::string {
        using T = std::remove_cvref_t<decltype(c.*ptr)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return c.*ptr;
        } else if constexpr (std::is_same_v<T, bool>) {
          return c.*ptr ? "true" : "false";
        } else if constexpr (std::is_same_v<T, double>) {
          return format_real(c.*ptr);
        } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
          std::string s;
          for (std::size_t i = 0; i < (c.*ptr).size(); ++i) s += (i ? "," : "") + std::to_string((c.*ptr)[i]);
          return s;
        } else {
          return std::to_string(c.*ptr);
        }
      },
      f.ptr);
}

}  // namespace

RunConfig parse_run_config(std::istream& in) {
  RunConfig c;
  std::vector<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::ConfigInvalid, "line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    const Field* field = nullptr;
    for (const auto& f : schema())
      if (key == f.key) field = &f;
    if (field == nullptr)
      fail(ErrorKind::ConfigInvalid, "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    for (const auto& s : seen)
      if (s == key) fail(ErrorKind::ConfigInvalid, "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    seen.push_back(key);
    assign(c, *field, value);
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorKind::IoFailure, "cannot open config " + path.string());
  return parse_run_config(f);
}

std::string format_run_config(const RunConfig& c) {
  std::string out;
  for (const auto& f : schema()) out += std::string(f.key) + " = " + render(c, f) + "\n";
  return out;
}

void validate_run_config(const RunConfig& c) {
  const ToyKind kind = parse_toy_kind(c.task);
  auto check = [](bool ok, const std::string& why) {
    if (!ok) fail(ErrorKind::ConfigInvalid, why);
  };
  check(c.attach == "raw" || c.attach == "normalized", "attach must be raw or normalized");
  check(c.location_scale > 0.0 && std::isfinite(c.location_scale), "location_scale must be positive");
  check(c.clip_norm >= 0.0 && std::isfinite(c.clip_norm), "clip_norm must be >= 0");
  check(c.lr > 0.0 && std::isfinite(c.lr), "lr must be positive");
  check(c.holdout >= 0.0 && c.holdout < 1.0, "holdout must lie in [0, 1)");
  check(c.n_scenes >= 1, "n_scenes must be >= 1");
  check(c.batch >= 1, "batch must be >= 1");
  check(c.threads >= 1, "threads must be >= 1");
  check(c.images >= 1 && c.image_size >= 3, "image tasks need images >= 1 and image_size >= 3");
  check(!c.output_dir.empty(), "output_dir must not be empty");
  check(c.bench_reps >= 1 && c.bench_k >= 1 && c.bench_channels >= 1, "bench_reps, bench_k, bench_channels >= 1");
  if (kind == ToyKind::SyntheticShapesSeg || kind == ToyKind::TwoClassClouds) {
    check(c.dim == 3, "cloud tasks are 3-D");
    check(kind != ToyKind::TwoClassClouds || c.classes == 2, "TwoClassClouds has 2 classes");
  }
}

NetworkConfig network_config(const RunConfig& c) {
  NetworkConfig n;
  n.kind = parse_toy_kind(c.task) == ToyKind::TwoClassClouds ? NetworkKind::Classification : NetworkKind::Segmentation;
  n.dim = c.dim;
  n.input_features = 1;
  n.classes = c.classes;
  n.stages = c.stages;
  n.base_channels = c.base_channels;
  n.k = c.k;
  n.factor = c.factor;
  n.attach = c.attach == "normalized" ? AttachMode::Normalized : AttachMode::Raw;
  return n;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::IoFailure:
      return 3;
    case ErrorKind::NonFinite:
      return 4;
    default:
      return 2;
  }
}

}  // namespace flexconv
