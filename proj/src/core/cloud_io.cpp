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

#include "flexconv/core/cloud_io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "flexconv/core/error.hpp"

namespace flexconv {

namespace {

constexpr std::string_view kPlainTag = "flexcloud";
constexpr std::string_view kLabeledTag = "flexcloud-labeled";
constexpr std::string_view kVersion = "v1";

struct Header {
  bool labeled = false;
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t c = 0;
};

template <typename T>
bool parse_number(std::string_view token, T& value) {
  const char* begin = token.data();
  const char* end = begin + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) tokens.push_back(line.substr(start, i - start));
  }
  return tokens;
}

Header read_header(std::istream& in) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::ConfigInvalid, "missing flexcloud header");
  const auto tokens = split_ws(line);
  if (tokens.size() != 5) fail(ErrorKind::ConfigInvalid, "malformed flexcloud header: '" + line + "'");
  Header h;
  if (tokens[0] == kLabeledTag) {
    h.labeled = true;
  } else {
    if (tokens[0] != kPlainTag)
      fail(ErrorKind::ConfigInvalid, "unknown cloud format tag '" + std::string(tokens[0]) + "'");
  }
  if (tokens[1] != kVersion)
    fail(ErrorKind::ConfigInvalid, "unsupported cloud format version '" + std::string(tokens[1]) + "'");
  if (!(parse_number(tokens[2], h.n) && parse_number(tokens[3], h.d) && parse_number(tokens[4], h.c)))
    fail(ErrorKind::ConfigInvalid, "malformed flexcloud header sizes: '" + line + "'");
  require(h.d >= 1 && h.c >= 1, ErrorKind::ConfigInvalid, "flexcloud header needs d >= 1 and C >= 1");
  return h;
}

std::variant<PointCloud, LabeledCloud> read_body(std::istream& in, const Header& h) {
  require(h.n >= 1, ErrorKind::EmptyInput, "cloud file declares zero points");
  Matrix locations(h.n, h.d);
  Matrix features(h.n, h.c);
  std::vector<int> labels;
  if (h.labeled) labels.resize(h.n);
  const std::size_t expected = h.d + h.c + (h.labeled ? 1 : 0);
  std::string line;
  for (std::size_t i = 0; i < h.n; ++i) {
    if (!std::getline(in, line)) fail(ErrorKind::ConfigInvalid, "cloud file truncated at point " + std::to_string(i));
    const auto tokens = split_ws(line);
    if (tokens.size() != expected)
      fail(ErrorKind::ConfigInvalid, "point " + std::to_string(i) + " has " + std::to_string(tokens.size()) +
                                         " fields, expected " + std::to_string(expected));
    for (std::size_t t = 0; t < h.d + h.c; ++t) {
      double v = 0.0;
      if (!parse_number(tokens[t], v))
        fail(ErrorKind::ConfigInvalid, "bad real '" + std::string(tokens[t]) + "' at point " + std::to_string(i));
      if (t < h.d)
        locations(i, t) = v;
      else
        features(i, t - h.d) = v;
    }
    if (h.labeled) {
      if (!parse_number(tokens.back(), labels[i]))
        fail(ErrorKind::ConfigInvalid, "bad label '" + std::string(tokens.back()) + "' at point " + std::to_string(i));
    }
  }
  PointCloud cloud(std::move(locations), std::move(features));
  if (h.labeled) return LabeledCloud{std::move(cloud), std::move(labels)};
  return cloud;
}

void write_rows(std::ostream& out, const PointCloud& cloud, const std::vector<int>* labels) {
  std::string line;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    line.clear();
    for (double v : cloud.locations().row(i)) {
      if (!line.empty()) line += ' ';
      line += format_real(v);
    }
    for (double v : cloud.features().row(i)) {
      line += ' ';
      line += format_real(v);
    }
    if (labels != nullptr) {
      line += ' ';
      line += std::to_string((*labels)[i]);
    }
    line += '\n';
    out << line;
  }
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoFailure, "cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::IoFailure, "cannot open '" + path.string() + "' for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) fail(ErrorKind::IoFailure, "write to '" + path.string() + "' failed");
}

}  // namespace

std::string format_real(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  require(ec == std::errc(), ErrorKind::IoFailure, "cannot format real");
  return std::string(buf.data(), ptr);
}

void write_cloud(std::ostream& out, const PointCloud& cloud) {
  out << kPlainTag << ' ' << kVersion << ' ' << cloud.size() << ' ' << cloud.dim() << ' ' << cloud.channels() << '\n';
  write_rows(out, cloud, nullptr);
}

void write_labeled_cloud(std::ostream& out, const LabeledCloud& labeled) {
  const PointCloud& cloud = labeled.cloud;
  require(labeled.labels.size() == cloud.size(), ErrorKind::ShapeMismatch, "label count differs from point count");
  out << kLabeledTag << ' ' << kVersion << ' ' << cloud.size() << ' ' << cloud.dim() << ' ' << cloud.channels() << '\n';
  write_rows(out, cloud, &labeled.labels);
}

std::variant<PointCloud, LabeledCloud> read_any_cloud(std::istream& in) {
  const Header h = read_header(in);
  return read_body(in, h);
}

PointCloud read_cloud(std::istream& in) {
  auto any = read_any_cloud(in);
  if (auto* labeled = std::get_if<LabeledCloud>(&any)) return labeled->cloud;
  return std::get<PointCloud>(std::move(any));
}

LabeledCloud read_labeled_cloud(std::istream& in) {
  auto any = read_any_cloud(in);
  require(std::holds_alternative<LabeledCloud>(any), ErrorKind::ConfigInvalid, "expected a flexcloud-labeled file");
  return std::get<LabeledCloud>(std::move(any));
}

void save_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
  auto out = open_out(path);
  write_cloud(out, cloud);
  finish(out, path);
}

void save_labeled_cloud(const std::filesystem::path& path, const LabeledCloud& cloud) {
  auto out = open_out(path);
  write_labeled_cloud(out, cloud);
  finish(out, path);
}

std::variant<PointCloud, LabeledCloud> load_any_cloud(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_any_cloud(in);
}

PointCloud load_cloud(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_cloud(in);
}

LabeledCloud load_labeled_cloud(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_labeled_cloud(in);
}

}  // namespace flexconv
