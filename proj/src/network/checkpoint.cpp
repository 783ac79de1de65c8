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

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "flexconv/core/error.hpp"
#include "flexconv/network.hpp"

namespace flexconv {

namespace {

constexpr std::array<char, 8> kMagic = {'F', 'L', 'X', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

// Bytes are written least-significant first regardless of host order.
template <typename U>
void put_uint(std::string& out, U value) {
  for (std::size_t b = 0; b < sizeof(U); ++b) out.push_back(static_cast<char>((value >> (8 * b)) & 0xff));
}

void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  put_uint(out, bits);
}

class Reader {
 public:
  explicit Reader(const std::string& data) : data_(data) {}

  template <typename U>
  U uint() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t b = 0; b < sizeof(U); ++b)
      v |= static_cast<U>(static_cast<unsigned char>(data_[pos_ + b])) << (8 * b);
    pos_ += sizeof(U);
    return v;
  }

  double f64() {
    const auto bits = uint<std::uint64_t>();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }

  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::vector<double> f64s(std::uint64_t n) {
    need(n * 8);
    std::vector<double> v(n);
    for (auto& x : v) x = f64();
    return v;
  }

  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > data_.size() - pos_) fail(ErrorKind::ConfigInvalid, "checkpoint is truncated");
  }
  const std::string& data_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  const std::uint64_t count = ck.params.size();
  require(ck.adam.m.size() == count && ck.adam.v.size() == count, ErrorKind::ShapeMismatch,
          "optimizer moments differ in size from the parameter vector");
  std::string out(kMagic.begin(), kMagic.end());
  put_uint<std::uint32_t>(out, kVersion);
  put_uint<std::uint64_t>(out, ck.config_text.size());
  out += ck.config_text;
  put_uint<std::uint64_t>(out, count);
  for (double p : ck.params) put_f64(out, p);
  put_f64(out, ck.adam.lr);
  put_f64(out, ck.adam.beta1);
  put_f64(out, ck.adam.beta2);
  put_f64(out, ck.adam.eps);
  put_uint<std::uint64_t>(out, ck.adam.step);
  for (double m : ck.adam.m) put_f64(out, m);
  for (double v : ck.adam.v) put_f64(out, v);
  put_uint<std::uint64_t>(out, count);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorKind::IoFailure, "cannot write checkpoint " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) fail(ErrorKind::IoFailure, "failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::IoFailure, "cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  const std::string data = ss.str();

  Reader r(data);
  const std::string magic = r.bytes(kMagic.size());
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin()))
    fail(ErrorKind::ConfigInvalid, path.string() + " is not a checkpoint");
  const auto version = r.uint<std::uint32_t>();
  if (version != kVersion) fail(ErrorKind::ConfigInvalid, "unsupported checkpoint version " + std::to_string(version));
  Checkpoint ck;
  ck.config_text = r.bytes(r.uint<std::uint64_t>());
  const auto count = r.uint<std::uint64_t>();
  ck.params = r.f64s(count);
  ck.adam.lr = r.f64();
  ck.adam.beta1 = r.f64();
  ck.adam.beta2 = r.f64();
  ck.adam.eps = r.f64();
  ck.adam.step = r.uint<std::uint64_t>();
  ck.adam.m = r.f64s(count);
  ck.adam.v = r.f64s(count);
  require(r.uint<std::uint64_t>() == count && r.done(), ErrorKind::ConfigInvalid, "checkpoint trailer mismatch");
  return ck;
}

}  // namespace flexconv
