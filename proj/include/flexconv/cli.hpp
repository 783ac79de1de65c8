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
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "flexconv/core/error.hpp"
#include "flexconv/network.hpp"

namespace flexconv {

/// Everything a command needs. The text form is flat `key = value` lines;
/// `#` starts a comment; unknown keys and malformed values are rejected.
struct RunConfig {
  // task
  std::string task = "SyntheticShapesSeg";  // PrewittX | PrewittY | Blur | SyntheticShapesSeg | TwoClassClouds
  // data
  std::size_t n_points = 4096;
  std::size_t n_scenes = 200;
  std::size_t classes = 3;
  std::size_t image_size = 64;
  std::size_t images = 4;
  double holdout = 0.1;  // trailing fraction of scenes held out
  // network
  std::size_t dim = 3;
  std::size_t stages = 2;
  std::size_t base_channels = 8;
  std::size_t k = 8;
  std::size_t factor = 4;
  std::string attach = "normalized";  // raw | normalized
  double location_scale = 20.0;       // cloud coordinates are multiplied by this before use
  // optimizer
  double lr = 3e-3;
  std::size_t steps = 2000;  // image tasks
  std::size_t epochs = 40;   // cloud tasks
  std::size_t batch = 1;
  bool cosine = true;
  double clip_norm = 5.0;  // global gradient-norm clip for cloud tasks; 0 = off
  // run
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string dataset;     // directory written by `gen`; empty = generate in memory
  std::string checkpoint;  // train writes <out>/checkpoint.bin when empty
  std::string input;       // cloud file for `infer`
  std::string output_dir = "out";
  // bench
  std::vector<std::size_t> bench_sizes = {100000, 200000, 400000, 800000};
  std::size_t bench_k = 8;
  std::size_t bench_channels = 16;
  std::size_t bench_reps = 3;
  std::size_t bench_naive_max_n = 200000;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

RunConfig parse_run_config(std::istream& in);
/// Throws IoFailure when the file cannot be read.
RunConfig load_run_config(const std::filesystem::path& path);
/// Canonical text: every key in schema order. parse(format(c)) == c.
std::string format_run_config(const RunConfig& config);
/// Throws ConfigInvalid for out-of-range values.
void validate_run_config(const RunConfig& config);

/// Network hyperparameters implied by the run config.
NetworkConfig network_config(const RunConfig& config);

/// 0 success, 2 invalid configuration or input, 3 I/O failure, 4 numeric
/// divergence.
int exit_code(ErrorKind kind);

int cmd_gen(const RunConfig& config, std::ostream& log);
int cmd_train(const RunConfig& config, std::ostream& log);
int cmd_infer(const RunConfig& config, std::ostream& log);
int cmd_eval(const RunConfig& config, std::ostream& log);
int cmd_bench(const RunConfig& config, std::ostream& log);

/// Full command-line entry point (subcommand plus flags). Errors are
/// reported on `err` and mapped to exit codes.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace flexconv
