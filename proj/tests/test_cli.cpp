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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "flexconv/cli.hpp"
#include "flexconv/core/cloud_io.hpp"
#include "support.hpp"

using namespace flexconv;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("flexconv_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  int run(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
    args.insert(args.begin(), "flexconv");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text) *out_text = out.str();
    if (err_text) *err_text = err.str();
    return code;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }

  fs::path dir_;
};

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_run_config(in);
}

TEST(RunConfigText, ParsesAndEchoesInSchemaOrder) {
  const RunConfig c = parse(
      "# comment\nseed = 7\ntask=PrewittY\n  lr = 0.5  # trailing\nbench_sizes = 10, 20\n"
      "cosine = false\nattach = normalized\n");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.task, "PrewittY");
  EXPECT_EQ(c.lr, 0.5);
  EXPECT_EQ(c.bench_sizes, (std::vector<std::size_t>{10, 20}));
  EXPECT_FALSE(c.cosine);
  EXPECT_EQ(c.attach, "normalized");
  const std::string echo = format_run_config(c);
  EXPECT_EQ(parse(echo), c);
  EXPECT_EQ(format_run_config(parse(echo)), echo);
  EXPECT_LT(echo.find("task = "), echo.find("seed = "));
  EXPECT_EQ(parse(""), RunConfig{});
}

TEST(RunConfigText, RejectsUnknownDuplicateAndMalformed) {
  EXPECT_ENGINE_ERROR(parse("colour = red\n"), ErrorKind::ConfigInvalid);
  EXPECT_ENGINE_ERROR(parse("seed = 1\nseed = 2\n"), ErrorKind::ConfigInvalid);
  EXPECT_ENGINE_ERROR(parse("seed = -1\n"), ErrorKind::ConfigInvalid);
  EXPECT_ENGINE_ERROR(parse("lr = fast\n"), ErrorKind::ConfigInvalid);
  EXPECT_ENGINE_ERROR(parse("cosine = maybe\n"), ErrorKind::ConfigInvalid);
  EXPECT_ENGINE_ERROR(parse("just words\n"), ErrorKind::ConfigInvalid);
}

TEST(RunConfigText, Validation) {
  RunConfig c;
  EXPECT_NO_THROW(validate_run_config(c));
  c.n_scenes = 0;
  EXPECT_ENGINE_ERROR(validate_run_config(c), ErrorKind::ConfigInvalid);
  c = RunConfig{};
  c.bench_sizes.clear();  // only the bench command needs sizes
  EXPECT_NO_THROW(validate_run_config(c));
  c = RunConfig{};
  c.task = "TwoClassClouds";
  EXPECT_ENGINE_ERROR(validate_run_config(c), ErrorKind::ConfigInvalid);
  c.classes = 2;
  EXPECT_NO_THROW(validate_run_config(c));
  c = RunConfig{};
  c.attach = "polar";
  EXPECT_ENGINE_ERROR(validate_run_config(c), ErrorKind::ConfigInvalid);
  c = RunConfig{};
  c.location_scale = 0.0;
  EXPECT_ENGINE_ERROR(validate_run_config(c), ErrorKind::ConfigInvalid);
  c = RunConfig{};
  c.clip_norm = -1.0;
  EXPECT_ENGINE_ERROR(validate_run_config(c), ErrorKind::ConfigInvalid);
  c = RunConfig{};
  c.task = "Sobel";
  EXPECT_ENGINE_ERROR(validate_run_config(c), ErrorKind::ConfigInvalid);
  EXPECT_ENGINE_ERROR(load_run_config("/nonexistent/flexconv.cfg"), ErrorKind::IoFailure);
}

TEST(RunConfigText, ExitCodes) {
  EXPECT_EQ(exit_code(ErrorKind::ConfigInvalid), 2);
  EXPECT_EQ(exit_code(ErrorKind::ShapeMismatch), 2);
  EXPECT_EQ(exit_code(ErrorKind::EmptyInput), 2);
  EXPECT_EQ(exit_code(ErrorKind::IndexOutOfRange), 2);
  EXPECT_EQ(exit_code(ErrorKind::IoFailure), 3);
  EXPECT_EQ(exit_code(ErrorKind::NonFinite), 4);
}

TEST_F(CliTest, ArgumentErrors) {
  std::string err;
  EXPECT_EQ(run({}, nullptr, &err), 2);
  EXPECT_EQ(run({"train"}, nullptr, &err), 2);  // --config is required
  EXPECT_EQ(run({"fly", "--config", "x"}, nullptr, &err), 2);
  EXPECT_EQ(run({"train", "--config", (dir_ / "missing.cfg").string()}, nullptr, &err), 3);
  EXPECT_NE(err.find("IoFailure"), std::string::npos) << err;
  const auto bad = write_config("bad.cfg", "steps = 10\nwhatever = 1\n");
  EXPECT_EQ(run({"train", "--config", bad.string()}, nullptr, &err), 2);
}

TEST_F(CliTest, GenIsDeterministicAndRoundTrips) {
  const auto cfg = write_config("gen.cfg", "n_points = 512\nn_scenes = 2\nseed = 3\n");
  ASSERT_EQ(run({"gen", "--config", cfg.string(), "--out", (dir_ / "a").string()}), 0);
  ASSERT_EQ(run({"gen", "--config", cfg.string(), "--out", (dir_ / "b").string()}), 0);
  for (const char* f : {"scene0000.flexcloud", "scene0001.flexcloud"}) {
    const auto a = slurp(dir_ / "a" / "dataset" / f);
    ASSERT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(dir_ / "b" / "dataset" / f));
  }
  const LabeledCloud scene = load_labeled_cloud(dir_ / "a" / "dataset" / "scene0000.flexcloud");
  EXPECT_EQ(scene.cloud.size(), 512u);
  std::ostringstream text;
  write_labeled_cloud(text, scene);
  std::istringstream back(text.str());
  EXPECT_EQ(read_labeled_cloud(back), scene);
  RunConfig echoed = load_run_config(cfg);
  echoed.output_dir = (dir_ / "a").string();
  EXPECT_EQ(slurp(dir_ / "a" / "config.txt"), format_run_config(echoed));

  const auto zero = write_config("zero.cfg", "n_scenes = 0\n");
  EXPECT_EQ(run({"gen", "--config", zero.string(), "--out", (dir_ / "c").string()}), 2);
}

TEST_F(CliTest, TrainToyThroughTheCommandLine) {
  const auto cfg = write_config("toy.cfg", "task = PrewittX\nimage_size = 16\nimages = 2\nsteps = 1500\nlr = 0.01\n");
  std::string log;
  ASSERT_EQ(run({"train", "--config", cfg.string(), "--out", (dir_ / "run1").string()}, &log), 0);
  const auto pos = log.find("final_mse=");
  ASSERT_NE(pos, std::string::npos) << log;
  EXPECT_LT(std::stod(log.substr(pos + 10)), 1e-6);
  EXPECT_TRUE(fs::exists(dir_ / "run1" / "checkpoint.bin"));
  EXPECT_TRUE(fs::exists(dir_ / "run1" / "metrics.csv"));
  const std::string losses = slurp(dir_ / "run1" / "loss.csv");
  EXPECT_EQ(losses.rfind("step,loss\n", 0), 0u);

  ASSERT_EQ(run({"train", "--config", cfg.string(), "--out", (dir_ / "run2").string()}), 0);
  EXPECT_EQ(slurp(dir_ / "run2" / "loss.csv"), losses);
  // The seed flag changes the run.
  ASSERT_EQ(run({"train", "--config", cfg.string(), "--seed", "9", "--out", (dir_ / "run3").string()}), 0);
  EXPECT_NE(slurp(dir_ / "run3" / "loss.csv"), losses);
  EXPECT_NE(slurp(dir_ / "run3" / "config.txt").find("seed = 9"), std::string::npos);
}

TEST_F(CliTest, MissingDatasetIsAnIoFailure) {
  const auto cfg = write_config("ds.cfg", "task = PrewittX\ndataset = " + (dir_ / "nowhere").string() + "\n");
  std::string err;
  EXPECT_EQ(run({"train", "--config", cfg.string(), "--out", (dir_ / "o").string()}, nullptr, &err), 3);
}

TEST_F(CliTest, SegmentationTrainInferEval) {
  const auto cfg = write_config("seg.cfg",
                                "n_points = 256\nn_scenes = 5\nholdout = 0.2\nstages = 1\nbase_channels = 4\n"
                                "epochs = 2\nseed = 1\n");
  const auto out = (dir_ / "seg").string();
  std::string log;
  ASSERT_EQ(run({"train", "--config", cfg.string(), "--out", out}, &log), 0) << log;
  EXPECT_NE(log.find("held_out accuracy="), std::string::npos) << log;
  EXPECT_TRUE(fs::exists(dir_ / "seg" / "metrics_held_out.csv"));

  ASSERT_EQ(run({"gen", "--config", cfg.string(), "--out", (dir_ / "data").string()}), 0);
  const auto scene = (dir_ / "data" / "dataset" / "scene0000.flexcloud").string();
  const auto ckpt = (dir_ / "seg" / "checkpoint.bin").string();
  ASSERT_EQ(
      run({"infer", "--config", cfg.string(), "--checkpoint", ckpt, "--input", scene, "--out", (dir_ / "inf").string()},
          &log),
      0);
  EXPECT_NE(log.find("input accuracy="), std::string::npos) << log;
  EXPECT_EQ(load_labeled_cloud(dir_ / "inf" / "predictions.flexcloud").cloud.size(), 256u);

  ASSERT_EQ(run({"eval", "--config", cfg.string(), "--checkpoint", ckpt, "--out", (dir_ / "ev").string()}, &log), 0);
  EXPECT_NE(log.find("held_out accuracy="), std::string::npos) << log;

  // A checkpoint from a differently shaped network is rejected.
  const auto wide = write_config("wide.cfg", "n_points = 256\nn_scenes = 5\nstages = 1\nbase_channels = 8\nseed = 1\n");
  EXPECT_EQ(run({"infer", "--config", wide.string(), "--checkpoint", ckpt, "--input", scene, "--out",
                 (dir_ / "inf2").string()}),
            2);
  // So is one trained on differently scaled coordinates.
  const auto rescaled = write_config("rescaled.cfg",
                                     "n_points = 256\nn_scenes = 5\nstages = 1\nbase_channels = 4\nseed = 1\n"
                                     "location_scale = 3\n");
  EXPECT_EQ(run({"infer", "--config", rescaled.string(), "--checkpoint", ckpt, "--input", scene, "--out",
                 (dir_ / "inf5").string()}),
            2);

  // Truncated checkpoint.
  const fs::path cut = dir_ / "cut.bin";
  fs::copy_file(ckpt, cut);
  fs::resize_file(cut, fs::file_size(cut) / 2);
  std::string err;
  EXPECT_EQ(run({"infer", "--config", cfg.string(), "--checkpoint", cut.string(), "--input", scene, "--out",
                 (dir_ / "inf3").string()},
                nullptr, &err),
            2);
  EXPECT_NE(err.find("ConfigInvalid"), std::string::npos) << err;

  // Empty input cloud.
  const fs::path empty = dir_ / "empty.flexcloud";
  std::ofstream(empty) << "flexcloud v1 0 3 1\n";
  EXPECT_EQ(run({"infer", "--config", cfg.string(), "--checkpoint", ckpt, "--input", empty.string(), "--out",
                 (dir_ / "inf4").string()},
                nullptr, &err),
            2);
  EXPECT_NE(err.find("EmptyInput"), std::string::npos) << err;
}

TEST_F(CliTest, BenchWritesCsv) {
  const auto cfg = write_config("bench.cfg", "bench_sizes = 1000, 2000\nbench_channels = 2\nbench_reps = 1\n");
  std::string log;
  ASSERT_EQ(run({"bench", "--config", cfg.string(), "--out", (dir_ / "b").string()}, &log), 0);
  const std::string csv = slurp(dir_ / "b" / "bench.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "n,k,channels,threads,forward_ms,backward_ms,naive_forward_ms,memory_bytes");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  const auto empty = write_config("nobench.cfg", "bench_sizes =\n");
  EXPECT_EQ(run({"bench", "--config", empty.string(), "--out", (dir_ / "c").string()}), 2);
}

}  // namespace
