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

#include <cmath>
#include <sstream>

#include "flexconv/core/cloud_io.hpp"
#include "flexconv/core/point_cloud.hpp"
#include "flexconv/harness.hpp"
#include "support.hpp"

using namespace flexconv;

namespace {

DenseImage random_image(std::size_t h, std::size_t w, Rng& rng) {
  DenseImage img(h, w, 1);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) img.at(r, c, 0) = rng.uniform(-1.0, 1.0);
  return img;
}

TEST(DenseOracle, IdentityKernel) {
  Rng rng(1);
  const DenseImage img = random_image(6, 5, rng);
  DenseConvOracle k(3, 3, 1, 1);
  k.at(1, 1, 0, 0) = 1.0;
  const DenseImage out = dense_conv2d(img, k);
  ASSERT_EQ(out.height(), 4u);
  ASSERT_EQ(out.width(), 3u);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(out.at(r, c, 0), img.at(r + 1, c + 1, 0));
}

TEST(DenseOracle, OnesOnConstantImage) {
  const DenseImage img(5, 5, 1, 2.5);
  DenseConvOracle k(3, 3, 1, 1);
  for (double& v : k.kernel) v = 1.0;
  const DenseImage out = dense_conv2d(img, k);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(out.at(r, c, 0), 9.0 * 2.5);
}

TEST(DenseOracle, PrewittOnRamp) {
  DenseImage ramp(7, 7, 1);
  for (std::size_t r = 0; r < 7; ++r)
    for (std::size_t c = 0; c < 7; ++c) ramp.at(r, c, 0) = static_cast<double>(r);
  const DenseImage plus = dense_conv2d(ramp, kernel_from_flex({-1.0, 0.0}, 0.0));
  const DenseImage minus = dense_conv2d(ramp, kernel_from_flex({1.0, 0.0}, 0.0));
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 5; ++c) {
      EXPECT_EQ(plus.at(r, c, 0), 6.0);
      EXPECT_EQ(minus.at(r, c, 0), -6.0);
    }
}

TEST(DenseOracle, RejectsBadShapes) {
  EXPECT_ENGINE_ERROR(dense_conv2d(DenseImage(5, 5, 1), DenseConvOracle(2, 3, 1, 1)), ErrorKind::ShapeMismatch);
  EXPECT_ENGINE_ERROR(dense_conv2d(DenseImage(5, 5, 2), DenseConvOracle(3, 3, 1, 1)), ErrorKind::ShapeMismatch);
  EXPECT_ENGINE_ERROR(dense_conv2d(DenseImage(2, 5, 1), DenseConvOracle(3, 3, 1, 1)), ErrorKind::ShapeMismatch);
}

TEST(KernelFromFlex, Examples) {
  const DenseConvOracle x = kernel_from_flex({1.0, 0.0}, 0.0);
  for (std::size_t b = 0; b < 3; ++b) {
    EXPECT_EQ(x.at(0, b, 0, 0), -1.0);
    EXPECT_EQ(x.at(1, b, 0, 0), 0.0);
    EXPECT_EQ(x.at(2, b, 0, 0), 1.0);
  }
  const DenseConvOracle y = kernel_from_flex({0.0, 1.0}, 0.0);
  for (std::size_t a = 0; a < 3; ++a) EXPECT_EQ(y.at(a, 2, 0, 0) - y.at(a, 0, 0, 0), 2.0);
  for (double v : kernel_from_flex({0.0, 0.0}, 1.0 / 9.0).kernel) EXPECT_EQ(v, 1.0 / 9.0);
}

TEST(GridEquivalence, RandomTrials) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t h = 4 + rng.below(10), w = 4 + rng.below(10);
    const DenseImage img = random_image(h, w, rng);
    const std::array<double, 2> theta{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
    const double b = rng.uniform(-1.0, 1.0);
    const PointCloud cloud = image_to_cloud(img);
    const FlexConvParams p({1, 1, 2}, {theta[0], theta[1]}, {b});
    const Matrix out =
        flex_conv_forward(cloud.features(), cloud.locations(), compute_neighbors(cloud.locations(), 9), p);
    const DenseImage ref = dense_conv2d(img, kernel_from_flex(theta, b));
    for (std::size_t r = 1; r + 1 < h; ++r)
      for (std::size_t c = 1; c + 1 < w; ++c) EXPECT_NEAR(out(r * w + c, 0), ref.at(r - 1, c - 1, 0), 1e-12);
  }
}

TEST(Toy, NamesAndTargets) {
  for (ToyKind k :
       {ToyKind::PrewittX, ToyKind::PrewittY, ToyKind::Blur, ToyKind::SyntheticShapesSeg, ToyKind::TwoClassClouds})
    EXPECT_EQ(parse_toy_kind(to_string(k)), k);
  EXPECT_ENGINE_ERROR(parse_toy_kind("Sobel"), ErrorKind::ConfigInvalid);
  EXPECT_EQ(toy_target_params(ToyKind::PrewittY).first, (std::array<double, 2>{0.0, 1.0}));
  EXPECT_EQ(toy_target_params(ToyKind::Blur).second, 1.0 / 9.0);
  EXPECT_ENGINE_ERROR(toy_target_params(ToyKind::TwoClassClouds), ErrorKind::ConfigInvalid);
}

TEST(Toy, ImagesAreSeededAndRoundTripThroughClouds) {
  ToyTask task;
  task.height = 9;
  task.width = 7;
  task.images = 2;
  task.seed = 5;
  const auto a = toy_images(task), b = toy_images(task);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a[0].pixels(), b[0].pixels());
  EXPECT_NE(a[0].pixels(), a[1].pixels());
  const DenseImage back = cloud_to_image(image_to_cloud(a[1]));
  EXPECT_EQ(back.pixels(), a[1].pixels());
  EXPECT_ENGINE_ERROR(cloud_to_image(PointCloud(Matrix{{0.0, 0.0}, {0.0, 2.0}}, Matrix(2, 1))),
                      ErrorKind::ShapeMismatch);
}

TEST(Toy, ZeroStepsReportInitialLoss) {
  ToyTask task;
  task.height = 12;
  task.width = 12;
  Rng a(3), b(3);
  const ToyResult ra = run_toy_regression(task, 0, 1e-2, a);
  const ToyResult rb = run_toy_regression(task, 0, 1e-2, b);
  EXPECT_EQ(ra.final_mse, ra.initial_mse);
  EXPECT_EQ(ra.initial_mse, rb.initial_mse);
  EXPECT_EQ(ra.theta, rb.theta);
  EXPECT_GT(ra.initial_mse, 0.0);
  EXPECT_TRUE(ra.losses.empty());
}

TEST(Toy, SmallPrewittFitConverges) {
  ToyTask task;
  task.kind = ToyKind::PrewittX;
  task.height = 16;
  task.width = 16;
  task.images = 2;
  Rng rng(4);
  const ToyResult r = run_toy_regression(task, 1500, 1e-2, rng);
  EXPECT_LT(r.final_mse, 1e-6);
  EXPECT_NEAR(r.theta[0], 1.0, 1e-3);
  EXPECT_NEAR(r.theta[1], 0.0, 1e-3);
  EXPECT_NEAR(r.theta_b, 0.0, 1e-3);
  EXPECT_LT(r.losses.back(), r.losses.front());
}

TEST(Synthetic, DeterministicGivenSeed) {
  SegGenConfig cfg;
  cfg.n_points = 1024;
  cfg.n_scenes = 2;
  Rng a(6), b(6);
  const auto sa = gen_synthetic_seg(cfg, a), sb = gen_synthetic_seg(cfg, b);
  for (std::size_t s = 0; s < 2; ++s) {
    EXPECT_EQ(sa[s].cloud, sb[s].cloud);
    EXPECT_EQ(sa[s].primitive_of_point, sb[s].primitive_of_point);
  }
  EXPECT_NE(sa[0].cloud, sa[1].cloud);
}

TEST(Synthetic, LabelsMatchGeneratingPrimitives) {
  for (std::size_t classes : {2u, 3u}) {
    SegGenConfig cfg;
    cfg.n_points = 1024;
    cfg.n_scenes = 5;
    cfg.classes = classes;
    Rng rng(7);
    for (const SegScene& s : gen_synthetic_seg(cfg, rng)) {
      const std::size_t n = s.cloud.cloud.size();
      ASSERT_EQ(n, 1024u);
      std::vector<std::size_t> counts(classes, 0);
      EXPECT_GE(s.primitives.size(), 3u);
      EXPECT_LE(s.primitives.size(), 5u);
      for (std::size_t i = 0; i < n; ++i) {
        const Primitive& p = s.primitives.at(static_cast<std::size_t>(s.primitive_of_point[i]));
        EXPECT_EQ(s.cloud.labels[i], static_cast<int>(p.kind));
        EXPECT_LT(distance_to_primitive(s.cloud.cloud.locations().row(i), p), 1e-9);
        ++counts.at(static_cast<std::size_t>(s.cloud.labels[i]));
      }
      for (std::size_t c : counts) EXPECT_NEAR(static_cast<double>(c), 1024.0 / classes, 0.2 * 1024.0 / classes);
      for (double f : s.cloud.cloud.features().data()) EXPECT_EQ(f, 1.0);
    }
  }
}

TEST(Synthetic, DistanceToPrimitives) {
  Primitive sphere;
  sphere.kind = PrimitiveKind::Sphere;
  sphere.center = {0.0, 0.0, 1.0};
  sphere.radius = 0.5;
  EXPECT_NEAR(distance_to_primitive(std::vector<double>{0.0, 0.0, 3.0}, sphere), 1.5, 1e-15);
  Primitive plane;
  plane.half = {1.0, 1.0, 0.0};
  EXPECT_NEAR(distance_to_primitive(std::vector<double>{0.5, 0.5, -2.0}, plane), 2.0, 1e-15);
  EXPECT_NEAR(distance_to_primitive(std::vector<double>{2.0, 0.0, 0.0}, plane), 1.0, 1e-15);
  Primitive box;
  box.kind = PrimitiveKind::Box;
  box.half = {0.5, 0.5, 0.5};
  box.center = {0.0, 0.0, 0.5};
  EXPECT_NEAR(distance_to_primitive(std::vector<double>{0.0, 0.0, 2.0}, box), 1.0, 1e-15);
  EXPECT_NEAR(distance_to_primitive(std::vector<double>{0.0, 0.0, 0.5}, box), 0.5, 1e-15);
}

TEST(Synthetic, RejectsBadConfigs) {
  Rng rng(8);
  SegGenConfig cfg;
  cfg.n_scenes = 0;
  EXPECT_ENGINE_ERROR(gen_synthetic_seg(cfg, rng), ErrorKind::ConfigInvalid);
  cfg.n_scenes = 1;
  cfg.classes = 4;
  EXPECT_ENGINE_ERROR(gen_synthetic_seg(cfg, rng), ErrorKind::ConfigInvalid);
  EXPECT_ENGINE_ERROR(gen_two_class_clouds(100, 0, rng), ErrorKind::ConfigInvalid);
}

TEST(Synthetic, TwoClassCloudsAlternate) {
  Rng rng(9);
  const auto samples = gen_two_class_clouds(200, 6, rng);
  ASSERT_EQ(samples.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(samples[i].label, static_cast<int>(i % 2));
    EXPECT_EQ(samples[i].cloud.size(), 200u);
  }
}

TEST(Metrics, Examples) {
  const std::vector<int> truth{0, 0, 1, 1};
  const Metrics perfect = evaluate_predictions(truth, truth, 2);
  EXPECT_EQ(perfect.miou, 1.0);
  EXPECT_EQ(perfect.accuracy, 1.0);

  const Metrics one = evaluate_predictions(std::vector<int>{0, 0, 0, 0}, truth, 2);
  EXPECT_DOUBLE_EQ(one.iou[0], 0.5);
  EXPECT_EQ(one.iou[1], 0.0);
  EXPECT_DOUBLE_EQ(one.miou, 0.25);
  EXPECT_EQ(one.at(1, 0), 2u);

  // Class 2 never occurs in the truth and is left out of the mean.
  const Metrics absent = evaluate_predictions(truth, truth, 3);
  EXPECT_FALSE(absent.present[2]);
  EXPECT_EQ(absent.miou, 1.0);

  EXPECT_ENGINE_ERROR(evaluate_predictions(std::vector<int>{0, 3}, std::vector<int>{0, 1}, 2),
                      ErrorKind::IndexOutOfRange);
  EXPECT_ENGINE_ERROR(evaluate_predictions(std::vector<int>{0}, std::vector<int>{0, 1}, 2), ErrorKind::ShapeMismatch);
}

TEST(Metrics, FromLogitsAndPermutationInvariant) {
  const Matrix logits{{2.0, 1.0}, {0.0, 3.0}, {5.0, -1.0}, {0.0, 0.1}};
  const std::vector<int> truth{0, 1, 1, 1};
  const Metrics m = evaluate(logits, truth);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.75);
  const Metrics p = evaluate(Matrix{{0.0, 0.1}, {5.0, -1.0}, {2.0, 1.0}, {0.0, 3.0}}, std::vector<int>{1, 1, 0, 1});
  EXPECT_EQ(p.confusion, m.confusion);
  EXPECT_EQ(p.miou, m.miou);
}

TEST(Metrics, CsvLayout) {
  std::ostringstream out;
  write_metrics_csv(out, evaluate_predictions(std::vector<int>{0, 0, 0, 0}, std::vector<int>{0, 0, 1, 1}, 2));
  EXPECT_EQ(out.str(), "metric,value\naccuracy,0.5\nmiou,0.25\niou_0,0.5\niou_1,0\n");
}

TEST(Memory, ForwardOutputBuffer) {
  const MemoryEstimate m = estimate_memory(8 * 4096, 64, 64, 9, 3, 4);
  EXPECT_EQ(m.output_bytes, 8388608u);
  EXPECT_EQ(m.input_bytes, 8u * 4096u * (64u + 3u) * 4u);
  EXPECT_EQ(m.param_bytes, param_count(64, 64, 3) * 4u);
  EXPECT_EQ(m.neighbor_bytes, 8u * 4096u * 9u * 4u);
  EXPECT_EQ(m.total_bytes, m.input_bytes + m.output_bytes + m.param_bytes + m.neighbor_bytes);
  EXPECT_ENGINE_ERROR(estimate_memory(0, 1, 1, 1, 3, 4), ErrorKind::ConfigInvalid);
}

TEST(Bench, CsvHeaderAndEmptyFields) {
  std::ostringstream out;
  BenchRow row;
  row.n = 10;
  row.k = 2;
  row.channels = 3;
  row.threads = 1;
  row.forward_ms = 1.5;
  row.backward_ms = std::nan("");
  row.naive_forward_ms = std::nan("");
  row.memory_bytes = 99;
  write_bench_csv(out, std::vector<BenchRow>{row});
  EXPECT_EQ(out.str(), std::string(kBenchCsvHeader) + "\n10,2,3,1,1.5,,,99\n");
  EXPECT_EQ(std::string(kBenchCsvHeader), "n,k,channels,threads,forward_ms,backward_ms,naive_forward_ms,memory_bytes");
}

TEST(Bench, MediansGrowWithSize) {
  BenchConfig cfg;
  cfg.sizes = {4000, 16000, 64000};
  cfg.channels = 4;
  cfg.reps = 3;
  cfg.naive_max_n = 16000;
  const auto rows = bench_scaling(cfg);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_GE(rows[i].forward_ms, rows[i - 1].forward_ms);
    EXPECT_GE(rows[i].backward_ms, rows[i - 1].backward_ms);
  }
  EXPECT_FALSE(std::isnan(rows[1].naive_forward_ms));
  EXPECT_TRUE(std::isnan(rows[2].naive_forward_ms));
  cfg.sizes.clear();
  EXPECT_ENGINE_ERROR(bench_scaling(cfg), ErrorKind::ConfigInvalid);
  cfg.sizes = {4};
  EXPECT_ENGINE_ERROR(bench_scaling(cfg), ErrorKind::ConfigInvalid);
}

TEST(Bench, LocationsAreInTheUnitCube) {
  Rng rng(10);
  const Matrix loc = bench_locations(1000, 3, rng);
  for (double v : loc.data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Training, ClassifierSeparatesTwoShapes) {
  Rng rng(11);
  NetworkConfig cfg;
  cfg.kind = NetworkKind::Classification;
  cfg.classes = 2;
  cfg.stages = 1;
  cfg.base_channels = 8;
  cfg.k = 8;
  cfg.attach = AttachMode::Normalized;
  std::vector<PreparedScene> scenes;
  for (const ClassSample& s : gen_two_class_clouds(256, 16, rng))
    scenes.push_back(prepare_scene(s.cloud, {s.label}, cfg, rng));
  LayerGraph g = build_network(cfg);
  init_params(g, scenes[0].hierarchy, rng);
  AdamState adam = make_adam(g.params().size(), 3e-3);
  TrainOptions opt;
  opt.epochs = 40;
  const TrainLog log = train_network(g, adam, scenes, opt, rng);
  EXPECT_EQ(evaluate_network(g, scenes).accuracy, 1.0);
  EXPECT_LT(log.epoch_losses.back(), log.epoch_losses.front());
}

TEST(Training, GradientClipping) {
  Rng rng(13);
  NetworkConfig cfg;
  cfg.classes = 3;
  cfg.stages = 1;
  cfg.base_channels = 4;
  cfg.k = 4;
  SegGenConfig gen;
  gen.n_points = 128;
  gen.n_scenes = 2;
  std::vector<PreparedScene> scenes;
  for (auto& s : gen_synthetic_seg(gen, rng)) scenes.push_back(prepare_scene(s.cloud.cloud, s.cloud.labels, cfg, rng));
  LayerGraph base = build_network(cfg);
  init_params(base, scenes[0].hierarchy, rng);

  auto run = [&](double clip, std::size_t epochs) {
    LayerGraph g = base;
    AdamState adam = make_adam(g.params().size(), 1e-3);
    TrainOptions opt;
    opt.epochs = epochs;
    opt.batch = 2;
    opt.shuffle = false;
    opt.clip_norm = clip;
    Rng r(5);
    train_network(g, adam, scenes, opt, r);
    return std::make_pair(g.params(), adam);
  };
  const auto [p_free, a_free] = run(0.0, 2);
  EXPECT_EQ(run(1e12, 2).first, p_free);  // a bound never reached changes nothing

  // After one step the first moment is (1 - beta1) times the clipped gradient.
  const double clip = 1e-3;
  const AdamState a1 = run(clip, 1).second;
  double sq = 0.0;
  for (double v : a1.m) sq += v * v;
  EXPECT_NEAR(std::sqrt(sq), (1.0 - a1.beta1) * clip, 1e-12);
  EXPECT_NE(run(clip, 2).first, p_free);

  LayerGraph g = base;
  AdamState adam = make_adam(g.params().size());
  TrainOptions bad;
  bad.clip_norm = -1.0;
  EXPECT_ENGINE_ERROR(train_network(g, adam, scenes, bad, rng), ErrorKind::ConfigInvalid);
}

TEST(Training, PrepareSceneChecksLabels) {
  Rng rng(12);
  NetworkConfig cfg;
  const PointCloud cloud(flexconv::testing::random_matrix(64, 3, rng), Matrix(64, 1, 1.0));
  EXPECT_ENGINE_ERROR(prepare_scene(cloud, std::vector<int>(3, 0), cfg, rng), ErrorKind::ShapeMismatch);
  cfg.kind = NetworkKind::Classification;
  EXPECT_ENGINE_ERROR(prepare_scene(cloud, std::vector<int>(64, 0), cfg, rng), ErrorKind::ShapeMismatch);
  const PreparedScene s = prepare_scene(cloud, {1}, cfg, rng);
  EXPECT_EQ(s.hierarchy.levels.size(), cfg.stages + 1);
}

TEST(Training, MonotoneTrend) {
  EXPECT_TRUE(monotone_trend(std::vector<double>{1.0, 0.8, 0.85, 0.5}, 1, 0.6));
  EXPECT_FALSE(monotone_trend(std::vector<double>{1.0, 0.8, 0.85, 0.5}, 0, 0.6));
  EXPECT_FALSE(monotone_trend(std::vector<double>{1.0, 0.9}, 3, 0.5));
  EXPECT_FALSE(monotone_trend(std::vector<double>{1.0}, 3, 0.5));
}

}  // namespace
