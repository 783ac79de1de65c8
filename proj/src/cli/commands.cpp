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

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "flexconv/cli.hpp"
#include "flexconv/core/cloud_io.hpp"
#include "flexconv/core/parallel.hpp"
#include "flexconv/harness.hpp"

namespace flexconv {

namespace {

namespace fs = std::filesystem;

bool is_image_task(ToyKind k) { return k == ToyKind::PrewittX || k == ToyKind::PrewittY || k == ToyKind::Blur; }

fs::path out_dir(const RunConfig& c) {
  const fs::path dir(c.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::IoFailure, "cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) fail(ErrorKind::IoFailure, "cannot write " + path.string());
  return f;
}

// Every command starts by echoing its resolved configuration.
fs::path begin(const RunConfig& c, std::ostream& log) {
  validate_run_config(c);
  set_num_threads(c.threads);
  const fs::path dir = out_dir(c);
  const std::string text = format_run_config(c);
  open_out(dir / "config.txt") << text;
  log << text;
  return dir;
}

ToyTask toy_task(const RunConfig& c) {
  ToyTask t;
  t.kind = parse_toy_kind(c.task);
  t.height = t.width = c.image_size;
  t.images = c.images;
  t.n_points = c.n_points;
  t.n_scenes = c.n_scenes;
  t.seed = c.seed;
  return t;
}

fs::path item_path(const fs::path& dir, const char* stem, std::size_t i) {
  std::ostringstream name;
  name << stem << std::setw(4) << std::setfill('0') << i << ".flexcloud";
  return dir / name.str();
}

std::vector<fs::path> dataset_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorKind::IoFailure, "dataset directory " + dir.string() + " does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".flexcloud") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) fail(ErrorKind::EmptyInput, "dataset directory " + dir.string() + " holds no .flexcloud files");
  return files;
}

std::vector<DenseImage> load_images(const RunConfig& c) {
  if (c.dataset.empty()) return toy_images(toy_task(c));
  std::vector<DenseImage> images;
  for (const auto& f : dataset_files(c.dataset)) images.push_back(cloud_to_image(load_cloud(f)));
  return images;
}

// A scene and its per-point labels (segmentation) or single label (classification).
struct Sample {
  PointCloud cloud;
  std::vector<int> labels;
};

std::vector<Sample> generate_samples(const RunConfig& c, Rng& rng) {
  std::vector<Sample> out;
  if (parse_toy_kind(c.task) == ToyKind::TwoClassClouds) {
    for (auto& s : gen_two_class_clouds(c.n_points, c.n_scenes, rng)) out.push_back({std::move(s.cloud), {s.label}});
  } else {
    SegGenConfig g{c.n_points, c.n_scenes, c.classes};
    for (auto& s : gen_synthetic_seg(g, rng)) out.push_back({std::move(s.cloud.cloud), std::move(s.cloud.labels)});
  }
  return out;
}

std::vector<Sample> load_samples(const RunConfig& c, Rng& rng) {
  if (c.dataset.empty()) return generate_samples(c, rng);
  const bool classification = parse_toy_kind(c.task) == ToyKind::TwoClassClouds;
  std::vector<Sample> out;
  for (const auto& f : dataset_files(c.dataset)) {
    LabeledCloud lc = load_labeled_cloud(f);
    std::vector<int> labels = classification ? std::vector<int>{lc.labels.front()} : std::move(lc.labels);
    out.push_back({std::move(lc.cloud), std::move(labels)});
  }
  return out;
}

std::size_t train_count(const RunConfig& c, std::size_t total) {
  const auto held = static_cast<std::size_t>(std::floor(c.holdout * static_cast<double>(total)));
  return std::max<std::size_t>(1, total - held);
}

PointCloud scaled(const PointCloud& cloud, double scale) {
  if (scale == 1.0) return cloud;
  Matrix loc = cloud.locations();
  for (double& v : loc.data()) v *= scale;
  return PointCloud(std::move(loc), cloud.features());
}

std::vector<PreparedScene> prepare(const RunConfig& c, const std::vector<Sample>& samples, std::size_t begin,
                                   std::size_t end, const NetworkConfig& net, Rng& rng) {
  std::vector<PreparedScene> out;
  for (std::size_t i = begin; i < end; ++i)
    out.push_back(prepare_scene(scaled(samples[i].cloud, c.location_scale), samples[i].labels, net, rng));
  return out;
}

void write_metrics(const fs::path& path, const Metrics& m) {
  auto f = open_out(path);
  write_metrics_csv(f, m);
}

fs::path checkpoint_path(const RunConfig& c, const fs::path& dir) {
  return c.checkpoint.empty() ? dir / "checkpoint.bin" : fs::path(c.checkpoint);
}

// Network-shaping keys must agree between the run and the checkpoint.
void check_compatible(const RunConfig& run, const Checkpoint& ck) {
  std::istringstream in(ck.config_text);
  const RunConfig saved = parse_run_config(in);
  if (network_config(saved) != network_config(run))
    fail(ErrorKind::ConfigInvalid, "checkpoint was trained with a different network configuration");
  if (saved.location_scale != run.location_scale)
    fail(ErrorKind::ConfigInvalid, "checkpoint was trained with a different location_scale");
}

LayerGraph restore(const RunConfig& c, const fs::path& dir) {
  const Checkpoint ck = load_checkpoint(checkpoint_path(c, dir));
  check_compatible(c, ck);
  LayerGraph graph = build_network(network_config(c));
  if (ck.params.size() != graph.params().size())
    fail(ErrorKind::ConfigInvalid, "checkpoint holds " + std::to_string(ck.params.size()) +
                                       " parameters, network has " + std::to_string(graph.params().size()));
  graph.params() = ck.params;
  return graph;
}

void log_metrics(std::ostream& log, const char* split, const Metrics& m) {
  log << split << " accuracy=" << format_real(m.accuracy) << " miou=" << format_real(m.miou) << '\n';
}

}  // namespace

int cmd_gen(const RunConfig& c, std::ostream& log) {
  const fs::path dir = begin(c, log);
  const fs::path data = c.dataset.empty() ? dir / "dataset" : fs::path(c.dataset);
  std::error_code ec;
  fs::create_directories(data, ec);
  if (ec) fail(ErrorKind::IoFailure, "cannot create dataset directory " + data.string());
  const ToyKind kind = parse_toy_kind(c.task);
  std::size_t written = 0;
  if (is_image_task(kind)) {
    for (const auto& img : toy_images(toy_task(c)))
      save_cloud(item_path(data, "image", written++), image_to_cloud(img));
  } else {
    Rng rng(c.seed);
    for (const auto& s : generate_samples(c, rng)) {
      std::vector<int> labels =
          s.labels.size() == s.cloud.size() ? s.labels : std::vector<int>(s.cloud.size(), s.labels[0]);
      save_labeled_cloud(item_path(data, "scene", written++), LabeledCloud{s.cloud, std::move(labels)});
    }
  }
  log << "wrote " << written << " files to " << data.string() << '\n';
  return 0;
}

int cmd_train(const RunConfig& c, std::ostream& log) {
  const fs::path dir = begin(c, log);
  const ToyKind kind = parse_toy_kind(c.task);
  Rng rng(c.seed);
  auto loss_csv = open_out(dir / "loss.csv");
  loss_csv << "step,loss\n";

  if (is_image_task(kind)) {
    const ToyResult r = run_toy_regression(kind, load_images(c), c.steps, c.lr, rng);
    for (std::size_t i = 0; i < r.losses.size(); ++i) loss_csv << i << ',' << format_real(r.losses[i]) << '\n';
    auto m = open_out(dir / "metrics.csv");
    m << "metric,value\nmse," << format_real(r.final_mse) << "\ntheta_0," << format_real(r.theta[0]) << "\ntheta_1,"
      << format_real(r.theta[1]) << "\ntheta_b," << format_real(r.theta_b) << '\n';
    Checkpoint ck{format_run_config(c), {r.theta[0], r.theta[1], r.theta_b}, make_adam(3, c.lr)};
    save_checkpoint(checkpoint_path(c, dir), ck);
    log << "final_mse=" << format_real(r.final_mse) << " theta=(" << format_real(r.theta[0]) << ", "
        << format_real(r.theta[1]) << ") theta_b=" << format_real(r.theta_b) << '\n';
    return 0;
  }

  const NetworkConfig net = network_config(c);
  const std::vector<Sample> samples = load_samples(c, rng);
  const std::size_t n_train = train_count(c, samples.size());
  const auto train = prepare(c, samples, 0, n_train, net, rng);
  const auto held = prepare(c, samples, n_train, samples.size(), net, rng);
  LayerGraph graph = build_network(net);
  init_params(graph, train.front().hierarchy, rng);
  AdamState adam = make_adam(graph.params().size(), c.lr);
  log << "parameters=" << graph.params().size() << " train=" << train.size() << " held_out=" << held.size() << '\n';

  TrainOptions opt;
  opt.epochs = c.epochs;
  opt.batch = c.batch;
  opt.lr = c.lr;
  opt.cosine = c.cosine;
  opt.clip_norm = c.clip_norm;
  const TrainLog tl = train_network(graph, adam, train, opt, rng, [&](std::size_t step, double loss) {
    loss_csv << step << ',' << format_real(loss) << '\n';
  });
  for (std::size_t e = 0; e < tl.epoch_losses.size(); ++e)
    log << "epoch " << e << " loss=" << format_real(tl.epoch_losses[e]) << '\n';

  const Metrics train_m = evaluate_network(graph, train);
  log_metrics(log, "train", train_m);
  write_metrics(dir / "metrics.csv", train_m);
  if (!held.empty()) {
    const Metrics held_m = evaluate_network(graph, held);
    log_metrics(log, "held_out", held_m);
    write_metrics(dir / "metrics_held_out.csv", held_m);
  }
  save_checkpoint(checkpoint_path(c, dir), Checkpoint{format_run_config(c), graph.params(), adam});
  return 0;
}

int cmd_infer(const RunConfig& c, std::ostream& log) {
  const fs::path dir = begin(c, log);
  if (c.input.empty()) fail(ErrorKind::ConfigInvalid, "infer needs an input cloud");
  if (parse_toy_kind(c.task) != ToyKind::SyntheticShapesSeg)
    fail(ErrorKind::ConfigInvalid, "infer labels points and needs a segmentation task");
  LayerGraph graph = restore(c, dir);
  const auto any = load_any_cloud(c.input);
  const PointCloud& cloud =
      std::holds_alternative<PointCloud>(any) ? std::get<PointCloud>(any) : std::get<LabeledCloud>(any).cloud;
  Rng rng(c.seed);
  const NetworkConfig net = network_config(c);
  const auto t0 = std::chrono::steady_clock::now();
  const PreparedScene scene =
      prepare_scene(scaled(cloud, c.location_scale), std::vector<int>(cloud.size(), 0), net, rng);
  const auto t1 = std::chrono::steady_clock::now();
  const Matrix logits = forward(graph, scene.hierarchy, scene.features);
  graph.tape().clear();
  const auto t2 = std::chrono::steady_clock::now();
  const std::vector<int> predicted = argmax_rows(logits);
  save_labeled_cloud(dir / "predictions.flexcloud", LabeledCloud{cloud, predicted});
  auto ms = [](auto a, auto b) { return std::chrono::duration<double, std::milli>(b - a).count(); };
  log << "points=" << cloud.size() << " hierarchy_ms=" << format_real(ms(t0, t1))
      << " forward_ms=" << format_real(ms(t1, t2)) << '\n';
  if (std::holds_alternative<LabeledCloud>(any)) {
    const Metrics m = evaluate_predictions(predicted, std::get<LabeledCloud>(any).labels, net.classes);
    log_metrics(log, "input", m);
  }
  return 0;
}

int cmd_eval(const RunConfig& c, std::ostream& log) {
  const fs::path dir = begin(c, log);
  if (is_image_task(parse_toy_kind(c.task))) fail(ErrorKind::ConfigInvalid, "eval needs a cloud task");
  LayerGraph graph = restore(c, dir);
  Rng rng(c.seed);
  const std::vector<Sample> samples = load_samples(c, rng);
  const std::size_t n_train = train_count(c, samples.size());
  // Consume the generator exactly as train did so held-out hierarchies match.
  const auto train = prepare(c, samples, 0, n_train, network_config(c), rng);
  const auto held = prepare(c, samples, n_train, samples.size(), network_config(c), rng);
  const Metrics m = evaluate_network(graph, held.empty() ? train : held);
  log_metrics(log, held.empty() ? "train" : "held_out", m);
  write_metrics(dir / "metrics.csv", m);
  return 0;
}

int cmd_bench(const RunConfig& c, std::ostream& log) {
  const fs::path dir = begin(c, log);
  BenchConfig b;
  b.sizes = c.bench_sizes;
  b.k = c.bench_k;
  b.channels = c.bench_channels;
  b.reps = c.bench_reps;
  b.naive_max_n = c.bench_naive_max_n;
  b.seed = c.seed;
  const auto rows = bench_scaling(b);
  auto f = open_out(dir / "bench.csv");
  write_bench_csv(f, rows);
  write_bench_csv(log, rows);
  return 0;
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Flex-convolution engine"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::string> out_path, checkpoint, input;
  const std::vector<std::pair<const char*, const char*>> commands = {
      {"gen", "Write a toy or synthetic dataset"},
      {"train", "Train on a task and write loss log, metrics and checkpoint"},
      {"infer", "Label a point cloud with a trained checkpoint"},
      {"eval", "Evaluate a checkpoint on held-out scenes"},
      {"bench", "Time one flex-convolution layer across sizes"},
  };
  std::string chosen;
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "Config file (key = value lines)")->required();
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--threads", threads, "Worker threads");
    sub->add_option("--out", out_path, "Output directory");
    sub->add_option("--checkpoint", checkpoint, "Checkpoint path");
    sub->add_option("--input", input, "Input cloud for infer");
    sub->callback([&chosen, n = std::string(name)] { chosen = n; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, er;
    const int code = app.exit(e, o, er);
    out << o.str();
    err << er.str();
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig c = load_run_config(config_path);
    if (seed) c.seed = *seed;
    if (threads) c.threads = *threads;
    if (out_path) c.output_dir = *out_path;
    if (checkpoint) c.checkpoint = *checkpoint;
    if (input) c.input = *input;
    if (chosen == "gen") return cmd_gen(c, out);
    if (chosen == "train") return cmd_train(c, out);
    if (chosen == "infer") return cmd_infer(c, out);
    if (chosen == "eval") return cmd_eval(c, out);
    return cmd_bench(c, out);
  } catch (const EngineError& e) {
    err << "error [" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace flexconv
