// Command-line driver: sequential mapping over recorded sequences, kernel
// training, map evaluation, filter dumps, and an update-throughput benchmark.

#include <CLI11.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <exception>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "convbki/eval.hpp"
#include "convbki/io.hpp"
#include "convbki/pipeline.hpp"
#include "convbki/training.hpp"
#include "convbki/update.hpp"

namespace {

using namespace convbki;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// Without an explicit config the grid and kernel adopt the sequence's class
// count; with one, a mismatch is a configuration error worth surfacing.
void adopt_classes(AppConfig& cfg, bool explicit_config, int num_classes) {
  if (explicit_config || cfg.grid.num_classes == num_classes) return;
  cfg.grid.num_classes = num_classes;
  cfg.grid.dynamic_class_mask.clear();
  cfg.kernel = KernelModel::single(num_classes, cfg.train.initial_length);
  cfg.train.grid = cfg.grid;
}

std::vector<int> truth_labels(const SemanticPointCloud& cloud) {
  if (cloud.has_labels()) return cloud.labels;
  std::vector<int> labels(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    labels[i] = argmax_class(std::span<const double>(
        cloud.class_probs.data() + i * cloud.num_classes, cloud.num_classes));
  }
  return labels;
}

SemanticPointCloud random_bench_cloud(std::mt19937& rng, std::size_t n,
                                      const GridConfig& cfg) {
  SemanticPointCloud cloud;
  cloud.num_classes = cfg.num_classes;
  std::uniform_real_distribution<double> mass(0.05, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Vector3d p;
    for (int a = 0; a < 3; ++a) {
      p[a] = std::uniform_real_distribution<double>(cfg.min_bound[a],
                                                    cfg.max_bound[a])(rng);
    }
    cloud.positions.push_back(p);
    double sum = 0.0;
    std::vector<double> row(cloud.num_classes);
    for (double& v : row) sum += v = mass(rng);
    for (const double v : row) cloud.class_probs.push_back(v / sum);
  }
  return cloud;
}

int run_map(const std::string& manifest_path, AppConfig cfg,
            bool explicit_config, const std::string& model_path,
            const std::string& out, const std::string& frame_maps,
            const std::string& variance_out, const std::string& bev_out,
            bool metrics, int max_frames, int filter_size) {
  const SequenceManifest manifest = load_manifest(manifest_path);
  adopt_classes(cfg, explicit_config, manifest.num_classes);
  if (!model_path.empty()) cfg.kernel = load_kernel_model(model_path);
  if (filter_size > 0) cfg.filter_size = filter_size;

  RunOptions options;
  options.filter_size = cfg.filter_size;
  options.collect_metrics = metrics;
  options.max_frames = max_frames;
  options.frame_map_dir = frame_maps;
  options.save_variance = !variance_out.empty();

  const RunResult result = run_sequence(manifest, cfg.grid, cfg.kernel, options);

  std::size_t occupied = 0;
  for (int x = 0; x < result.map.dims().x(); ++x) {
    for (int y = 0; y < result.map.dims().y(); ++y) {
      for (int z = 0; z < result.map.dims().z(); ++z) {
        occupied += result.map.voxel_stats({x, y, z}).has_evidence;
      }
    }
  }
  std::printf("frames mapped: %zu\n", result.frames);
  std::printf("points outside the window: %zu\n", result.dropped_points);
  std::printf("voxels with evidence: %zu\n", occupied);
  if (metrics) std::fputs(result.report.summary(manifest.class_names).c_str(), stdout);

  if (!out.empty()) {
    save_map(out, result.map);
    std::printf("map written to %s\n", out.c_str());
  }
  if (!variance_out.empty()) {
    write_variance_grid(variance_out, result.map);
    std::printf("variance grid written to %s\n", variance_out.c_str());
  }
  if (!bev_out.empty()) {
    write_bev_csv(bev_out, result.map);
    std::printf("top-down view written to %s\n", bev_out.c_str());
  }
  return 0;
}

int run_train(const std::string& manifest_path, AppConfig cfg,
              bool explicit_config, const std::string& model_out,
              const std::string& trace_out, int max_samples,
              bool auto_weights) {
  const SequenceManifest manifest = load_manifest(manifest_path);
  adopt_classes(cfg, explicit_config, manifest.num_classes);
  const std::vector<Pose> poses = load_poses(manifest.poses);
  if (poses.size() != manifest.frames.size()) {
    throw std::runtime_error("pose count does not match frame count");
  }

  const int window = cfg.train.window;
  if (manifest.frames.size() < static_cast<std::size_t>(window)) {
    throw std::runtime_error("sequence shorter than the training window");
  }

  std::vector<TrainSample> samples;
  for (std::size_t t = window - 1; t < manifest.frames.size(); ++t) {
    if (max_samples > 0 &&
        samples.size() == static_cast<std::size_t>(max_samples)) {
      break;
    }
    TrainSample sample;
    for (std::size_t h = t - window + 1; h < t; ++h) {
      sample.history.push_back(load_cloud(manifest.frames[h]));
      sample.history_poses.push_back(poses[h]);
    }
    sample.target = load_cloud(manifest.frames[t]);
    sample.target_pose = poses[t];
    samples.push_back(std::move(sample));
  }
  std::printf("training on %zu windows of %d frames\n", samples.size(), window);

  if (auto_weights || cfg.auto_class_weights) {
    cfg.train.class_weights =
        inverse_frequency_weights(samples, cfg.grid.num_classes);
  }

  const TrainResult result = train(samples, cfg.kernel, cfg.train);
  std::printf("loss %.6g -> %.6g over %zu steps\n", result.trace.front().loss,
              result.trace.back().loss, result.trace.size());
  std::printf("%s", kernel_model_to_text(result.model).c_str());

  if (!model_out.empty()) {
    save_kernel_model(model_out, result.model);
    std::printf("model written to %s\n", model_out.c_str());
  }
  if (!trace_out.empty()) {
    write_loss_trace_csv(trace_out, result.trace, result.model);
    std::printf("loss trace written to %s\n", trace_out.c_str());
  }
  return 0;
}

int run_eval(const std::string& map_path, const std::string& cloud_path,
             const std::string& bev_out, double prior) {
  const DirichletVoxelGrid grid = load_map(map_path, prior);
  const SemanticPointCloud cloud = load_cloud(cloud_path);
  if (cloud.num_classes != grid.num_classes()) {
    throw std::runtime_error("cloud and map class counts differ");
  }

  const std::vector<int> truth = truth_labels(cloud);
  std::vector<int> predictions, kept_truth;
  const std::vector<PointQuery> answers = query(grid, cloud.positions);
  for (std::size_t i = 0; i < answers.size(); ++i) {
    if (answers[i].status == PointQuery::Status::kOutOfBounds) continue;
    predictions.push_back(answers[i].label);
    kept_truth.push_back(truth[i]);
  }
  std::printf("%zu of %zu points inside the map\n", predictions.size(),
              cloud.size());
  const EvalReport report =
      evaluate(predictions, kept_truth, grid.num_classes());
  std::fputs(report.summary().c_str(), stdout);

  if (!bev_out.empty()) {
    write_bev_csv(bev_out, grid);
    std::printf("top-down view written to %s\n", bev_out.c_str());
  }
  return 0;
}

int run_kernel_dump(AppConfig cfg, const std::string& model_path,
                    const std::string& out, int filter_size,
                    double resolution) {
  if (!model_path.empty()) cfg.kernel = load_kernel_model(model_path);
  if (filter_size > 0) cfg.filter_size = filter_size;
  if (resolution <= 0.0) resolution = cfg.grid.resolution;
  write_filter_csv(out, build_filter(cfg.kernel, cfg.filter_size, resolution));
  std::printf("filter cells written to %s\n", out.c_str());
  return 0;
}

int run_bench(std::vector<double> resolutions, std::vector<int> filters,
              std::size_t points, int num_classes, int runs) {
  std::mt19937 rng(1);
  std::printf("%10s %6s %10s %12s %10s\n", "resolution", "filter", "occupied",
              "seconds", "Hz");
  for (const double res : resolutions) {
    GridConfig cfg;
    cfg.resolution = res;
    cfg.min_bound = {-20.0, -20.0, -3.2};
    cfg.max_bound = {20.0, 20.0, 3.2};
    cfg.num_classes = num_classes;
    DirichletVoxelGrid grid(cfg);
    const SemanticPointCloud cloud = random_bench_cloud(rng, points, cfg);
    const InputVolume input = voxelize(cloud, grid);

    for (const int f : filters) {
      // Length chosen to give every cell of this filter window a nonzero
      // weight, so the numbers reflect the full stencil.
      const KernelModel model =
          KernelModel::single(num_classes, 0.98 * res * ((f - 1) / 2 + 1));
      const FilterBank bank = build_filter(model, f, res);
      std::vector<double> times;
      for (int r = 0; r < runs; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        update(grid, input, bank);
        times.push_back(seconds_since(t0));
      }
      std::sort(times.begin(), times.end());
      const double median = times[times.size() / 2];
      std::printf("%10.2f %6d %10zu %12.4f %10.1f\n", res, f,
                  input.occupied.size(), median, 1.0 / median);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic occupancy mapping over recorded point cloud sequences"};
  app.require_subcommand(1);

  std::string config_path, manifest_path, model_path, model_out, trace_out;
  std::string out, frame_maps, variance_out, bev_out, map_path, cloud_path;
  bool metrics = false, auto_weights = false;
  int max_frames = 0, filter_size = 0, max_samples = 0, runs = 3;
  int bench_classes = 11;
  std::size_t bench_points = 100000;
  double resolution = 0.0, prior = 1e-3;
  std::vector<double> resolutions{0.4, 0.2};
  std::vector<int> filters{3, 5, 7};

  app.add_option("--config", config_path, "JSON configuration file");

  CLI::App* map_cmd = app.add_subcommand("map", "Map a recorded sequence");
  map_cmd->add_option("--manifest", manifest_path, "sequence manifest JSON")
      ->required();
  map_cmd->add_option("--model", model_path, "kernel model file");
  map_cmd->add_option("--out", out, "write the final map here");
  map_cmd->add_option("--frame-maps", frame_maps, "directory for per-frame maps");
  map_cmd->add_option("--variance-out", variance_out,
                      "write the final per-voxel variance grid here");
  map_cmd->add_option("--bev", bev_out, "write a top-down class CSV here");
  map_cmd->add_flag("--metrics", metrics, "score predictions against labels");
  map_cmd->add_option("--max-frames", max_frames, "stop after this many frames");
  map_cmd->add_option("--filter-size", filter_size, "odd filter edge length");

  CLI::App* train_cmd =
      app.add_subcommand("train", "Fit kernel lengths on a labeled sequence");
  train_cmd->add_option("--manifest", manifest_path, "sequence manifest JSON")
      ->required();
  train_cmd->add_option("--model-out", model_out, "write the fitted model here");
  train_cmd->add_option("--trace-out", trace_out, "write the loss trace CSV here");
  train_cmd->add_option("--max-samples", max_samples, "cap the training windows");
  train_cmd->add_flag("--auto-weights", auto_weights,
                      "inverse-frequency class weights");

  CLI::App* eval_cmd =
      app.add_subcommand("eval", "Score a saved map against a labeled frame");
  eval_cmd->add_option("--map", map_path, "saved map file")->required();
  eval_cmd->add_option("--cloud", cloud_path, "labeled frame, map coordinates")
      ->required();
  eval_cmd->add_option("--bev", bev_out, "write a top-down class CSV here");
  eval_cmd->add_option("--prior", prior, "Dirichlet prior for the queries");

  CLI::App* dump_cmd =
      app.add_subcommand("kernel-dump", "Write discretized filter cells as CSV");
  dump_cmd->add_option("--out", out, "output CSV path")->required();
  dump_cmd->add_option("--model", model_path, "kernel model file");
  dump_cmd->add_option("--filter-size", filter_size, "odd filter edge length");
  dump_cmd->add_option("--resolution", resolution, "voxel edge length");

  CLI::App* bench_cmd =
      app.add_subcommand("bench", "Time the update across grid settings");
  bench_cmd->add_option("--resolutions", resolutions, "voxel sizes to sweep");
  bench_cmd->add_option("--filters", filters, "filter sizes to sweep");
  bench_cmd->add_option("--points", bench_points, "points per synthetic frame");
  bench_cmd->add_option("--classes", bench_classes, "semantic classes");
  bench_cmd->add_option("--runs", runs, "timed repetitions per setting");

  CLI11_PARSE(app, argc, argv);

  try {
    AppConfig cfg =
        config_path.empty() ? default_app_config() : load_app_config(config_path);
    const bool explicit_config = !config_path.empty();
    if (map_cmd->parsed()) {
      return run_map(manifest_path, cfg, explicit_config, model_path, out,
                     frame_maps, variance_out, bev_out, metrics, max_frames,
                     filter_size);
    }
    if (train_cmd->parsed()) {
      return run_train(manifest_path, cfg, explicit_config, model_out,
                       trace_out, max_samples, auto_weights);
    }
    if (eval_cmd->parsed()) {
      return run_eval(map_path, cloud_path, bev_out, prior);
    }
    if (dump_cmd->parsed()) {
      return run_kernel_dump(cfg, model_path, out, filter_size, resolution);
    }
    if (bench_cmd->parsed()) {
      return run_bench(resolutions, filters, bench_points, bench_classes, runs);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
