#include "convbki/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "convbki/dynamic.hpp"
#include "convbki/local_map.hpp"
#include "convbki/update.hpp"

namespace convbki {
namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

std::vector<int> truth_labels(const SemanticPointCloud& cloud) {
  if (cloud.has_labels()) return cloud.labels;
  std::vector<int> labels(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double* row = cloud.prob_row(i);
    labels[i] = argmax_class({row, static_cast<std::size_t>(cloud.num_classes)});
  }
  return labels;
}

std::string frame_file(const std::string& dir, const char* stem, std::size_t t) {
  char name[64];
  std::snprintf(name, sizeof(name), "%s_%06zu.bin", stem, t);
  return (std::filesystem::path(dir) / name).string();
}

}  // namespace

RunResult run_sequence(const SequenceManifest& manifest, const GridConfig& config,
                       const KernelModel& model, const RunOptions& options) {
  config.validate();
  model.validate();
  if (config.num_classes != manifest.num_classes) {
    throw std::invalid_argument("grid class count does not match manifest");
  }
  if (model.num_classes != config.num_classes) {
    throw std::invalid_argument("kernel model class count does not match grid");
  }

  const std::vector<Pose> poses = load_poses(manifest.poses);
  if (poses.size() != manifest.frames.size()) {
    throw std::runtime_error("pose count does not match frame count");
  }
  const std::size_t total = options.max_frames > 0
                                ? std::min<std::size_t>(options.max_frames,
                                                        manifest.frames.size())
                                : manifest.frames.size();

  if (!options.frame_map_dir.empty()) {
    std::filesystem::create_directories(options.frame_map_dir);
  }

  RunResult result{.map = DirichletVoxelGrid(config),
                   .report = {},
                   .frames = 0,
                   .dropped_points = 0,
                   .shift_seconds = {},
                   .propagate_seconds = {},
                   .update_seconds = {}};
  const FilterBank bank =
      build_filter(model, options.filter_size, config.resolution);

  std::vector<int> all_pred, all_truth;
  const Pose initial = poses[0];
  Eigen::Vector3d prev_translation = Eigen::Vector3d::Zero();

  for (std::size_t t = 0; t < total; ++t) {
    const Pose rel = relative_to_initial(poses[t], initial);
    const ShiftResult sr =
        compute_shift(rel.translation, prev_translation, config.resolution);

    auto tick = std::chrono::steady_clock::now();
    result.map = shift_grid(std::move(result.map), sr.shift);
    result.shift_seconds.push_back(seconds_since(tick));

    double propagate_s = 0.0;
    if (!manifest.dynamic_fields.empty()) {
      const DynamicField field =
          load_dynamic_field(manifest.dynamic_fields[t], config.resolution);
      tick = std::chrono::steady_clock::now();
      result.map = propagate_dynamic(result.map, field);
      propagate_s = seconds_since(tick);
    }
    result.propagate_seconds.push_back(propagate_s);

    const SemanticPointCloud cloud = load_cloud(manifest.frames[t]);
    if (cloud.num_classes != config.num_classes) {
      throw std::runtime_error(manifest.frames[t] +
                               ": class count does not match grid");
    }
    const SemanticPointCloud mapped = cloud_to_map_frame(cloud, rel);
    const InputVolume input = voxelize(mapped, result.map);
    result.dropped_points += input.dropped_points;

    tick = std::chrono::steady_clock::now();
    update(result.map, input, bank);
    result.update_seconds.push_back(seconds_since(tick));

    if (options.collect_metrics) {
      const std::vector<int> truth = truth_labels(cloud);
      const std::vector<PointQuery> queries = query(result.map, mapped.positions);
      for (std::size_t i = 0; i < queries.size(); ++i) {
        if (queries[i].status == PointQuery::Status::kOutOfBounds) continue;
        all_pred.push_back(queries[i].label);
        all_truth.push_back(truth[i]);
      }
    }
    if (!options.frame_map_dir.empty()) {
      save_map(frame_file(options.frame_map_dir, "map", t), result.map);
      if (options.save_variance) {
        write_variance_grid(frame_file(options.frame_map_dir, "variance", t),
                            result.map);
      }
    }

    prev_translation = rel.translation;
    ++result.frames;
  }

  if (options.collect_metrics && !all_pred.empty()) {
    result.report = evaluate(all_pred, all_truth, config.num_classes);
    double update_total = 0.0;
    for (double s : result.update_seconds) update_total += s;
    if (update_total > 0.0) {
      result.report.update_hz = static_cast<double>(result.frames) / update_total;
    }
  }
  return result;
}

}  // namespace convbki
