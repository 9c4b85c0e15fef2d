#include "convbki/pipeline.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <stdexcept>

#include "convbki/dynamic.hpp"
#include "testing_util.hpp"

namespace convbki {
namespace {

using convbki::testing::temp_dir;

GridConfig sequence_grid_config() {
  GridConfig cfg;
  cfg.resolution = 0.2;
  cfg.min_bound = {-3.2, -3.2, 0.0};
  cfg.max_bound = {3.2, 3.2, 1.6};
  cfg.num_classes = 2;
  return cfg;
}

// A static world: a vertical wall of class 1 at x = 2 plus scattered class-0
// ground, observed by a sensor translating along +x. Frames are stored in
// sensor coordinates, so the mapper has to undo the motion itself.
SemanticPointCloud world_scene(std::mt19937& rng) {
  SemanticPointCloud world;
  world.num_classes = 2;
  std::uniform_real_distribution<double> ground_xy(-3.0, 3.0);
  for (double y = -1.0; y <= 1.0; y += 0.1) {
    for (double z = 0.3; z <= 1.3; z += 0.1) {
      world.positions.push_back({2.0, y, z});
      world.labels.push_back(1);
    }
  }
  for (int i = 0; i < 300; ++i) {
    world.positions.push_back({ground_xy(rng), ground_xy(rng), 0.05});
    world.labels.push_back(0);
  }
  return world;
}

// Writes frames, poses, and a manifest for a rigid scene swept by a sensor
// moving x_step meters between frames. Returns the loaded manifest.
SequenceManifest write_sequence(const std::string& dir,
                                const SemanticPointCloud& world, int num_frames,
                                double x_step, bool soft_frames = false) {
  std::filesystem::create_directories(dir);
  SequenceManifest m;
  std::vector<Pose> poses;
  for (int t = 0; t < num_frames; ++t) {
    Pose pose;
    pose.translation = {x_step * t, 0.0, 0.0};
    poses.push_back(pose);

    SemanticPointCloud frame = world;
    for (auto& p : frame.positions) p = pose.inverse().apply(p);
    if (soft_frames) frame.expand_labels_to_probs();
    if (soft_frames) frame.labels.clear();
    char name[32];
    std::snprintf(name, sizeof(name), "%03d.bin", t);
    save_cloud(dir + "/" + name, frame);
    m.frames.push_back(name);
  }
  save_poses(dir + "/poses.txt", poses);
  m.poses = "poses.txt";
  m.num_classes = world.num_classes;
  save_manifest(dir + "/manifest.json", m);
  return load_manifest(dir + "/manifest.json");
}

TEST(RunSequence, RebuildsAStaticWorldWhileMoving) {
  std::mt19937 rng(307);
  const std::string dir = temp_dir("seq_static");
  const SemanticPointCloud world = world_scene(rng);
  const SequenceManifest manifest = write_sequence(dir, world, 3, 1.0);
  const GridConfig cfg = sequence_grid_config();

  RunOptions options;
  options.filter_size = 3;
  options.collect_metrics = true;
  const RunResult result =
      run_sequence(manifest, cfg, KernelModel::single(2, 0.5), options);

  EXPECT_EQ(result.frames, 3u);
  ASSERT_EQ(result.shift_seconds.size(), 3u);
  ASSERT_EQ(result.update_seconds.size(), 3u);

  // The map frame equals the world frame (first pose is the identity), so the
  // wall must label as class 1 at its world position in the final window.
  const auto v = result.map.world_to_voxel({2.0, 0.0, 0.7});
  ASSERT_TRUE(v.has_value());
  const DirichletStats stats = result.map.voxel_stats(*v);
  EXPECT_TRUE(stats.has_evidence);
  EXPECT_GT(stats.expectation[1], stats.expectation[0]);

  EXPECT_GT(result.report.num_points, 0u);
  EXPECT_GT(result.report.accuracy, 0.9);
  EXPECT_GT(result.report.update_hz, 0.0);
}

// The window must advance before the frame is accumulated: a frame observed
// far ahead of the starting window has to land in the moved window, not be
// dropped against the stale one.
TEST(RunSequence, WindowAdvancesBeforeTheFrameLands) {
  const std::string dir = temp_dir("seq_order");
  std::filesystem::create_directories(dir);

  SemanticPointCloud near_origin;
  near_origin.num_classes = 2;
  near_origin.positions = {{0.5, 0.0, 0.5}};
  near_origin.labels = {0};
  save_cloud(dir + "/000.bin", near_origin);

  // Frame 1: the sensor has moved to x = 4, outside the original window
  // entirely, and sees a point half a meter ahead of itself.
  SemanticPointCloud ahead;
  ahead.num_classes = 2;
  ahead.positions = {{0.5, 0.0, 0.5}};
  ahead.labels = {1};
  save_cloud(dir + "/001.bin", ahead);

  std::vector<Pose> poses(2);
  poses[1].translation = {4.0, 0.0, 0.0};
  save_poses(dir + "/poses.txt", poses);

  SequenceManifest m;
  m.frames = {"000.bin", "001.bin"};
  m.poses = "poses.txt";
  m.num_classes = 2;
  save_manifest(dir + "/manifest.json", m);

  RunOptions options;
  options.filter_size = 3;
  const RunResult result =
      run_sequence(load_manifest(dir + "/manifest.json"), sequence_grid_config(),
                   KernelModel::single(2, 0.5), options);

  EXPECT_EQ(result.dropped_points, 0u);
  // World x = 4.5 sits beyond the original 3.2 edge but inside the shifted one.
  const auto v = result.map.world_to_voxel({4.5, 0.0, 0.5});
  ASSERT_TRUE(v.has_value());
  EXPECT_GT(result.map.at(1, *v), 0.5);
}

TEST(RunSequence, DynamicFieldRunsBetweenShiftAndUpdate) {
  const std::string dir = temp_dir("seq_dyn");
  std::filesystem::create_directories(dir);
  GridConfig cfg = sequence_grid_config();
  cfg.dynamic_class_mask = {false, true};

  SemanticPointCloud moving;
  moving.num_classes = 2;
  moving.positions = {{1.0, 1.0, 0.5}};
  moving.labels = {1};
  save_cloud(dir + "/000.bin", moving);

  SemanticPointCloud elsewhere;
  elsewhere.num_classes = 2;
  elsewhere.positions = {{-2.0, -2.0, 0.1}};
  elsewhere.labels = {0};
  save_cloud(dir + "/001.bin", elsewhere);

  save_poses(dir + "/poses.txt", std::vector<Pose>(2));

  DirichletVoxelGrid probe(cfg);
  // Survival zero: whatever the first frame wrote to the dynamic channel is
  // erased before the second frame lands.
  const DynamicField wipe =
      DynamicField::uniform(probe.dims(), {0.0, 0.0, 0.0}, 0.0);
  save_dynamic_field(dir + "/f0.bin", wipe, cfg.resolution);
  save_dynamic_field(dir + "/f1.bin", wipe, cfg.resolution);

  SequenceManifest m;
  m.frames = {"000.bin", "001.bin"};
  m.poses = "poses.txt";
  m.num_classes = 2;
  m.dynamic_fields = {"f0.bin", "f1.bin"};
  save_manifest(dir + "/manifest.json", m);

  RunOptions options;
  options.filter_size = 3;
  const RunResult result = run_sequence(load_manifest(dir + "/manifest.json"),
                                        cfg, KernelModel::single(2, 0.5), options);

  ASSERT_EQ(result.propagate_seconds.size(), 2u);
  const auto v = result.map.world_to_voxel({1.0, 1.0, 0.5});
  ASSERT_TRUE(v.has_value());
  EXPECT_EQ(result.map.at(1, *v), 0.0);  // wiped, and frame 2 was far away
  const auto g = result.map.world_to_voxel({-2.0, -2.0, 0.1});
  EXPECT_GT(result.map.at(0, *g), 0.5);  // static channel kept its evidence
}

TEST(RunSequence, MaxFramesAndPerFrameDumps) {
  std::mt19937 rng(311);
  const std::string dir = temp_dir("seq_dumps");
  const SequenceManifest manifest =
      write_sequence(dir, world_scene(rng), 3, 0.5);

  RunOptions options;
  options.filter_size = 3;
  options.max_frames = 2;
  options.frame_map_dir = dir + "/maps";
  options.save_variance = true;
  const RunResult result = run_sequence(manifest, sequence_grid_config(),
                                        KernelModel::single(2, 0.5), options);

  EXPECT_EQ(result.frames, 2u);
  EXPECT_TRUE(std::filesystem::exists(dir + "/maps/map_000000.bin"));
  EXPECT_TRUE(std::filesystem::exists(dir + "/maps/map_000001.bin"));
  EXPECT_FALSE(std::filesystem::exists(dir + "/maps/map_000002.bin"));
  EXPECT_TRUE(std::filesystem::exists(dir + "/maps/variance_000001.bin"));

  const DirichletVoxelGrid mid = load_map(dir + "/maps/map_000000.bin");
  EXPECT_EQ(mid.dims(), result.map.dims());
}

TEST(RunSequence, SoftFramesProvideTheirOwnTruth) {
  std::mt19937 rng(313);
  const std::string dir = temp_dir("seq_soft");
  const SequenceManifest manifest =
      write_sequence(dir, world_scene(rng), 2, 0.5, true);

  RunOptions options;
  options.filter_size = 3;
  options.collect_metrics = true;
  const RunResult result = run_sequence(manifest, sequence_grid_config(),
                                        KernelModel::single(2, 0.5), options);
  EXPECT_GT(result.report.num_points, 0u);
  EXPECT_GT(result.report.accuracy, 0.9);
}

TEST(RunSequence, RejectsInconsistentInputs) {
  std::mt19937 rng(317);
  const std::string dir = temp_dir("seq_bad");
  const SequenceManifest manifest =
      write_sequence(dir, world_scene(rng), 2, 0.5);

  GridConfig wrong = sequence_grid_config();
  wrong.num_classes = 3;
  RunOptions options;
  EXPECT_THROW(
      run_sequence(manifest, wrong, KernelModel::single(3, 0.5), options),
      std::invalid_argument);

  EXPECT_THROW(run_sequence(manifest, sequence_grid_config(),
                            KernelModel::single(3, 0.5), options),
               std::invalid_argument);

  // One pose too few for the frames on disk.
  SequenceManifest short_poses = manifest;
  std::vector<Pose> one(1);
  save_poses(dir + "/one_pose.txt", one);
  short_poses.poses = dir + "/one_pose.txt";
  EXPECT_THROW(run_sequence(short_poses, sequence_grid_config(),
                            KernelModel::single(2, 0.5), options),
               std::runtime_error);
}

TEST(Evaluate, FrozenConfusionAndIou) {
  // gt:   0 0 1 1 2
  // pred: 0 1 1 1 0
  const std::vector<int> pred{0, 1, 1, 1, 0};
  const std::vector<int> gt{0, 0, 1, 1, 2};
  const EvalReport r = evaluate(pred, gt, 4);

  EXPECT_EQ(r.num_points, 5u);
  EXPECT_EQ(r.confusion[0 * 4 + 0], 1);
  EXPECT_EQ(r.confusion[0 * 4 + 1], 1);
  EXPECT_EQ(r.confusion[1 * 4 + 1], 2);
  EXPECT_EQ(r.confusion[2 * 4 + 0], 1);
  EXPECT_DOUBLE_EQ(r.accuracy, 3.0 / 5.0);

  // class 0: TP 1, FP 1, FN 1 -> 1/3; class 1: TP 2, FP 1, FN 0 -> 2/3;
  // class 2: TP 0, FP 0, FN 1 -> 0; class 3 absent everywhere -> NaN.
  EXPECT_DOUBLE_EQ(r.iou[0], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.iou[1], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.iou[2], 0.0);
  EXPECT_TRUE(std::isnan(r.iou[3]));
  EXPECT_DOUBLE_EQ(r.miou, (1.0 / 3.0 + 2.0 / 3.0 + 0.0) / 3.0);

  EXPECT_DOUBLE_EQ(r.precision(0), 1.0 / 2.0);
  EXPECT_DOUBLE_EQ(r.precision(1), 2.0 / 3.0);
  EXPECT_TRUE(std::isnan(r.precision(2)));  // never predicted
  EXPECT_DOUBLE_EQ(r.recall(1), 1.0);
  EXPECT_DOUBLE_EQ(r.recall(2), 0.0);
  EXPECT_TRUE(std::isnan(r.recall(3)));  // never occurred

  // Row p of the normalized matrix is the truth distribution of the points
  // predicted as p.
  const std::vector<double> n = r.prediction_normalized();
  EXPECT_DOUBLE_EQ(n[0 * 4 + 0], 0.5);
  EXPECT_DOUBLE_EQ(n[0 * 4 + 2], 0.5);
  EXPECT_DOUBLE_EQ(n[1 * 4 + 0], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(n[1 * 4 + 1], 2.0 / 3.0);
  for (int g = 0; g < 4; ++g) EXPECT_EQ(n[2 * 4 + g], 0.0);

  const std::string text = r.summary({"road", "car", "pole", "unused"});
  EXPECT_NE(text.find("car"), std::string::npos);
  EXPECT_NE(text.find("mIoU"), std::string::npos);
}

TEST(Evaluate, RejectsMismatchedSpans) {
  const std::vector<int> pred{0, 1};
  const std::vector<int> gt{0};
  EXPECT_THROW(evaluate(pred, gt, 2), std::invalid_argument);
  EXPECT_THROW(evaluate(pred, pred, 0), std::invalid_argument);
  const std::vector<int> bad{0, 7};
  const std::vector<int> gt2{0, 1};
  EXPECT_THROW(evaluate(bad, gt2, 2), std::out_of_range);
}

}  // namespace
}  // namespace convbki
