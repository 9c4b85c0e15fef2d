#ifndef CONVBKI_IO_HPP
#define CONVBKI_IO_HPP

#include <string>
#include <vector>

#include "convbki/cloud.hpp"
#include "convbki/dynamic.hpp"
#include "convbki/grid.hpp"
#include "convbki/kernels.hpp"
#include "convbki/local_map.hpp"
#include "convbki/training.hpp"
#include "convbki/update.hpp"

namespace convbki {

// --- binary frame format ("CBKI") ------------------------------------------
// magic "CBKI", u32 version = 1, u32 point count, u32 class count,
// u8 mode (0 = hard labels, 1 = soft probability rows), then per point:
//   f32 x, y, z followed by u32 label (hard) or C * f32 probabilities (soft).
// Little-endian throughout. Payload length is validated against the header.

SemanticPointCloud load_cloud(const std::string& path);
void save_cloud(const std::string& path, const SemanticPointCloud& cloud);

// --- binary map format ("CBKM") --------------------------------------------
// magic "CBKM", u32 version = 1, f64 resolution, u32 dims x/y/z, u32 classes,
// f64 origin x/y/z, then f32 concentrations in class-major order
// (((c * X + x) * Y + y) * Z + z). Concentrations are stored single-precision;
// the prior and dynamic mask are runtime configuration, not map state.

void save_map(const std::string& path, const DirichletVoxelGrid& grid);
DirichletVoxelGrid load_map(const std::string& path, double prior = 1e-3,
                            std::vector<bool> dynamic_class_mask = {});

// --- dynamic field format ("CBKD") -----------------------------------------
// magic "CBKD", u32 version = 1, u32 dims x/y/z, f64 resolution,
// u8 offsets_in_voxels, then per voxel f32 offset x/y/z, then per voxel
// f32 survival probability.

void save_dynamic_field(const std::string& path, const DynamicField& field,
                        double resolution);
DynamicField load_dynamic_field(const std::string& path,
                                double expected_resolution = 0.0);

// --- poses ------------------------------------------------------------------
// One pose per line: the upper 3x4 of the homogeneous matrix, row-major
// (r11 r12 r13 tx r21 ... tz). Rotations are validated on load.

std::vector<Pose> load_poses(const std::string& path);
void save_poses(const std::string& path, const std::vector<Pose>& poses);

// --- kernel model -----------------------------------------------------------

void save_kernel_model(const std::string& path, const KernelModel& model);
KernelModel load_kernel_model(const std::string& path);

// --- sequence manifest (JSON) ----------------------------------------------
// { "frames": [...], "poses": "...", "num_classes": N,
//   "dynamic_fields": [...]?, "class_names": [...]? }
// Relative paths resolve against the manifest's directory.

struct SequenceManifest {
  std::vector<std::string> frames;
  std::string poses;
  int num_classes = 0;
  std::vector<std::string> dynamic_fields;  // empty or one per frame
  std::vector<std::string> class_names;     // empty or one per class
};

SequenceManifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const SequenceManifest& manifest);

// --- reports and dumps ------------------------------------------------------

void write_loss_trace_csv(const std::string& path,
                          const std::vector<TrainResult::Step>& trace,
                          const KernelModel& model);

// Per-voxel variance of the most likely class ("CBKV"): magic, u32 version,
// f64 resolution, u32 dims x/y/z, f64 origin x/y/z, f32 per voxel.
void write_variance_grid(const std::string& path, const DirichletVoxelGrid& grid);

// Long-form CSV of every filter cell: class, centered voxel offset, metric
// offset, weight.
void write_filter_csv(const std::string& path, const FilterBank& bank);

// Qualitative top-down view: one CSV row per x index, one column per y index,
// holding the most likely class of the highest voxel with evidence in that
// column (-1 where the column is empty).
void write_bev_csv(const std::string& path, const DirichletVoxelGrid& grid);

// --- application config (JSON) ---------------------------------------------

struct AppConfig {
  GridConfig grid;
  KernelModel kernel = KernelModel::single(2, 0.5);
  int filter_size = 5;
  TrainConfig train;
  bool auto_class_weights = false;
};

AppConfig default_app_config();
AppConfig load_app_config(const std::string& path);

}  // namespace convbki

#endif  // CONVBKI_IO_HPP
