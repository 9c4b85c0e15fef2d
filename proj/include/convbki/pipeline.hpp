#ifndef CONVBKI_PIPELINE_HPP
#define CONVBKI_PIPELINE_HPP

#include <string>
#include <vector>

#include "convbki/eval.hpp"
#include "convbki/grid.hpp"
#include "convbki/io.hpp"
#include "convbki/kernels.hpp"

namespace convbki {

struct RunOptions {
  int filter_size = 5;
  bool collect_metrics = false;   // needs labels (or probability rows) as truth
  int max_frames = 0;             // 0 means the whole sequence
  std::string frame_map_dir;      // when set, the map is saved after each frame
  bool save_variance = false;     // per-frame variance grids next to the maps
};

struct RunResult {
  DirichletVoxelGrid map;
  EvalReport report;  // populated when metrics were collected
  std::size_t frames = 0;
  std::size_t dropped_points = 0;
  std::vector<double> shift_seconds;      // per frame
  std::vector<double> propagate_seconds;  // per frame, zero without fields
  std::vector<double> update_seconds;     // per frame, measurement update only
};

// Sequential mapping over a recorded sequence. Per frame: advance the grid
// window to follow the sensor, resample dynamic classes when a motion field
// is supplied, transform the frame into the map frame, accumulate it, update.
// Predictions for the metrics are read back at the frame's own points right
// after its update.
RunResult run_sequence(const SequenceManifest& manifest, const GridConfig& config,
                       const KernelModel& model, const RunOptions& options);

}  // namespace convbki

#endif  // CONVBKI_PIPELINE_HPP
