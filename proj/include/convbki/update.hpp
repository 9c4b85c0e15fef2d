#ifndef CONVBKI_UPDATE_HPP
#define CONVBKI_UPDATE_HPP

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

#include "convbki/cloud.hpp"
#include "convbki/grid.hpp"
#include "convbki/kernels.hpp"

namespace convbki {

// Per-class evidence mass accumulated on the voxel lattice: the input volume
// of one measurement update. Shares the class-major layout of the grid.
struct InputVolume {
  Eigen::Vector3i dims{0, 0, 0};
  int num_classes = 0;
  double resolution = 0.0;
  std::vector<double> mass;         // C * X * Y * Z
  std::vector<int> point_counts;    // X * Y * Z
  std::vector<std::size_t> occupied;  // ascending linear indices with points
  std::size_t dropped_points = 0;   // points outside the grid

  std::span<const double> channel(int c) const {
    const std::size_t n = point_counts.size();
    return {mass.data() + c * n, n};
  }
};

// Bins a cloud into the grid frame. Evidence comes from probability rows when
// present, else from one-hot hard labels. Out-of-grid points are counted and
// dropped.
InputVolume voxelize(const SemanticPointCloud& cloud,
                     const DirichletVoxelGrid& grid);

// Scatter form of the depthwise convolution update: every occupied input
// voxel adds its class mass to neighbors under the per-class filter weights.
// Out-of-grid neighbors are discarded (zero padding). Accumulation order is
// fixed (class, then ascending input voxel, then row-major tap), so results
// are bit-identical across runs.
void update(DirichletVoxelGrid& grid, const InputVolume& input,
            const FilterBank& bank);

// Direct per-point reference update: each point adds kernel-weighted evidence
// to every voxel centroid inside its support. Points snap to the centroid of
// their voxel by default so the discretized filter update is its exact
// counterpart; exact positions are kept when snap_to_centroids is false.
void brute_force_update(DirichletVoxelGrid& grid,
                        const SemanticPointCloud& cloud,
                        const KernelModel& model,
                        bool snap_to_centroids = true);

struct PointQuery {
  enum class Status { kOk, kNoEvidence, kOutOfBounds };
  Status status = Status::kOutOfBounds;
  DirichletStats stats;
  int label = -1;
};

std::vector<PointQuery> query(const DirichletVoxelGrid& grid,
                              std::span<const Eigen::Vector3d> points);

}  // namespace convbki

#endif  // CONVBKI_UPDATE_HPP
