#ifndef CONVBKI_LOCAL_MAP_HPP
#define CONVBKI_LOCAL_MAP_HPP

#include <Eigen/Core>

#include "convbki/cloud.hpp"
#include "convbki/grid.hpp"

namespace convbki {

// Rigid transform, rotation then translation.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Pose inverse() const;
  Pose operator*(const Pose& rhs) const;
  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return rotation * p + translation;
  }
  // Rejects non-orthonormal or reflecting rotation blocks.
  void validate(double tol = 1e-6) const;
};

// Pose of `current` expressed in the frame of the sequence's first pose:
// initial^{-1} * current. The map keeps the initial orientation forever and
// follows the sensor by integer-voxel translations only.
Pose relative_to_initial(const Pose& current, const Pose& initial);

// Integer voxel displacement between consecutive map-frame translations,
// rounding each translation to the voxel lattice half-away-from-zero.
Eigen::Vector3i voxel_shift(const Eigen::Vector3d& t_now,
                            const Eigen::Vector3d& t_prev, double resolution);

struct ShiftResult {
  Eigen::Vector3i shift;     // voxels to advance the grid this frame
  Eigen::Vector3d residual;  // t_now minus its lattice rounding, per axis
};

ShiftResult compute_shift(const Eigen::Vector3d& t_now,
                          const Eigen::Vector3d& t_prev, double resolution);

// Moves the grid window by an integer voxel offset: new voxel u takes the
// concentrations of old voxel u + shift, vacated voxels reset to zero, and
// the origin advances by resolution * shift. Surviving voxels keep their
// world position, so the move is lossless for them. Consumes the old grid.
DirichletVoxelGrid shift_grid(DirichletVoxelGrid grid,
                              const Eigen::Vector3i& shift);

// Applies a sensor-to-map transform to every position; evidence is untouched.
SemanticPointCloud cloud_to_map_frame(const SemanticPointCloud& cloud,
                                      const Pose& sensor_to_map);

}  // namespace convbki

#endif  // CONVBKI_LOCAL_MAP_HPP
