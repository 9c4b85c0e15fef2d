#ifndef CONVBKI_DYNAMIC_HPP
#define CONVBKI_DYNAMIC_HPP

#include <Eigen/Core>

#include <vector>

#include "convbki/grid.hpp"

namespace convbki {

// Per-voxel backward motion field for dynamic classes: the offset points from
// a voxel to the location its content came from in the previous map, and the
// survival probability scales whatever is sampled there. Offsets are meters
// unless offsets_in_voxels is set.
struct DynamicField {
  Eigen::Vector3i dims{0, 0, 0};
  std::vector<double> offsets;  // per voxel x,y,z triplet, voxel-major
  std::vector<double> probs;    // per voxel survival probability in [0, 1]
  bool offsets_in_voxels = false;

  void validate() const;

  static DynamicField uniform(const Eigen::Vector3i& dims,
                              const Eigen::Vector3d& offset, double prob,
                              bool in_voxels = false);
};

// Trilinear interpolation of one class channel at a world position, on the
// lattice of voxel centroids. Corners outside the grid contribute zero.
// Sample positions within 1e-9 of a lattice plane are snapped onto it, so
// whole-voxel offsets reduce to exact single-voxel gathers.
double trilinear_sample(const DirichletVoxelGrid& grid, const Eigen::Vector3d& p,
                        int c);

// Rebuilds every dynamic-class channel by sampling the previous map at each
// voxel plus its backward offset, scaled by the survival probability. Static
// channels are copied unchanged. The grid's dynamic_class_mask selects the
// dynamic set; with an empty mask this is a plain copy.
DirichletVoxelGrid propagate_dynamic(const DirichletVoxelGrid& prev,
                                     const DynamicField& field);

}  // namespace convbki

#endif  // CONVBKI_DYNAMIC_HPP
