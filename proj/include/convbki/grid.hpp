#ifndef CONVBKI_GRID_HPP
#define CONVBKI_GRID_HPP

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace convbki {

// Dense axis-aligned voxel grid of per-class Dirichlet concentrations.
//
// Storage is class-major: alpha[c][ix][iy][iz], z fastest. Raw concentrations
// start at zero; the configured prior is added only inside stats queries, so
// map updates remain pure accumulations and the prior stays configurable.

struct GridConfig {
  double resolution = 0.2;  // meters per voxel
  Eigen::Vector3d min_bound{-20.0, -20.0, -3.2};
  Eigen::Vector3d max_bound{20.0, 20.0, 3.2};
  int num_classes = 2;
  double prior = 1e-3;  // per-class concentration added when querying stats
  std::vector<bool> dynamic_class_mask;  // empty means no dynamic classes

  // (max_bound - min_bound) / resolution, required integral within 1e-9.
  Eigen::Vector3i dims() const;
  bool is_dynamic(int c) const;
  void validate() const;
};

struct DirichletStats {
  Eigen::VectorXd expectation;
  Eigen::VectorXd variance;
  double eta = 0.0;
  bool has_evidence = false;
};

// Expectation/variance of a Dirichlet with concentrations alpha + prior.
// All-zero total concentration yields the uniform expectation with
// has_evidence = false instead of NaN. Negative entries are rejected.
DirichletStats dirichlet_stats(const Eigen::VectorXd& alpha, double prior);

// Smallest index attaining the maximum.
int argmax_class(std::span<const double> values);

class DirichletVoxelGrid {
 public:
  explicit DirichletVoxelGrid(GridConfig config);

  const GridConfig& config() const { return config_; }
  const Eigen::Vector3i& dims() const { return dims_; }
  int num_classes() const { return config_.num_classes; }
  double resolution() const { return config_.resolution; }

  // World position of the grid corner (voxel (0,0,0) lower corner). Advances
  // when the map is shifted; min_bound/max_bound describe only the initial box.
  const Eigen::Vector3d& origin() const { return origin_; }
  void set_origin(const Eigen::Vector3d& origin) { origin_ = origin; }

  std::size_t voxels_per_class() const { return voxels_per_class_; }
  std::span<double> alpha() { return alpha_; }
  std::span<const double> alpha() const { return {alpha_.data(), alpha_.size()}; }
  std::span<double> channel(int c);
  std::span<const double> channel(int c) const;

  // Linear index of a voxel within one class channel.
  std::size_t voxel_index(const Eigen::Vector3i& v) const {
    return (static_cast<std::size_t>(v.x()) * dims_.y() + v.y()) * dims_.z() +
           v.z();
  }
  double at(int c, const Eigen::Vector3i& v) const {
    return alpha_[c * voxels_per_class_ + voxel_index(v)];
  }
  double& at(int c, const Eigen::Vector3i& v) {
    return alpha_[c * voxels_per_class_ + voxel_index(v)];
  }

  bool in_bounds(const Eigen::Vector3i& v) const;

  // Floor discretization; boundary points belong to the higher-index voxel.
  // Out-of-bounds (or non-finite) positions map to nullopt.
  std::optional<Eigen::Vector3i> world_to_voxel(const Eigen::Vector3d& p) const;

  Eigen::Vector3d voxel_centroid(const Eigen::Vector3i& v) const;

  Eigen::VectorXd alpha_at(const Eigen::Vector3i& v) const;
  DirichletStats voxel_stats(const Eigen::Vector3i& v) const;

 private:
  GridConfig config_;
  Eigen::Vector3i dims_;
  Eigen::Vector3d origin_;
  std::size_t voxels_per_class_ = 0;
  std::vector<double> alpha_;
};

}  // namespace convbki

#endif  // CONVBKI_GRID_HPP
