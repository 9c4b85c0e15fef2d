#include "convbki/local_map.hpp"

#include <Eigen/LU>

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace convbki {

Pose Pose::inverse() const {
  Pose out;
  out.rotation = rotation.transpose();
  out.translation = -(out.rotation * translation);
  return out;
}

Pose Pose::operator*(const Pose& rhs) const {
  Pose out;
  out.rotation = rotation * rhs.rotation;
  out.translation = rotation * rhs.translation + translation;
  return out;
}

void Pose::validate(double tol) const {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw std::invalid_argument("pose has non-finite entries");
  }
  const Eigen::Matrix3d gram = rotation.transpose() * rotation;
  if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > tol) {
    throw std::invalid_argument("pose rotation is not orthonormal");
  }
  if (std::abs(rotation.determinant() - 1.0) > tol) {
    throw std::invalid_argument("pose rotation is not proper (det != 1)");
  }
}

Pose relative_to_initial(const Pose& current, const Pose& initial) {
  return initial.inverse() * current;
}

namespace {

// Half-away-from-zero lattice rounding of one translation component.
int lattice_round(double t, double resolution) {
  return static_cast<int>(std::round(t / resolution));
}

}  // namespace

Eigen::Vector3i voxel_shift(const Eigen::Vector3d& t_now,
                            const Eigen::Vector3d& t_prev, double resolution) {
  if (!(resolution > 0.0)) throw std::invalid_argument("resolution must be positive");
  Eigen::Vector3i out;
  for (int a = 0; a < 3; ++a) {
    out[a] = lattice_round(t_now[a], resolution) - lattice_round(t_prev[a], resolution);
  }
  return out;
}

ShiftResult compute_shift(const Eigen::Vector3d& t_now,
                          const Eigen::Vector3d& t_prev, double resolution) {
  ShiftResult out;
  out.shift = voxel_shift(t_now, t_prev, resolution);
  for (int a = 0; a < 3; ++a) {
    out.residual[a] = t_now[a] - resolution * lattice_round(t_now[a], resolution);
  }
  return out;
}

DirichletVoxelGrid shift_grid(DirichletVoxelGrid grid, const Eigen::Vector3i& shift) {
  if (shift == Eigen::Vector3i::Zero()) return grid;

  DirichletVoxelGrid out(grid.config());
  out.set_origin(grid.origin() + grid.resolution() * shift.cast<double>());

  const Eigen::Vector3i dims = grid.dims();
  const int dz = dims.z();
  // Overlap of the destination index range with the shifted source range.
  Eigen::Vector3i lo, hi;
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::max(0, -shift[a]);
    hi[a] = std::min(dims[a], dims[a] - shift[a]);  // exclusive
  }
  if (lo.x() >= hi.x() || lo.y() >= hi.y() || lo.z() >= hi.z()) {
    return out;  // moved clear of the old window; nothing survives
  }

  const std::size_t run = static_cast<std::size_t>(hi.z() - lo.z());
  for (int c = 0; c < grid.num_classes(); ++c) {
    const std::span<const double> src = grid.channel(c);
    std::span<double> dst = out.channel(c);
    for (int x = lo.x(); x < hi.x(); ++x) {
      for (int y = lo.y(); y < hi.y(); ++y) {
        const std::size_t d0 =
            (static_cast<std::size_t>(x) * dims.y() + y) * dz + lo.z();
        const std::size_t s0 =
            (static_cast<std::size_t>(x + shift.x()) * dims.y() + (y + shift.y())) * dz +
            (lo.z() + shift.z());
        std::memcpy(dst.data() + d0, src.data() + s0, run * sizeof(double));
      }
    }
  }
  return out;
}

SemanticPointCloud cloud_to_map_frame(const SemanticPointCloud& cloud,
                                      const Pose& sensor_to_map) {
  SemanticPointCloud out = cloud;
  for (auto& p : out.positions) p = sensor_to_map.apply(p);
  return out;
}

}  // namespace convbki
