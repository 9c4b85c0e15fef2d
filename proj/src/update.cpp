#include "convbki/update.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace convbki {
namespace {

void check_grid_volume(const DirichletVoxelGrid& grid, const InputVolume& input) {
  if (input.dims != grid.dims() || input.num_classes != grid.num_classes()) {
    throw std::invalid_argument("input volume shape does not match grid");
  }
  if (input.resolution != grid.resolution()) {
    throw std::invalid_argument("input volume resolution does not match grid");
  }
}

}  // namespace

InputVolume voxelize(const SemanticPointCloud& cloud,
                     const DirichletVoxelGrid& grid) {
  cloud.validate();
  if (cloud.num_classes != grid.num_classes()) {
    throw std::invalid_argument("cloud class count does not match grid");
  }
  if (!cloud.has_probs() && !cloud.has_labels()) {
    throw std::invalid_argument("cloud carries no evidence to voxelize");
  }

  InputVolume out;
  out.dims = grid.dims();
  out.num_classes = grid.num_classes();
  out.resolution = grid.resolution();
  const std::size_t n = grid.voxels_per_class();
  out.mass.assign(n * out.num_classes, 0.0);
  out.point_counts.assign(n, 0);

  const int num_classes = out.num_classes;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto v = grid.world_to_voxel(cloud.positions[i]);
    if (!v) {
      ++out.dropped_points;
      continue;
    }
    const std::size_t idx = grid.voxel_index(*v);
    ++out.point_counts[idx];
    if (cloud.has_probs()) {
      const double* row = cloud.prob_row(i);
      for (int c = 0; c < num_classes; ++c) {
        out.mass[c * n + idx] += row[c];
      }
    } else {
      out.mass[cloud.labels[i] * n + idx] += 1.0;
    }
  }
  for (std::size_t idx = 0; idx < n; ++idx) {
    if (out.point_counts[idx] > 0) out.occupied.push_back(idx);
  }
  return out;
}

void update(DirichletVoxelGrid& grid, const InputVolume& input,
            const FilterBank& bank) {
  check_grid_volume(grid, input);
  if (bank.num_classes != grid.num_classes()) {
    throw std::invalid_argument("filter class count does not match grid");
  }
  if (bank.resolution != grid.resolution()) {
    throw std::invalid_argument("filter was built for a different resolution");
  }

  const Eigen::Vector3i dims = grid.dims();
  const int dy = dims.y(), dz = dims.z();

  // Decompose occupied voxels once; the per-class loops reuse them.
  std::vector<Eigen::Vector3i> coords;
  coords.reserve(input.occupied.size());
  for (std::size_t idx : input.occupied) {
    const int z = static_cast<int>(idx % dz);
    const int y = static_cast<int>((idx / dz) % dy);
    const int x = static_cast<int>(idx / (static_cast<std::size_t>(dy) * dz));
    coords.emplace_back(x, y, z);
  }

  for (int c = 0; c < grid.num_classes(); ++c) {
    std::span<double> out = grid.channel(c);
    const std::span<const double> mass = input.channel(c);
    const auto& taps = bank.taps[c];
    for (std::size_t s = 0; s < input.occupied.size(); ++s) {
      const double m = mass[input.occupied[s]];
      if (m == 0.0) continue;
      const Eigen::Vector3i& p = coords[s];
      for (const auto& tap : taps) {
        const int x = p.x() + tap.dx;
        const int y = p.y() + tap.dy;
        const int z = p.z() + tap.dz;
        if (x < 0 || x >= dims.x() || y < 0 || y >= dy || z < 0 || z >= dz) {
          continue;
        }
        out[(static_cast<std::size_t>(x) * dy + y) * dz + z] += tap.w * m;
      }
    }
  }
}

void brute_force_update(DirichletVoxelGrid& grid,
                        const SemanticPointCloud& cloud,
                        const KernelModel& model,
                        bool snap_to_centroids) {
  cloud.validate();
  model.validate();
  if (cloud.num_classes != grid.num_classes()) {
    throw std::invalid_argument("cloud class count does not match grid");
  }
  if (!cloud.has_probs() && !cloud.has_labels()) {
    throw std::invalid_argument("cloud carries no evidence");
  }

  const double res = grid.resolution();
  const Eigen::Vector3i dims = grid.dims();
  const Eigen::Vector3d& origin = grid.origin();
  const int num_classes = grid.num_classes();

  std::vector<double> row_storage(num_classes);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto vi = grid.world_to_voxel(cloud.positions[i]);
    if (!vi) continue;  // dropped, mirroring voxelize
    const Eigen::Vector3d x =
        snap_to_centroids ? grid.voxel_centroid(*vi) : cloud.positions[i];

    const double* row;
    if (cloud.has_probs()) {
      row = cloud.prob_row(i);
    } else {
      std::fill(row_storage.begin(), row_storage.end(), 0.0);
      row_storage[cloud.labels[i]] = 1.0;
      row = row_storage.data();
    }

    for (int c = 0; c < num_classes; ++c) {
      const double y = row[c];
      if (y == 0.0) continue;
      const double rh = model.horizontal(c);
      const double rv = model.vertical(c);
      // Voxels whose centroid can fall inside the support box around x.
      Eigen::Vector3i lo, hi;
      for (int a = 0; a < 3; ++a) {
        const double reach = a == 2 ? rv : rh;
        lo[a] = std::max(
            0, static_cast<int>(std::ceil((x[a] - reach - origin[a]) / res - 0.5)));
        hi[a] = std::min(
            dims[a] - 1,
            static_cast<int>(std::floor((x[a] + reach - origin[a]) / res - 0.5)));
      }
      for (int ix = lo.x(); ix <= hi.x(); ++ix) {
        for (int iy = lo.y(); iy <= hi.y(); ++iy) {
          for (int iz = lo.z(); iz <= hi.z(); ++iz) {
            const Eigen::Vector3i v(ix, iy, iz);
            const double w = model.weight(c, grid.voxel_centroid(v) - x);
            if (w != 0.0) grid.at(c, v) += w * y;
          }
        }
      }
    }
  }
}

std::vector<PointQuery> query(const DirichletVoxelGrid& grid,
                              std::span<const Eigen::Vector3d> points) {
  std::vector<PointQuery> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto v = grid.world_to_voxel(points[i]);
    if (!v) continue;  // stays kOutOfBounds
    PointQuery& q = out[i];
    q.stats = grid.voxel_stats(*v);
    q.status = q.stats.has_evidence ? PointQuery::Status::kOk
                                    : PointQuery::Status::kNoEvidence;
    q.label = argmax_class(
        std::span<const double>(q.stats.expectation.data(),
                                static_cast<std::size_t>(q.stats.expectation.size())));
  }
  return out;
}

}  // namespace convbki
