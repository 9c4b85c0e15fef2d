#include "convbki/dynamic.hpp"

#include <cmath>
#include <span>
#include <stdexcept>

namespace convbki {
namespace {

// Fractional lattice coordinates this close to a plane collapse onto it;
// whole-voxel motions then gather a single voxel with weight exactly 1.
constexpr double kSnapEps = 1e-9;

struct AxisSplit {
  int base = 0;
  double frac = 0.0;
};

AxisSplit split_axis(double g) {
  double base = std::floor(g);
  double frac = g - base;
  if (frac <= kSnapEps) {
    frac = 0.0;
  } else if (frac >= 1.0 - kSnapEps) {
    base += 1.0;
    frac = 0.0;
  }
  return {static_cast<int>(base), frac};
}

// Trilinear gather on the centroid lattice; g is in units of voxels with
// integer values at centroids. Out-of-grid corners contribute zero.
double lattice_gather(std::span<const double> channel, const Eigen::Vector3i& dims,
                      const Eigen::Vector3d& g) {
  for (int a = 0; a < 3; ++a) {
    if (!(g[a] > -1.0) || !(g[a] < static_cast<double>(dims[a]))) return 0.0;
  }
  const AxisSplit ax = split_axis(g.x());
  const AxisSplit ay = split_axis(g.y());
  const AxisSplit az = split_axis(g.z());
  double sum = 0.0;
  for (int cx = 0; cx < 2; ++cx) {
    const double wx = cx ? ax.frac : 1.0 - ax.frac;
    const int ix = ax.base + cx;
    if (wx == 0.0 || ix < 0 || ix >= dims.x()) continue;
    for (int cy = 0; cy < 2; ++cy) {
      const double wy = cy ? ay.frac : 1.0 - ay.frac;
      const int iy = ay.base + cy;
      if (wy == 0.0 || iy < 0 || iy >= dims.y()) continue;
      for (int cz = 0; cz < 2; ++cz) {
        const double wz = cz ? az.frac : 1.0 - az.frac;
        const int iz = az.base + cz;
        if (wz == 0.0 || iz < 0 || iz >= dims.z()) continue;
        const std::size_t idx =
            (static_cast<std::size_t>(ix) * dims.y() + iy) * dims.z() + iz;
        sum += wx * wy * wz * channel[idx];
      }
    }
  }
  return sum;
}

}  // namespace

void DynamicField::validate() const {
  const std::size_t n =
      static_cast<std::size_t>(dims.x()) * dims.y() * dims.z();
  if (dims.minCoeff() < 1) throw std::invalid_argument("dynamic field has empty dims");
  if (offsets.size() != 3 * n) {
    throw std::invalid_argument("dynamic field offset count does not match dims");
  }
  if (probs.size() != n) {
    throw std::invalid_argument("dynamic field probability count does not match dims");
  }
  for (double o : offsets) {
    if (!std::isfinite(o)) throw std::invalid_argument("non-finite dynamic offset");
  }
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw std::invalid_argument("dynamic survival probability outside [0, 1]");
    }
  }
}

DynamicField DynamicField::uniform(const Eigen::Vector3i& dims,
                                   const Eigen::Vector3d& offset, double prob,
                                   bool in_voxels) {
  DynamicField f;
  f.dims = dims;
  f.offsets_in_voxels = in_voxels;
  const std::size_t n = static_cast<std::size_t>(dims.x()) * dims.y() * dims.z();
  f.offsets.resize(3 * n);
  for (std::size_t v = 0; v < n; ++v) {
    f.offsets[3 * v] = offset.x();
    f.offsets[3 * v + 1] = offset.y();
    f.offsets[3 * v + 2] = offset.z();
  }
  f.probs.assign(n, prob);
  f.validate();
  return f;
}

double trilinear_sample(const DirichletVoxelGrid& grid, const Eigen::Vector3d& p,
                        int c) {
  if (c < 0 || c >= grid.num_classes()) {
    throw std::out_of_range("class index outside grid");
  }
  if (!p.allFinite()) return 0.0;
  Eigen::Vector3d g;
  for (int a = 0; a < 3; ++a) {
    g[a] = (p[a] - grid.origin()[a]) / grid.resolution() - 0.5;
  }
  return lattice_gather(grid.channel(c), grid.dims(), g);
}

DirichletVoxelGrid propagate_dynamic(const DirichletVoxelGrid& prev,
                                     const DynamicField& field) {
  field.validate();
  if (field.dims != prev.dims()) {
    throw std::invalid_argument("dynamic field dims do not match grid");
  }
  DirichletVoxelGrid out = prev;

  const GridConfig& cfg = prev.config();
  const Eigen::Vector3i dims = prev.dims();
  const double res = prev.resolution();
  for (int c = 0; c < cfg.num_classes; ++c) {
    if (!cfg.is_dynamic(c)) continue;  // static classes keep their copy
    const std::span<const double> src = prev.channel(c);
    std::span<double> dst = out.channel(c);
    std::size_t v = 0;
    for (int x = 0; x < dims.x(); ++x) {
      for (int y = 0; y < dims.y(); ++y) {
        for (int z = 0; z < dims.z(); ++z, ++v) {
          const double* o = &field.offsets[3 * v];
          Eigen::Vector3d g(static_cast<double>(x), static_cast<double>(y),
                            static_cast<double>(z));
          if (field.offsets_in_voxels) {
            g += Eigen::Vector3d(o[0], o[1], o[2]);
          } else {
            g += Eigen::Vector3d(o[0] / res, o[1] / res, o[2] / res);
          }
          dst[v] = field.probs[v] * lattice_gather(src, dims, g);
        }
      }
    }
  }
  return out;
}

}  // namespace convbki
