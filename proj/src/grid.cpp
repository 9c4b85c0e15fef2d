#include "convbki/grid.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace convbki {

Eigen::Vector3i GridConfig::dims() const {
  Eigen::Vector3i out;
  for (int a = 0; a < 3; ++a) {
    const double extent = (max_bound[a] - min_bound[a]) / resolution;
    const double snapped = std::round(extent);
    if (!(snapped >= 1.0) || std::abs(extent - snapped) > 1e-9) {
      throw std::invalid_argument(
          "grid extent on axis " + std::to_string(a) +
          " is not a positive integer multiple of the resolution");
    }
    out[a] = static_cast<int>(snapped);
  }
  return out;
}

bool GridConfig::is_dynamic(int c) const {
  if (dynamic_class_mask.empty()) return false;
  return dynamic_class_mask[static_cast<std::size_t>(c)];
}

void GridConfig::validate() const {
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw std::invalid_argument("grid resolution must be positive and finite");
  }
  if (num_classes < 1) {
    throw std::invalid_argument("grid needs at least one class");
  }
  for (int a = 0; a < 3; ++a) {
    if (!std::isfinite(min_bound[a]) || !std::isfinite(max_bound[a]) ||
        !(max_bound[a] > min_bound[a])) {
      throw std::invalid_argument("grid bounds must be finite with max > min");
    }
  }
  if (!(prior >= 0.0) || !std::isfinite(prior)) {
    throw std::invalid_argument("dirichlet prior must be non-negative");
  }
  if (!dynamic_class_mask.empty() &&
      dynamic_class_mask.size() != static_cast<std::size_t>(num_classes)) {
    throw std::invalid_argument("dynamic class mask size must match class count");
  }
  dims();  // throws when the box is not voxel-aligned
}

DirichletStats dirichlet_stats(const Eigen::VectorXd& alpha, double prior) {
  const int c = static_cast<int>(alpha.size());
  if (c < 1) throw std::invalid_argument("stats need at least one class");
  if (!(prior >= 0.0)) throw std::invalid_argument("negative prior");
  DirichletStats out;
  out.expectation.resize(c);
  out.variance.resize(c);
  double eta = 0.0;
  for (int i = 0; i < c; ++i) {
    if (!(alpha[i] >= 0.0) || !std::isfinite(alpha[i])) {
      throw std::invalid_argument("concentrations must be finite and >= 0");
    }
    eta += alpha[i] + prior;
  }
  out.eta = eta;
  out.has_evidence = alpha.sum() > 0.0;
  if (eta == 0.0) {
    // Degenerate zero-prior, zero-evidence voxel: report the uniform
    // expectation rather than 0/0.
    out.expectation.setConstant(1.0 / c);
    out.variance.setZero();
    return out;
  }
  for (int i = 0; i < c; ++i) {
    const double e = (alpha[i] + prior) / eta;
    out.expectation[i] = e;
    out.variance[i] = e * (1.0 - e) / (1.0 + eta);
  }
  return out;
}

int argmax_class(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("argmax of empty vector");
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

DirichletVoxelGrid::DirichletVoxelGrid(GridConfig config)
    : config_(std::move(config)) {
  config_.validate();
  dims_ = config_.dims();
  origin_ = config_.min_bound;
  voxels_per_class_ = static_cast<std::size_t>(dims_.x()) * dims_.y() * dims_.z();
  alpha_.assign(voxels_per_class_ * config_.num_classes, 0.0);
}

std::span<double> DirichletVoxelGrid::channel(int c) {
  return {alpha_.data() + c * voxels_per_class_, voxels_per_class_};
}

std::span<const double> DirichletVoxelGrid::channel(int c) const {
  return {alpha_.data() + c * voxels_per_class_, voxels_per_class_};
}

bool DirichletVoxelGrid::in_bounds(const Eigen::Vector3i& v) const {
  return v.x() >= 0 && v.x() < dims_.x() && v.y() >= 0 && v.y() < dims_.y() &&
         v.z() >= 0 && v.z() < dims_.z();
}

std::optional<Eigen::Vector3i> DirichletVoxelGrid::world_to_voxel(
    const Eigen::Vector3d& p) const {
  Eigen::Vector3i v;
  for (int a = 0; a < 3; ++a) {
    if (!std::isfinite(p[a])) return std::nullopt;
    const double cell = std::floor((p[a] - origin_[a]) / config_.resolution);
    if (cell < 0.0 || cell >= static_cast<double>(dims_[a])) return std::nullopt;
    v[a] = static_cast<int>(cell);
  }
  return v;
}

Eigen::Vector3d DirichletVoxelGrid::voxel_centroid(const Eigen::Vector3i& v) const {
  if (!in_bounds(v)) throw std::out_of_range("voxel index outside grid");
  return origin_ + config_.resolution * (v.cast<double>() +
                                         Eigen::Vector3d::Constant(0.5));
}

Eigen::VectorXd DirichletVoxelGrid::alpha_at(const Eigen::Vector3i& v) const {
  if (!in_bounds(v)) throw std::out_of_range("voxel index outside grid");
  Eigen::VectorXd out(config_.num_classes);
  const std::size_t base = voxel_index(v);
  for (int c = 0; c < config_.num_classes; ++c) {
    out[c] = alpha_[c * voxels_per_class_ + base];
  }
  return out;
}

DirichletStats DirichletVoxelGrid::voxel_stats(const Eigen::Vector3i& v) const {
  return dirichlet_stats(alpha_at(v), config_.prior);
}

}  // namespace convbki
