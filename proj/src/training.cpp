#include "convbki/training.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace convbki {

void TrainConfig::validate() const {
  grid.validate();
  if (!(grid.prior > 0.0)) {
    throw std::invalid_argument("training requires a positive dirichlet prior");
  }
  if (window < 1) throw std::invalid_argument("window must cover at least one frame");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (epochs < 1) throw std::invalid_argument("epochs must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("adam moment decays must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw std::invalid_argument("adam epsilon must be positive");
  if (!class_weights.empty() &&
      class_weights.size() != static_cast<std::size_t>(grid.num_classes)) {
    throw std::invalid_argument("class weight count does not match classes");
  }
  if (!(initial_length > 0.0)) throw std::invalid_argument("initial length must be positive");
  if (filter_size < 1 || filter_size % 2 == 0) {
    throw std::invalid_argument("filter size must be odd and positive");
  }
}

namespace {

void accumulate_volume(InputVolume& total, const InputVolume& part) {
  for (std::size_t i = 0; i < total.mass.size(); ++i) total.mass[i] += part.mass[i];
  for (std::size_t i = 0; i < total.point_counts.size(); ++i) {
    total.point_counts[i] += part.point_counts[i];
  }
  total.dropped_points += part.dropped_points;
}

SemanticPointCloud with_probs(const SemanticPointCloud& cloud) {
  if (cloud.has_probs()) return cloud;
  SemanticPointCloud out = cloud;
  out.expand_labels_to_probs();
  return out;
}

}  // namespace

ForwardResult forward(const TrainSample& sample, const KernelModel& model,
                      const TrainConfig& config) {
  config.validate();
  model.validate();
  if (model.num_classes != config.grid.num_classes) {
    throw std::invalid_argument("kernel model class count does not match grid");
  }
  if (sample.history.size() != sample.history_poses.size()) {
    throw std::invalid_argument("history frame and pose counts differ");
  }
  if (!sample.target.has_labels()) {
    throw std::invalid_argument("target frame needs hard labels");
  }

  ForwardResult fr{.loss = 0.0,
                   .log_probs = {},
                   .target_voxel = {},
                   .num_valid = 0,
                   .map = DirichletVoxelGrid(config.grid),
                   .input = {}};

  // Map frame anchored at the target pose; every frame moves into it.
  fr.input.dims = fr.map.dims();
  fr.input.num_classes = fr.map.num_classes();
  fr.input.resolution = fr.map.resolution();
  const std::size_t n = fr.map.voxels_per_class();
  fr.input.mass.assign(n * fr.input.num_classes, 0.0);
  fr.input.point_counts.assign(n, 0);

  for (std::size_t k = 0; k < sample.history.size(); ++k) {
    const Pose rel = relative_to_initial(sample.history_poses[k], sample.target_pose);
    const SemanticPointCloud mapped =
        cloud_to_map_frame(with_probs(sample.history[k]), rel);
    accumulate_volume(fr.input, voxelize(mapped, fr.map));
  }
  if (sample.target.has_probs()) {
    accumulate_volume(fr.input, voxelize(sample.target, fr.map));
  }
  for (std::size_t idx = 0; idx < n; ++idx) {
    if (fr.input.point_counts[idx] > 0) fr.input.occupied.push_back(idx);
  }

  const FilterBank bank = build_filter(model, config.filter_size, fr.map.resolution());
  update(fr.map, fr.input, bank);

  // Posterior log expectation at every target point.
  const int num_classes = fr.map.num_classes();
  const std::size_t num_points = sample.target.size();
  fr.log_probs.assign(num_points * num_classes, -std::log(double(num_classes)));
  fr.target_voxel.assign(num_points, -1);
  std::vector<int> valid_labels;
  std::vector<double> valid_rows;
  for (std::size_t i = 0; i < num_points; ++i) {
    const auto v = fr.map.world_to_voxel(sample.target.positions[i]);
    if (!v) continue;
    fr.target_voxel[i] = static_cast<std::int64_t>(fr.map.voxel_index(*v));
    ++fr.num_valid;
    const Eigen::VectorXd alpha = fr.map.alpha_at(*v);
    const double eta = alpha.sum() + num_classes * fr.map.config().prior;
    for (int c = 0; c < num_classes; ++c) {
      const double lp = std::log((alpha[c] + fr.map.config().prior) / eta);
      fr.log_probs[i * num_classes + c] = lp;
      valid_rows.push_back(lp);
    }
    valid_labels.push_back(sample.target.labels[i]);
  }
  if (fr.num_valid == 0) {
    throw std::runtime_error("no target point falls inside the training grid");
  }
  fr.loss = nll_loss(valid_rows, valid_labels, config.class_weights, num_classes);
  return fr;
}

double nll_loss(std::span<const double> log_probs, std::span<const int> labels,
                std::span<const double> class_weights, int num_classes) {
  if (log_probs.size() != labels.size() * static_cast<std::size_t>(num_classes)) {
    throw std::invalid_argument("log prob rows do not match label count");
  }
  if (!class_weights.empty() &&
      class_weights.size() != static_cast<std::size_t>(num_classes)) {
    throw std::invalid_argument("class weight count does not match classes");
  }
  if (labels.empty()) throw std::invalid_argument("nll of zero rows");
  double total = 0.0, weight_sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || y >= num_classes) {
      throw std::out_of_range("label out of range at row " + std::to_string(i));
    }
    const double w = class_weights.empty() ? 1.0 : class_weights[y];
    total -= w * log_probs[i * num_classes + y];
    weight_sum += w;
  }
  if (weight_sum == 0.0) {
    throw std::invalid_argument("all realized labels carry zero weight");
  }
  return total / weight_sum;
}

std::vector<double> backward(const ForwardResult& fr, const TrainSample& sample,
                             const KernelModel& model, const TrainConfig& config) {
  const int num_classes = fr.map.num_classes();
  const double prior = fr.map.config().prior;

  // dLoss/dalpha, sparse over the distinct target voxels.
  std::unordered_map<std::size_t, std::size_t> slot;
  std::vector<std::size_t> voxels;
  std::vector<Eigen::VectorXd> dalpha;
  double weight_sum = 0.0;
  for (std::size_t i = 0; i < sample.target.size(); ++i) {
    if (fr.target_voxel[i] < 0) continue;
    const int y = sample.target.labels[i];
    weight_sum += config.class_weights.empty() ? 1.0 : config.class_weights[y];
  }
  for (std::size_t i = 0; i < sample.target.size(); ++i) {
    if (fr.target_voxel[i] < 0) continue;
    const std::size_t v = static_cast<std::size_t>(fr.target_voxel[i]);
    const int y = sample.target.labels[i];
    const double w =
        (config.class_weights.empty() ? 1.0 : config.class_weights[y]) / weight_sum;

    auto [it, fresh] = slot.try_emplace(v, voxels.size());
    if (fresh) {
      voxels.push_back(v);
      dalpha.emplace_back(Eigen::VectorXd::Zero(num_classes));
    }
    Eigen::VectorXd& g = dalpha[it->second];
    double eta = num_classes * prior;
    for (int c = 0; c < num_classes; ++c) {
      eta += fr.map.alpha()[c * fr.map.voxels_per_class() + v];
    }
    const double ay = fr.map.alpha()[y * fr.map.voxels_per_class() + v] + prior;
    for (int c = 0; c < num_classes; ++c) g[c] += w / eta;
    g[y] -= w / ay;
  }

  // Chain through the convolution: dalpha[c][v]/dparam gathers the evidence
  // volume under the filter derivative around v.
  const FilterGrad fgrad =
      build_filter_grad(model, config.filter_size, fr.map.resolution());
  const Eigen::Vector3i dims = fr.map.dims();
  const int f = fgrad.size, r = (f - 1) / 2;
  const int dy = dims.y(), dz = dims.z();
  std::vector<double> grad(model.num_params(), 0.0);

  for (std::size_t s = 0; s < voxels.size(); ++s) {
    const std::size_t v = voxels[s];
    const int z = static_cast<int>(v % dz);
    const int y = static_cast<int>((v / dz) % dy);
    const int x = static_cast<int>(v / (static_cast<std::size_t>(dy) * dz));
    for (int c = 0; c < num_classes; ++c) {
      const double gc = dalpha[s][c];
      if (gc == 0.0) continue;
      const std::span<const double> mass = fr.input.channel(c);
      for (const auto& block : fgrad.per_class[c]) {
        double acc = 0.0;
        for (int k = 0; k < f; ++k) {
          const int nx = x + k - r;
          if (nx < 0 || nx >= dims.x()) continue;
          for (int l = 0; l < f; ++l) {
            const int ny = y + l - r;
            if (ny < 0 || ny >= dy) continue;
            for (int m = 0; m < f; ++m) {
              const int nz = z + m - r;
              if (nz < 0 || nz >= dz) continue;
              const double dw = block.dw[(static_cast<std::size_t>(k) * f + l) * f + m];
              if (dw == 0.0) continue;
              acc += dw * mass[(static_cast<std::size_t>(nx) * dy + ny) * dz + nz];
            }
          }
        }
        grad[block.param] += gc * acc;
      }
    }
  }
  return grad;
}

TrainResult train(std::span<const TrainSample> samples, const KernelModel& init,
                  const TrainConfig& config) {
  config.validate();
  init.validate();
  if (samples.empty()) throw std::invalid_argument("empty training dataset");

  TrainResult result;
  result.model = init;
  const int num_params = init.num_params();

  // Adam runs on log lengths so every step lands on a positive scale.
  std::vector<double> theta(num_params), m(num_params, 0.0), v(num_params, 0.0);
  for (int p = 0; p < num_params; ++p) theta[p] = std::log(init.lengths[p]);

  int step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (const TrainSample& sample : samples) {
      const ForwardResult fr = forward(sample, result.model, config);
      if (!std::isfinite(fr.loss)) {
        throw std::runtime_error("training diverged: non-finite loss at step " +
                                 std::to_string(step));
      }
      result.trace.push_back({step, fr.loss, result.model.lengths});

      const std::vector<double> grad_l = backward(fr, sample, result.model, config);
      ++step;
      const double bc1 = 1.0 - std::pow(config.beta1, step);
      const double bc2 = 1.0 - std::pow(config.beta2, step);
      for (int p = 0; p < num_params; ++p) {
        const double g = grad_l[p] * result.model.lengths[p];  // d theta = l * d l
        if (!std::isfinite(g)) {
          throw std::runtime_error("training diverged: non-finite gradient at step " +
                                   std::to_string(step));
        }
        m[p] = config.beta1 * m[p] + (1.0 - config.beta1) * g;
        v[p] = config.beta2 * v[p] + (1.0 - config.beta2) * g * g;
        theta[p] -= config.learning_rate * (m[p] / bc1) /
                    (std::sqrt(v[p] / bc2) + config.adam_epsilon);
        result.model.lengths[p] = std::exp(theta[p]);
        if (!(result.model.lengths[p] > 0.0) ||
            !std::isfinite(result.model.lengths[p])) {
          throw std::runtime_error(
              "training diverged: length-scale left (0, inf) at step " +
              std::to_string(step));
        }
      }
    }
  }
  return result;
}

std::vector<double> inverse_frequency_weights(std::span<const TrainSample> samples,
                                              int num_classes) {
  std::vector<std::size_t> counts(num_classes, 0);
  std::size_t total = 0;
  for (const TrainSample& s : samples) {
    for (int label : s.target.labels) {
      if (label < 0 || label >= num_classes) {
        throw std::out_of_range("label outside class range");
      }
      ++counts[label];
      ++total;
    }
  }
  if (total == 0) throw std::invalid_argument("dataset has no target labels");
  std::vector<double> weights(num_classes, 0.0);
  for (int c = 0; c < num_classes; ++c) {
    if (counts[c] > 0) {
      weights[c] = static_cast<double>(total) /
                   (static_cast<double>(num_classes) * counts[c]);
    }
  }
  return weights;
}

}  // namespace convbki
