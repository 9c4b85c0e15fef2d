#ifndef CONVBKI_TRAINING_HPP
#define CONVBKI_TRAINING_HPP

#include <span>
#include <vector>

#include "convbki/cloud.hpp"
#include "convbki/grid.hpp"
#include "convbki/kernels.hpp"
#include "convbki/local_map.hpp"
#include "convbki/update.hpp"

namespace convbki {

struct TrainConfig {
  GridConfig grid;
  int window = 10;        // frames per sample, target included
  double learning_rate = 0.007;
  int epochs = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::vector<double> class_weights;  // empty means unweighted
  double initial_length = 0.5;
  int filter_size = 5;

  void validate() const;
};

// One supervised window: history frames plus the target frame, all in sensor
// coordinates with their poses. The target needs hard labels; target
// probability rows, when present, contribute evidence to the map like any
// history frame.
struct TrainSample {
  std::vector<SemanticPointCloud> history;
  std::vector<Pose> history_poses;
  SemanticPointCloud target;
  Pose target_pose;
};

struct ForwardResult {
  double loss = 0.0;
  std::vector<double> log_probs;     // N x C, log posterior expectation
  std::vector<std::int64_t> target_voxel;  // linear voxel id, -1 when off-grid
  std::size_t num_valid = 0;
  DirichletVoxelGrid map;      // the window's map after the update
  InputVolume input;           // combined evidence volume the update consumed
};

// Builds one map for the whole window (frames merged into a single evidence
// volume, which equals running per-frame updates in sequence), then reads the
// posterior expectation at every target point. The grid is anchored at the
// target pose. Purely deterministic.
ForwardResult forward(const TrainSample& sample, const KernelModel& model,
                      const TrainConfig& config);

// Weighted mean negative log-likelihood over rows; weights follow the usual
// convention of normalizing by the summed weights of the realized labels.
double nll_loss(std::span<const double> log_probs, std::span<const int> labels,
                std::span<const double> class_weights, int num_classes);

// Exact loss gradient with respect to every kernel length, accumulated over
// valid target points. Must be handed the same model and config that produced
// the forward result.
std::vector<double> backward(const ForwardResult& fr, const TrainSample& sample,
                             const KernelModel& model, const TrainConfig& config);

struct TrainResult {
  KernelModel model;
  struct Step {
    int step = 0;
    double loss = 0.0;
    std::vector<double> lengths;
  };
  std::vector<Step> trace;
};

// Adam on log length-scales (keeps every length positive), one step per
// sample, config.epochs passes over the dataset. Throws when the loss turns
// non-finite.
TrainResult train(std::span<const TrainSample> samples, const KernelModel& init,
                  const TrainConfig& config);

// Inverse-frequency class weights from the target labels of a dataset;
// classes that never occur get weight zero.
std::vector<double> inverse_frequency_weights(std::span<const TrainSample> samples,
                                              int num_classes);

}  // namespace convbki

#endif  // CONVBKI_TRAINING_HPP
