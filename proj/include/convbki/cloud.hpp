#ifndef CONVBKI_CLOUD_HPP
#define CONVBKI_CLOUD_HPP

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace convbki {

// Point cloud with per-point class evidence. Evidence is either a full
// probability row per point (class_probs, N x C row-major) or a hard label
// per point (labels), or both. Hard labels double as ground truth for
// evaluation; expand_labels_to_probs turns them into one-hot evidence.
struct SemanticPointCloud {
  int num_classes = 0;
  std::vector<Eigen::Vector3d> positions;
  std::vector<double> class_probs;  // empty, or positions.size() * num_classes
  std::vector<int> labels;          // empty, or positions.size()

  std::size_t size() const { return positions.size(); }
  bool has_probs() const { return !class_probs.empty(); }
  bool has_labels() const { return !labels.empty(); }

  const double* prob_row(std::size_t i) const {
    return class_probs.data() + i * num_classes;
  }

  void expand_labels_to_probs();

  // Throws when shapes disagree, probabilities are non-finite/negative or a
  // row strays from sum 1 by more than 1e-6, or a label is out of range.
  void validate() const;
};

}  // namespace convbki

#endif  // CONVBKI_CLOUD_HPP
