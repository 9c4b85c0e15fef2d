#include "convbki/cloud.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace convbki {

void SemanticPointCloud::expand_labels_to_probs() {
  if (!has_labels()) {
    throw std::logic_error("cannot expand labels: cloud has none");
  }
  class_probs.assign(size() * num_classes, 0.0);
  for (std::size_t i = 0; i < size(); ++i) {
    const int label = labels[i];
    if (label < 0 || label >= num_classes) {
      throw std::out_of_range("label " + std::to_string(label) +
                              " outside [0, " + std::to_string(num_classes) + ")");
    }
    class_probs[i * num_classes + label] = 1.0;
  }
}

void SemanticPointCloud::validate() const {
  if (num_classes < 1) {
    throw std::invalid_argument("cloud needs at least one class");
  }
  if (has_probs() && class_probs.size() != size() * num_classes) {
    throw std::invalid_argument("class_probs size does not match N x C");
  }
  if (has_labels() && labels.size() != size()) {
    throw std::invalid_argument("labels size does not match point count");
  }
  for (const auto& p : positions) {
    if (!p.allFinite()) throw std::invalid_argument("non-finite point position");
  }
  if (has_probs()) {
    for (std::size_t i = 0; i < size(); ++i) {
      double sum = 0.0;
      for (int c = 0; c < num_classes; ++c) {
        const double v = class_probs[i * num_classes + c];
        if (!std::isfinite(v) || v < 0.0) {
          throw std::invalid_argument("probability row " + std::to_string(i) +
                                      " has a negative or non-finite entry");
        }
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-6) {
        throw std::invalid_argument("probability row " + std::to_string(i) +
                                    " sums to " + std::to_string(sum));
      }
    }
  }
  if (has_labels()) {
    for (std::size_t i = 0; i < size(); ++i) {
      if (labels[i] < 0 || labels[i] >= num_classes) {
        throw std::invalid_argument("label out of range at point " +
                                    std::to_string(i));
      }
    }
  }
}

}  // namespace convbki
