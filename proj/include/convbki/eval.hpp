#ifndef CONVBKI_EVAL_HPP
#define CONVBKI_EVAL_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace convbki {

// Confusion-matrix derived segmentation metrics. Classes absent from both
// predictions and ground truth carry NaN IoU and are excluded from the mean.
struct EvalReport {
  int num_classes = 0;
  std::size_t num_points = 0;
  std::vector<std::int64_t> confusion;  // ground truth major: [gt * C + pred]
  std::vector<double> iou;
  double miou = 0.0;
  double accuracy = 0.0;
  double update_hz = 0.0;  // mean mapping throughput, filled by the pipeline

  // NaN when the class was never predicted (precision) or never occurred
  // (recall).
  double precision(int c) const;
  double recall(int c) const;

  // C x C matrix normalized over the predictions: row p holds the ground
  // truth distribution of the points predicted as p, so nonzero rows sum to 1.
  std::vector<double> prediction_normalized() const;

  std::string summary(const std::vector<std::string>& class_names = {}) const;
};

EvalReport evaluate(std::span<const int> predictions,
                    std::span<const int> ground_truth, int num_classes);

}  // namespace convbki

#endif  // CONVBKI_EVAL_HPP
