#include "convbki/eval.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace convbki {

EvalReport evaluate(std::span<const int> predictions,
                    std::span<const int> ground_truth, int num_classes) {
  if (predictions.size() != ground_truth.size()) {
    throw std::invalid_argument("prediction and ground truth counts differ");
  }
  if (num_classes < 1) throw std::invalid_argument("need at least one class");

  EvalReport report;
  report.num_classes = num_classes;
  report.num_points = predictions.size();
  report.confusion.assign(static_cast<std::size_t>(num_classes) * num_classes, 0);

  std::int64_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const int p = predictions[i], g = ground_truth[i];
    if (p < 0 || p >= num_classes || g < 0 || g >= num_classes) {
      throw std::out_of_range("class id out of range in evaluation");
    }
    ++report.confusion[static_cast<std::size_t>(g) * num_classes + p];
    if (p == g) ++correct;
  }
  report.accuracy = predictions.empty()
                        ? 0.0
                        : static_cast<double>(correct) / predictions.size();

  report.iou.assign(num_classes, std::numeric_limits<double>::quiet_NaN());
  double iou_sum = 0.0;
  int iou_count = 0;
  for (int c = 0; c < num_classes; ++c) {
    std::int64_t tp = report.confusion[static_cast<std::size_t>(c) * num_classes + c];
    std::int64_t fp = 0, fn = 0;
    for (int o = 0; o < num_classes; ++o) {
      if (o == c) continue;
      fp += report.confusion[static_cast<std::size_t>(o) * num_classes + c];
      fn += report.confusion[static_cast<std::size_t>(c) * num_classes + o];
    }
    const std::int64_t denom = tp + fp + fn;
    if (denom > 0) {
      report.iou[c] = static_cast<double>(tp) / static_cast<double>(denom);
      iou_sum += report.iou[c];
      ++iou_count;
    }
  }
  report.miou = iou_count > 0 ? iou_sum / iou_count
                              : std::numeric_limits<double>::quiet_NaN();
  return report;
}

double EvalReport::precision(int c) const {
  std::int64_t predicted = 0;
  for (int g = 0; g < num_classes; ++g) {
    predicted += confusion[static_cast<std::size_t>(g) * num_classes + c];
  }
  if (predicted == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(
             confusion[static_cast<std::size_t>(c) * num_classes + c]) /
         static_cast<double>(predicted);
}

double EvalReport::recall(int c) const {
  std::int64_t occurred = 0;
  for (int p = 0; p < num_classes; ++p) {
    occurred += confusion[static_cast<std::size_t>(c) * num_classes + p];
  }
  if (occurred == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(
             confusion[static_cast<std::size_t>(c) * num_classes + c]) /
         static_cast<double>(occurred);
}

std::vector<double> EvalReport::prediction_normalized() const {
  std::vector<double> out(confusion.size(), 0.0);
  for (int p = 0; p < num_classes; ++p) {
    std::int64_t total = 0;
    for (int g = 0; g < num_classes; ++g) {
      total += confusion[static_cast<std::size_t>(g) * num_classes + p];
    }
    if (total == 0) continue;
    for (int g = 0; g < num_classes; ++g) {
      out[static_cast<std::size_t>(p) * num_classes + g] =
          static_cast<double>(
              confusion[static_cast<std::size_t>(g) * num_classes + p]) /
          static_cast<double>(total);
    }
  }
  return out;
}

std::string EvalReport::summary(const std::vector<std::string>& class_names) const {
  std::ostringstream out;
  char buf[64];
  out << "points evaluated: " << num_points << "\n";
  std::snprintf(buf, sizeof(buf), "accuracy: %.4f\n", accuracy);
  out << buf;
  std::snprintf(buf, sizeof(buf), "mIoU: %.4f\n", miou);
  out << buf;
  for (int c = 0; c < num_classes; ++c) {
    const std::string name = c < static_cast<int>(class_names.size())
                                 ? class_names[c]
                                 : "class " + std::to_string(c);
    if (std::isnan(iou[c])) {
      out << "  " << name << ": n/a\n";
    } else {
      std::snprintf(buf, sizeof(buf), "  %s: IoU %.4f\n", name.c_str(), iou[c]);
      out << buf;
    }
  }
  if (update_hz > 0.0) {
    std::snprintf(buf, sizeof(buf), "update rate: %.1f Hz\n", update_hz);
    out << buf;
  }
  return out.str();
}

}  // namespace convbki
