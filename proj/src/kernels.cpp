#include "convbki/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace convbki {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_kernel_args(double d, double l) {
  if (!(l > 0.0) || !std::isfinite(l)) {
    throw std::invalid_argument("kernel length must be positive and finite");
  }
  if (!(d >= 0.0) || !std::isfinite(d)) {
    throw std::invalid_argument("kernel distance must be non-negative and finite");
  }
}

std::string format_length(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

double sparse_kernel(double d, double l) {
  check_kernel_args(d, l);
  if (d >= l) return 0.0;
  const double u = d / l;
  const double c = std::cos(kTwoPi * u);
  const double s = std::sin(kTwoPi * u);
  // The two terms cancel to O(eps^5) near both ends of the support, where
  // rounding can land a hair outside [0, 1]; clamp restores the invariant.
  return std::clamp((2.0 + c) / 3.0 * (1.0 - u) + s / kTwoPi, 0.0, 1.0);
}

double sparse_kernel_dl(double d, double l) {
  check_kernel_args(d, l);
  if (d == 0.0 || d >= l) return 0.0;
  const double u = d / l;
  const double c = std::cos(kTwoPi * u);
  const double s = std::sin(kTwoPi * u);
  // Chain rule through u = d/l: dk/dl = dk/du * (-d / l^2).
  const double dk_du = -kTwoPi * s / 3.0 * (1.0 - u) - (2.0 + c) / 3.0 + c;
  return dk_du * (-d / (l * l));
}

double compound_kernel(const Eigen::Vector3d& delta, double horizontal,
                       double vertical) {
  const double planar = std::hypot(delta.x(), delta.y());
  return sparse_kernel(planar, horizontal) *
         sparse_kernel(std::abs(delta.z()), vertical);
}

const char* kernel_mode_name(KernelMode mode) {
  switch (mode) {
    case KernelMode::kSingle: return "single";
    case KernelMode::kPerClass: return "per_class";
    case KernelMode::kCompound: return "compound";
  }
  throw std::invalid_argument("unknown kernel mode");
}

KernelMode kernel_mode_from_name(const std::string& name) {
  if (name == "single") return KernelMode::kSingle;
  if (name == "per_class") return KernelMode::kPerClass;
  if (name == "compound") return KernelMode::kCompound;
  throw std::invalid_argument("unknown kernel mode: " + name);
}

KernelModel KernelModel::single(int num_classes, double length) {
  KernelModel m;
  m.mode = KernelMode::kSingle;
  m.num_classes = num_classes;
  m.lengths = {length};
  m.validate();
  return m;
}

KernelModel KernelModel::per_class(int num_classes, double length) {
  KernelModel m;
  m.mode = KernelMode::kPerClass;
  m.num_classes = num_classes;
  m.lengths.assign(num_classes, length);
  m.validate();
  return m;
}

KernelModel KernelModel::compound(int num_classes, double horizontal,
                                  double vertical) {
  KernelModel m;
  m.mode = KernelMode::kCompound;
  m.num_classes = num_classes;
  m.lengths.assign(num_classes, horizontal);
  m.lengths.insert(m.lengths.end(), num_classes, vertical);
  m.validate();
  return m;
}

int KernelModel::num_params() const {
  switch (mode) {
    case KernelMode::kSingle: return 1;
    case KernelMode::kPerClass: return num_classes;
    case KernelMode::kCompound: return 2 * num_classes;
  }
  throw std::invalid_argument("unknown kernel mode");
}

double KernelModel::horizontal(int c) const {
  switch (mode) {
    case KernelMode::kSingle: return lengths[0];
    case KernelMode::kPerClass: return lengths[c];
    case KernelMode::kCompound: return lengths[c];
  }
  throw std::invalid_argument("unknown kernel mode");
}

double KernelModel::vertical(int c) const {
  if (mode == KernelMode::kCompound) return lengths[num_classes + c];
  return horizontal(c);
}

void KernelModel::validate() const {
  if (num_classes < 1) throw std::invalid_argument("kernel model needs classes");
  if (static_cast<int>(lengths.size()) != num_params()) {
    throw std::invalid_argument("kernel parameter count does not match mode");
  }
  for (double l : lengths) {
    if (!(l > 0.0) || !std::isfinite(l)) {
      throw std::invalid_argument("kernel lengths must be positive and finite");
    }
  }
}

double KernelModel::weight(int c, const Eigen::Vector3d& delta) const {
  if (mode == KernelMode::kCompound) {
    return compound_kernel(delta, lengths[c], lengths[num_classes + c]);
  }
  return sparse_kernel(delta.norm(), horizontal(c));
}

void KernelModel::weight_grad(int c, const Eigen::Vector3d& delta, double scale,
                              std::vector<double>& grad) const {
  switch (mode) {
    case KernelMode::kSingle:
      grad[0] += scale * sparse_kernel_dl(delta.norm(), lengths[0]);
      return;
    case KernelMode::kPerClass:
      grad[c] += scale * sparse_kernel_dl(delta.norm(), lengths[c]);
      return;
    case KernelMode::kCompound: {
      const double planar = std::hypot(delta.x(), delta.y());
      const double dz = std::abs(delta.z());
      const double kh = sparse_kernel(planar, lengths[c]);
      const double kv = sparse_kernel(dz, lengths[num_classes + c]);
      grad[c] += scale * sparse_kernel_dl(planar, lengths[c]) * kv;
      grad[num_classes + c] += scale * kh * sparse_kernel_dl(dz, lengths[num_classes + c]);
      return;
    }
  }
  throw std::invalid_argument("unknown kernel mode");
}

double KernelModel::max_support() const {
  double m = 0.0;
  for (double l : lengths) m = std::max(m, l);
  return m;
}

std::string kernel_model_to_text(const KernelModel& model) {
  model.validate();
  std::ostringstream out;
  out << "mode " << kernel_mode_name(model.mode) << "\n";
  out << "classes " << model.num_classes << "\n";
  if (model.mode == KernelMode::kCompound) {
    out << "horizontal";
    for (int c = 0; c < model.num_classes; ++c) {
      out << ' ' << format_length(model.lengths[c]);
    }
    out << "\nvertical";
    for (int c = 0; c < model.num_classes; ++c) {
      out << ' ' << format_length(model.lengths[model.num_classes + c]);
    }
    out << "\n";
  } else {
    out << "lengths";
    for (double l : model.lengths) out << ' ' << format_length(l);
    out << "\n";
  }
  return out.str();
}

KernelModel kernel_model_from_text(const std::string& text) {
  std::istringstream in(text);
  KernelModel model;
  bool have_mode = false, have_classes = false;
  bool have_lengths = false, have_horizontal = false, have_vertical = false;

  auto read_lengths = [&](int count, std::vector<double>& dst) {
    for (int i = 0; i < count; ++i) {
      double v;
      if (!(in >> v)) throw std::runtime_error("kernel model: truncated length list");
      dst.push_back(v);
    }
  };

  std::string key;
  while (in >> key) {
    if (key == "mode") {
      std::string name;
      if (!(in >> name)) throw std::runtime_error("kernel model: missing mode");
      model.mode = kernel_mode_from_name(name);
      have_mode = true;
    } else if (key == "classes") {
      if (!(in >> model.num_classes)) {
        throw std::runtime_error("kernel model: missing class count");
      }
      have_classes = true;
    } else if (key == "lengths" || key == "horizontal" || key == "vertical") {
      if (!have_mode || !have_classes) {
        throw std::runtime_error("kernel model: mode and classes must precede lengths");
      }
      if (key == "lengths") {
        const int n = model.mode == KernelMode::kSingle ? 1 : model.num_classes;
        read_lengths(n, model.lengths);
        have_lengths = true;
      } else if (key == "horizontal") {
        if (!model.lengths.empty()) {
          throw std::runtime_error("kernel model: horizontal must come first");
        }
        read_lengths(model.num_classes, model.lengths);
        have_horizontal = true;
      } else {
        if (!have_horizontal) {
          throw std::runtime_error("kernel model: vertical before horizontal");
        }
        read_lengths(model.num_classes, model.lengths);
        have_vertical = true;
      }
    } else {
      throw std::runtime_error("kernel model: unknown key '" + key + "'");
    }
  }
  if (!have_mode || !have_classes) {
    throw std::runtime_error("kernel model: incomplete header");
  }
  if (model.mode == KernelMode::kCompound) {
    if (!have_horizontal || !have_vertical) {
      throw std::runtime_error("kernel model: compound mode needs horizontal and vertical");
    }
  } else if (!have_lengths) {
    throw std::runtime_error("kernel model: missing lengths");
  }
  model.validate();
  return model;
}

FilterBank build_filter(const KernelModel& model, int filter_size,
                        double resolution) {
  model.validate();
  if (filter_size < 1 || filter_size % 2 == 0) {
    throw std::invalid_argument("filter size must be odd and positive");
  }
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw std::invalid_argument("filter resolution must be positive");
  }
  FilterBank bank;
  bank.num_classes = model.num_classes;
  bank.size = filter_size;
  bank.resolution = resolution;
  const int r = bank.radius();
  bank.weights.resize(static_cast<std::size_t>(model.num_classes) * filter_size *
                      filter_size * filter_size);
  bank.taps.resize(model.num_classes);
  std::size_t cell = 0;
  for (int c = 0; c < model.num_classes; ++c) {
    for (int k = 0; k < filter_size; ++k) {
      for (int l = 0; l < filter_size; ++l) {
        for (int m = 0; m < filter_size; ++m, ++cell) {
          const Eigen::Vector3d delta =
              resolution * Eigen::Vector3d(k - r, l - r, m - r);
          const double w = model.weight(c, delta);
          bank.weights[cell] = w;
          if (w != 0.0) {
            bank.taps[c].push_back({k - r, l - r, m - r, w});
          }
        }
      }
    }
  }
  return bank;
}

FilterGrad build_filter_grad(const KernelModel& model, int filter_size,
                             double resolution) {
  model.validate();
  if (filter_size < 1 || filter_size % 2 == 0) {
    throw std::invalid_argument("filter size must be odd and positive");
  }
  FilterGrad grad;
  grad.num_classes = model.num_classes;
  grad.size = filter_size;
  grad.resolution = resolution;
  grad.per_class.resize(model.num_classes);
  const int r = (filter_size - 1) / 2;
  const std::size_t cells =
      static_cast<std::size_t>(filter_size) * filter_size * filter_size;

  std::vector<double> scratch(model.num_params());
  for (int c = 0; c < model.num_classes; ++c) {
    // Parameters acting on class c, in model layout order.
    std::vector<int> params;
    switch (model.mode) {
      case KernelMode::kSingle: params = {0}; break;
      case KernelMode::kPerClass: params = {c}; break;
      case KernelMode::kCompound: params = {c, model.num_classes + c}; break;
    }
    for (int p : params) {
      grad.per_class[c].push_back({p, std::vector<double>(cells, 0.0)});
    }
    std::size_t cell = 0;
    for (int k = 0; k < filter_size; ++k) {
      for (int l = 0; l < filter_size; ++l) {
        for (int m = 0; m < filter_size; ++m, ++cell) {
          const Eigen::Vector3d delta =
              resolution * Eigen::Vector3d(k - r, l - r, m - r);
          std::fill(scratch.begin(), scratch.end(), 0.0);
          model.weight_grad(c, delta, 1.0, scratch);
          for (std::size_t b = 0; b < params.size(); ++b) {
            grad.per_class[c][b].dw[cell] = scratch[params[b]];
          }
        }
      }
    }
  }
  return grad;
}

}  // namespace convbki
