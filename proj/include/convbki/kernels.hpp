#ifndef CONVBKI_KERNELS_HPP
#define CONVBKI_KERNELS_HPP

#include <Eigen/Core>

#include <string>
#include <vector>

namespace convbki {

// Compactly supported sparse kernel on distance d with length-scale l:
//   k(d, l) = (2 + cos(2 pi d/l)) / 3 * (1 - d/l) + sin(2 pi d/l) / (2 pi)
// for d < l and exactly 0 beyond. k(0, l) == 1, k(l, l) == 0, values in [0, 1].
double sparse_kernel(double d, double l);

// Partial derivative of sparse_kernel with respect to the length-scale.
// Zero at d == 0 and for d >= l; the kernel meets the support boundary with
// zero value and slope, so the cutoff introduces no derivative jump.
double sparse_kernel_dl(double d, double l);

// Product kernel: sparse kernel on the horizontal planar distance times a
// sparse kernel on the absolute vertical offset.
double compound_kernel(const Eigen::Vector3d& delta, double horizontal,
                       double vertical);

enum class KernelMode { kSingle, kPerClass, kCompound };

const char* kernel_mode_name(KernelMode mode);
KernelMode kernel_mode_from_name(const std::string& name);

// Learnable kernel parameterization. Parameter layout by mode:
//   kSingle:   1 shared length           lengths = {l}
//   kPerClass: 1 length per class        lengths = {l_0 .. l_{C-1}}
//   kCompound: horizontal + vertical     lengths = {h_0 .. h_{C-1}, v_0 .. v_{C-1}}
struct KernelModel {
  KernelMode mode = KernelMode::kSingle;
  int num_classes = 1;
  std::vector<double> lengths;

  static KernelModel single(int num_classes, double length);
  static KernelModel per_class(int num_classes, double length);
  static KernelModel compound(int num_classes, double horizontal, double vertical);

  int num_params() const;
  double horizontal(int c) const;  // radial length for single/per-class modes
  double vertical(int c) const;
  void validate() const;

  // Kernel weight of class c at a centered spatial offset in meters.
  double weight(int c, const Eigen::Vector3d& delta) const;
  // Same weight differentiated by every model parameter it depends on,
  // accumulated into grad (size num_params) with factor scale.
  void weight_grad(int c, const Eigen::Vector3d& delta, double scale,
                   std::vector<double>& grad) const;

  // Largest support radius over classes, in meters (axis-aligned bound).
  double max_support() const;
};

// Plain-text round-trip, 9 significant digits per length.
std::string kernel_model_to_text(const KernelModel& model);
KernelModel kernel_model_from_text(const std::string& text);

// Discretized per-class filter over an odd cubic window. Cell (k, l, m) with
// zero-based indices holds the kernel weight of the centered voxel offset
// (k, l, m) - (f-1)/2 scaled by the resolution. Weights are symmetric under
// offset negation, so scatter and gather forms of the update coincide.
struct FilterBank {
  int num_classes = 0;
  int size = 0;  // odd window edge length f
  double resolution = 0.0;

  std::vector<double> weights;  // ((c*f + k)*f + l)*f + m

  struct Tap {
    int dx, dy, dz;  // centered voxel offset
    double w;
  };
  std::vector<std::vector<Tap>> taps;  // nonzero cells per class, row-major order

  int radius() const { return (size - 1) / 2; }
  double weight(int c, int k, int l, int m) const {
    return weights[((static_cast<std::size_t>(c) * size + k) * size + l) * size + m];
  }
};

FilterBank build_filter(const KernelModel& model, int filter_size,
                        double resolution);

// Per-parameter derivative of every filter cell, grouped by the class the
// parameter acts on. Shares the cell layout of FilterBank.
struct FilterGrad {
  int num_classes = 0;
  int size = 0;
  double resolution = 0.0;
  struct ParamBlock {
    int param = 0;                // index into KernelModel::lengths
    std::vector<double> dw;      // f^3 cells, same layout as FilterBank
  };
  std::vector<std::vector<ParamBlock>> per_class;
};

FilterGrad build_filter_grad(const KernelModel& model, int filter_size,
                             double resolution);

}  // namespace convbki

#endif  // CONVBKI_KERNELS_HPP
