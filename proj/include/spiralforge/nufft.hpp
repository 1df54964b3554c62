#pragma once

#include <optional>

#include "spiralforge/tensor.hpp"
#include "spiralforge/trajgen.hpp"

namespace sf::nufft {

// Kaiser-Bessel interpolation kernel. beta <= 0 picks the minimal-aliasing
// value for the given width/oversampling.
struct GridKernel {
  int width = 4;
  double oversampling = 2.0;
  double beta = 0.0;
  int table_len = 4096;
  // Grid phase refinement: the oversampled grid is evaluated at `phases`
  // interleaved sub-lattices per axis (equivalent to scaling both width and
  // oversampling by `phases`). phases = 2 cancels the odd-order aliasing
  // replicas of the plain kernel and is needed to reach ~1e-6 forward
  // accuracy; phases = 1 is the classic gridder (~2e-3 worst case).
  int phases = 2;

  double effective_beta() const;
  void validate() const;
};

struct ComplexImage {
  ComplexArray data;  // [n_coils, H, W], image center at (H/2, W/2)
};

struct KSamples {
  ComplexArray data;  // [n_coils, M]
  RealArray coords;   // [M, 2] in cycles/pixel, components in [-0.5, 0.5]
};

// Gridding operator for one image size. Stateless after construction; safe
// for concurrent calls.
class Gridder {
 public:
  Gridder(int h, int w, GridKernel kernel = {});

  // S(k) = sum_x I(x) exp(-2*pi*i k.x), x centered on (H/2, W/2).
  KSamples forward(const ComplexImage& image, const RealArray& coords) const;

  // Exact adjoint of forward; optional per-sample weights are applied before
  // gridding (density compensation).
  ComplexImage adjoint(const KSamples& samples,
                       const RealArray* weights = nullptr) const;

  int height() const { return h_; }
  int width() const { return w_; }

 private:
  double kernel_at(double t) const;  // table lookup, |t| <= width/2

  int h_, w_;
  GridKernel kernel_;
  int ew_;                      // effective kernel width in fine-grid units
  int gh_, gw_;                 // oversampled grid size
  std::vector<double> table_;   // kernel samples on [0, width/2]
  std::vector<double> apo_y_, apo_x_;  // separable deapodization factors
};

// RSS coil combination: sqrt(sum_c |I_c|^2).
RealArray rss_combine(const ComplexImage& image);

// Full simulation chain per frame: coil-weighted ground truth -> forward
// sampling -> optional complex Gaussian noise -> density-compensated adjoint
// -> RSS. Output is [T, H, W], clipped at 0 below, not clipped above.
RealArray grid_series(const RealArray& gt_series, const ComplexArray& coil_maps,
                      const trajgen::Trajectory& traj, double noise_sigma,
                      std::uint64_t noise_seed = 0, const GridKernel& kernel = {});

}  // namespace sf::nufft
