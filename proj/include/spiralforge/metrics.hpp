#pragma once

#include <limits>
#include <vector>

#include "spiralforge/tensor.hpp"

namespace sf::metrics {

// Images are 2D RealArrays; series are [T, H, W].

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

double nrmse(const RealArray& x, const RealArray& ref);

// peak <= 0 selects max(ref). Identical images return +infinity.
double psnr(const RealArray& x, const RealArray& ref, double peak = 0.0);

// Mean local SSIM over valid (fully interior) Gaussian windows.
double ssim(const RealArray& x, const RealArray& ref, const SsimParams& p = {});

// Laplacian-energy ratio E(x)/E(ref) with the 3x3 stencil and reflective
// borders; 1.0 means "as sharp as the reference".
double lape(const RealArray& x, const RealArray& ref);

double laplacian_energy(const RealArray& x);

struct TransitionReport {
  std::vector<double> ssim_per_frame;  // from the first reconstructable frame
  int first_frame = 0;                 // 1-indexed frame of ssim_per_frame[0]
  int switch_frame = 0;                // 1-indexed
  double pre_switch_mean = 0.0;
  double post_switch_min = 0.0;
  double first_post_switch_ssim = 0.0;
  int recovery_frames = -1;  // frames after the switch until SSIM returns
                             // within 0.02 of the pre-switch mean; -1 = never
};

// recon has T - first_frame + 1 frames aligned so recon frame k maps to gt
// frame first_frame + k (1-indexed); first_frame is 5 for a 5-frame window.
TransitionReport transition_curve(const RealArray& gt_series,
                                  const RealArray& recon_series, int switch_frame,
                                  int first_frame = 5);

struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;
};

Aggregate aggregate(const std::vector<double>& values);

}  // namespace sf::metrics
