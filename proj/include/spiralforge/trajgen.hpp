#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spiralforge/tensor.hpp"

namespace sf::trajgen {

enum class Transition { Linear, Hanning, Quadratic };
enum class Ordering { Linear, TinyGolden };

std::string to_string(Transition t);
std::string to_string(Ordering o);
Transition transition_from_string(const std::string& s);
Ordering ordering_from_string(const std::string& s);

// Tiny golden angle increment, degrees.
constexpr double kTinyGoldenDeg = 47.3;

// The six searchable trajectory hyperparameters plus timing.
struct SpiralConfig {
  double r_inner = 0.15;   // normalized inner radius, fraction of k_max
  double u_inner = 16.0;   // per-interleave undersampling factor inside r_inner
  double r_outer = 0.56;   // normalized outer radius
  double rho = 0.07;       // outer/inner relative density; outer U = u_inner/rho
  Transition transition = Transition::Hanning;
  Ordering ordering = Ordering::Linear;
  double tr_ms = 55.0 / 15.0;  // repetition time per interleave
  double t_acq_ms = 55.0;      // frame time budget

  // Throws BoundsViolation naming the offending field.
  void validate() const;
};

// Table-row presets. TR is kept at full precision (55/15 ms) so the
// interleave count works out to the printed 15.
SpiralConfig optimized_config();

struct GradientSystem {
  double fov_mm = 400.0;
  int matrix = 64;
  double dwell_us = 2.5;
  double readout_overhead_ms = 1.0;
  // Feasibility cap on the k-space step between consecutive samples, in
  // normalized units (k_max = 0.5). Stands in for a slew/gradient limit.
  double max_kstep = 0.01;

  double k_max() const { return matrix / (2.0 * fov_mm); }
  void validate() const;
};

struct Trajectory {
  // [n_frames, n_interleaves, n_samples, 2] normalized coords in [-0.5, 0.5].
  RealArray coords;
  // [n_interleaves, n_samples], > 0, mean 1, identical across frames.
  RealArray density_weights;
  // Mean k-space area per sample over one frame; density_weights * quad_scale
  // are absolute quadrature weights, so the compensated adjoint lands on the
  // ground-truth intensity scale with no per-frame rescaling.
  double quad_scale = 0.0;
  std::string kind;  // "spiral", "uniform_spiral", "radial"
  SpiralConfig config;  // meaningful for spiral kinds
  int n_frames = 0;
  int n_interleaves = 0;
  int n_samples = 0;
};

// floor(t_acq / tr); errors if inputs are non-positive or the result is 0.
int interleave_count(double t_acq_ms, double tr_ms);

// Per-interleave undersampling factor U(r) at normalized radius r in [0,1].
double undersampling_profile(const SpiralConfig& config, double r);

// U(r)/N: the realized frame-level acceleration at radius r.
double effective_acceleration(const SpiralConfig& config, double r);

// Readout sample count from the timing budget.
int samples_per_readout(const SpiralConfig& config, const GradientSystem& sys);

// Single base interleave: the spiral ODE integrated from r=0 to r=0.5 and
// resampled at uniform arc length. Returns [n_samples, 2].
RealArray generate_interleave(const SpiralConfig& config, const GradientSystem& sys);

Trajectory assemble_trajectory(const SpiralConfig& config, const GradientSystem& sys,
                               int n_frames);

// Uniform-density spiral baseline (Table-row "Uniform": constant U, linear
// ordering, timing matched to the optimized row).
Trajectory uniform_spiral(const GradientSystem& sys, double u_uniform, double tr_ms,
                          double t_acq_ms, Ordering ordering, int n_frames);

// Tiny-golden radial spokes. samples_per_spoke = 0 picks matrix+1 (made odd);
// spokes are full diameters, angle taken mod 180 degrees.
Trajectory radial_trajectory(const GradientSystem& sys, int spokes_per_frame,
                             int n_frames, int samples_per_spoke = 0);

}  // namespace sf::trajgen
