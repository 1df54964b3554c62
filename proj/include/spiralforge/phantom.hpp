#pragma once

#include <cstdint>
#include <vector>

#include "spiralforge/tensor.hpp"

namespace sf::phantom {

struct PhantomSpec {
  std::uint64_t seed = 0;
  int n_ellipses = 3;            // static structures beyond ventricle + ring
  double motion_amplitude = 0.12;  // fraction of H
  int period_frames = 8;
  double background_texture = 0.08;
};

// Deformable-ellipse dynamic scene: an oscillating "ventricle", an anti-phase
// "myocardium" ring, a few static structures and smooth background; scaled so
// max = 1, min >= 0. Output [T, H, W].
RealArray generate_cine(const PhantomSpec& spec, int t, int h, int w);

// Smooth border-centered per-coil sensitivities with linear phase, normalized
// so the pointwise RSS is 1 (n_coils = 1 degenerates to a constant-magnitude
// map). Output [n_coils, H, W].
ComplexArray coil_maps(int n_coils, int h, int w, std::uint64_t seed);

// Frames 1..switch_frame-1 from a, frames switch_frame..T from b (1-indexed).
RealArray transition_sequence(const RealArray& a, const RealArray& b,
                              int switch_frame);

struct SplitIndices {
  std::vector<int> train, val, test;
};

// Deterministic split by hashing series indices; fraction counts use largest
// remainder so exact fractions of n come out exact. Fractions may sum to < 1
// (the remainder stays unassigned, e.g. the HyperBand 30/10-of-100 subset).
SplitIndices split_dataset(int n_series, double f_train, double f_val, double f_test);

}  // namespace sf::phantom
