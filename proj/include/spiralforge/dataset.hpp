#pragma once

#include "spiralforge/denoiser.hpp"
#include "spiralforge/nufft.hpp"
#include "spiralforge/phantom.hpp"
#include "spiralforge/trajgen.hpp"

namespace sf::dataset {

struct BuildOptions {
  int n_series = 40;
  int t_frames = 12;
  int height = 32;
  int width = 32;
  int n_coils = 4;
  std::uint64_t seed = 1;
  double noise_sigma = 0.0;
  // 75/10/15 for the final retrain; 0.30/0.10/0 reproduces the search-phase
  // 40% subset with its 30/10 split.
  double f_train = 0.75;
  double f_val = 0.10;
  double f_test = 0.15;
};

struct SplitDataset {
  denoiser::Dataset train, val, test;
  phantom::SplitIndices indices;
};

// One phantom cine per series index (deterministic in seed and index), paired
// with its gridded counterpart under the given trajectory. Split assignment
// depends only on (n_series, fractions), never on the trajectory.
SplitDataset build_dataset(const BuildOptions& options,
                           const trajgen::Trajectory& traj);

// The per-series phantom used by build_dataset (exposed for transition tests).
RealArray series_phantom(const BuildOptions& options, int index);

}  // namespace sf::dataset
