#include "spiralforge/dataset.hpp"

#include <random>

namespace sf::dataset {

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  return x;
}

phantom::PhantomSpec spec_for(const BuildOptions& options, int index) {
  std::mt19937_64 rng(mix(options.seed, static_cast<std::uint64_t>(index)));
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  phantom::PhantomSpec spec;
  spec.seed = rng();
  spec.n_ellipses = 2 + static_cast<int>(uni(rng) * 3.0);
  spec.motion_amplitude = 0.08 + 0.08 * uni(rng);
  spec.period_frames = 6 + static_cast<int>(uni(rng) * 5.0);
  spec.background_texture = 0.05 + 0.05 * uni(rng);
  return spec;
}

}  // namespace

RealArray series_phantom(const BuildOptions& options, int index) {
  return phantom::generate_cine(spec_for(options, index), options.t_frames,
                                options.height, options.width);
}

SplitDataset build_dataset(const BuildOptions& options,
                           const trajgen::Trajectory& traj) {
  SplitDataset out;
  out.indices = phantom::split_dataset(options.n_series, options.f_train,
                                       options.f_val, options.f_test);
  ComplexArray maps = phantom::coil_maps(options.n_coils, options.height,
                                         options.width, options.seed ^ 0xC01Cu);

  auto build_split = [&](const std::vector<int>& idx, denoiser::Dataset& dst) {
    for (int i : idx) {
      denoiser::SeriesPair pair;
      pair.gt = series_phantom(options, i);
      pair.gridded = nufft::grid_series(pair.gt, maps, traj, options.noise_sigma,
                                        mix(options.seed, 0xA0A0u + static_cast<std::uint64_t>(i)));
      dst.push_back(std::move(pair));
    }
  };
  build_split(out.indices.train, out.train);
  build_split(out.indices.val, out.val);
  build_split(out.indices.test, out.test);
  return out;
}

}  // namespace sf::dataset
