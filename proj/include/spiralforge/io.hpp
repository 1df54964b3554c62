#pragma once

#include <string>

#include "spiralforge/trajgen.hpp"

namespace sf::io {

// Trajectory on disk: <base>.json manifest plus <base>.coords.tnsr and
// <base>.weights.tnsr sidecar tensors. Round-trips bit-identically.
void save_trajectory(const trajgen::Trajectory& traj, const std::string& base);
trajgen::Trajectory load_trajectory(const std::string& base);

// Binary PGM scatter plot of the first frame's sample positions.
void save_scatter_pgm(const trajgen::Trajectory& traj, const std::string& path,
                      int size = 512);

}  // namespace sf::io
