#pragma once

#include <string>

#include "spiralforge/dataset.hpp"
#include "spiralforge/denoiser.hpp"
#include "spiralforge/hyperband.hpp"
#include "spiralforge/stream.hpp"
#include "spiralforge/trajgen.hpp"

namespace sf::runconfig {

// One JSON config drives every subcommand. Every field has a default;
// unknown keys are rejected; parse -> serialize is stable.
struct RunConfig {
  trajgen::GradientSystem system;
  dataset::BuildOptions phantom;
  trajgen::SpiralConfig trajectory;
  std::string trajectory_kind = "spiral";  // spiral | uniform_spiral | radial
  hyperband::SearchSpace search_space;
  denoiser::ModelConfig model;
  denoiser::TrainHyper training;
  int train_epochs = 5;
  std::uint64_t train_seed = 1;
  hyperband::HyperBandParams hyperband;
  stream::StreamOptions stream;
  std::string stream_mode = "parallel";  // parallel | serial
};

RunConfig from_json_text(const std::string& text);
RunConfig load(const std::string& path);
std::string to_json_text(const RunConfig& cfg);  // stable echo

}  // namespace sf::runconfig
