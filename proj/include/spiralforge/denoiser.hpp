#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "spiralforge/metrics.hpp"
#include "spiralforge/tensor.hpp"

namespace sf::denoiser {

// Encoder-decoder channel widths per stage. The cascade has four denoising
// blocks of identical architecture; the three first-layer blocks share one
// weight set, so the model holds exactly two parameter sets.
struct ModelConfig {
  int c1 = 16;
  int c2 = 32;
  int c3 = 64;
};

// Analytic parameter count of one denoising block.
std::int64_t block_param_count(const ModelConfig& cfg);

struct Model {
  ModelConfig cfg;
  std::vector<double> params;  // block1 weights then block2 weights
  std::int64_t block1_size = 0;
  std::int64_t block2_size = 0;
};

Model init_model(const ModelConfig& cfg, std::uint64_t seed);

// window [5, H, W] -> latest-frame estimate [H, W], clamped at 0.
// H and W must be divisible by 4.
RealArray forward(const Model& model, const RealArray& window);

// series [T, H, W] -> [T-4, H, W]; output k reconstructs input frame k+4.
RealArray sliding_window_apply(const Model& model, const RealArray& series);

// 1 - ssim(pred, target); if grad is non-null it receives d(loss)/d(pred).
double ssim_loss(const RealArray& pred, const RealArray& target,
                 RealArray* grad = nullptr,
                 const metrics::SsimParams& p = {});

// Loss plus full parameter gradient for one training pair.
double loss_and_param_grad(const Model& model, const RealArray& window,
                           const RealArray& target, std::vector<double>* grad,
                           const metrics::SsimParams& p = {});

struct SeriesPair {
  RealArray gridded;  // [T, H, W]
  RealArray gt;       // [T, H, W]
};
using Dataset = std::vector<SeriesPair>;

struct TrainHyper {
  double lr = 1e-3;
  int batch = 8;
};

struct TrainState {
  Model model;
  std::vector<double> adam_m, adam_v;
  std::int64_t adam_t = 0;
  int epoch = 0;
  std::mt19937_64 rng;
  double latest_val_ssim = 0.0;
  double best_val_ssim = 0.0;
  std::vector<double> loss_history;  // mean training loss per epoch
};

TrainState init_train_state(const ModelConfig& cfg, std::uint64_t seed);

// Runs n_epochs of minibatch Adam on ssim_loss over all 5-frame windows of
// the training set, then recomputes validation SSIM. Deterministic given the
// state's rng. Throws NonFiniteLoss on divergence.
void train_epochs(TrainState& state, const Dataset& train, const Dataset& val,
                  int n_epochs, const TrainHyper& hyper = {});

// Mean SSIM of sliding-window reconstructions against ground truth.
double evaluate_ssim(const Model& model, const Dataset& data);

// Checkpoint: JSON header (architecture, epoch, rng, version) + f64 tensors
// (params, Adam moments). Round-trips bit-identically.
void save_checkpoint(const TrainState& state, const std::string& path);
TrainState load_checkpoint(const std::string& path);

}  // namespace sf::denoiser
