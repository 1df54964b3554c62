#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spiralforge/tensor.hpp"

namespace sf::stream {

struct StageStats {
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double p95_ms = 0.0;
};

struct PipelineStats {
  StageStats grid, denoise, emit;
  double output_period_ms = 0.0;   // steady-state inter-output interval
  double end_to_end_ms = 0.0;      // mean enqueue -> emit latency
  std::int64_t frames_in = 0;
  std::int64_t frames_out = 0;
};

enum class Mode { Parallel, Serial };

struct StreamOptions {
  Mode mode = Mode::Parallel;
  int window = 5;
  std::size_t queue_capacity = 2;   // bounded FIFO between stages
  double inject_grid_ms = 0.0;      // extra per-frame stage delay
  double inject_denoise_ms = 0.0;
  double inject_emit_ms = 0.0;
  double source_timeout_ms = 10000.0;
  // Skip this many leading output intervals when measuring the period.
  int warmup_outputs = 3;
};

// Per-frame stage functions. grid maps a raw frame to a gridded image;
// denoise maps the current window (oldest first, `window` frames) to one
// output frame. Both must be pure so streamed output matches offline.
using GridFn = std::function<RealArray(const RealArray& frame, std::int64_t index)>;
using DenoiseFn = std::function<RealArray(const std::vector<RealArray>& window)>;

struct StreamResult {
  RealArray frames;  // [T - window + 1, H, W]
  PipelineStats stats;
};

// Runs acquire -> grid -> denoise -> emit over the frames of `source`
// ([T, H, W]). Parallel mode overlaps gridding of frame k with denoising of
// the window ending at frame k-1 over bounded FIFO channels; serial mode runs
// the stages back to back. FIFO order and numerics are identical in both.
StreamResult run_stream(const RealArray& source, const GridFn& grid,
                        const DenoiseFn& denoise, const StreamOptions& options = {});

// JSON report mirroring the grid/denoise/other latency decomposition.
std::string latency_report_json(const PipelineStats& stats);
std::string latency_report_text(const PipelineStats& stats);

}  // namespace sf::stream
