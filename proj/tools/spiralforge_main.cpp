// spiralforge: trajectory design + simulation + training + search + streaming
// in one binary. Exit codes: 0 ok, 1 usage/bounds, 2 data/format, 3 numerical.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "spiralforge/dataset.hpp"
#include "spiralforge/denoiser.hpp"
#include "spiralforge/error.hpp"
#include "spiralforge/hyperband.hpp"
#include "spiralforge/io.hpp"
#include "spiralforge/metrics.hpp"
#include "spiralforge/nufft.hpp"
#include "spiralforge/runconfig.hpp"
#include "spiralforge/stream.hpp"
#include "spiralforge/trajgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sf;

namespace {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ShapeMismatch:
    case ErrorCode::CoordOutOfRange:
    case ErrorCode::FormatError:
    case ErrorCode::IoError:
    case ErrorCode::ZeroReference:
    case ErrorCode::ZeroReferenceEnergy:
    case ErrorCode::ImageSmallerThanWindow:
    case ErrorCode::DegenerateDensity:
      return 2;
    case ErrorCode::NonFiniteLoss:
    case ErrorCode::ExhaustedRetries:
    case ErrorCode::EvaluatorFailure:
    case ErrorCode::SourceStall:
    case ErrorCode::StageError:
      return 3;
    default:
      return 1;  // usage, bounds, config
  }
}

int thread_cap() {
  const char* env = std::getenv("SPIRALFORGE_THREADS");
  if (!env || !*env) return 0;  // unset: no cap
  int v = std::atoi(env);
  return v > 0 ? v : 1;
}

runconfig::RunConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  return runconfig::load(path);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
}

trajgen::Trajectory build_trajectory(const runconfig::RunConfig& cfg, int n_frames) {
  if (cfg.trajectory_kind == "uniform_spiral")
    return trajgen::uniform_spiral(cfg.system, 92.0, cfg.trajectory.tr_ms,
                                   cfg.trajectory.t_acq_ms, cfg.trajectory.ordering,
                                   n_frames);
  if (cfg.trajectory_kind == "radial") {
    int spokes = trajgen::interleave_count(cfg.trajectory.t_acq_ms, cfg.trajectory.tr_ms);
    return trajgen::radial_trajectory(cfg.system, spokes, n_frames);
  }
  return trajgen::assemble_trajectory(cfg.trajectory, cfg.system, n_frames);
}

// Single-frame trajectory view so the stream grid stage can reuse grid_series.
trajgen::Trajectory frame_slice(const trajgen::Trajectory& traj, std::int64_t frame) {
  trajgen::Trajectory one = traj;
  std::int64_t f = frame % traj.n_frames;
  one.n_frames = 1;
  one.coords = RealArray({1, traj.n_interleaves, traj.n_samples, 2});
  std::int64_t per_frame = static_cast<std::int64_t>(traj.n_interleaves) * traj.n_samples * 2;
  std::copy(traj.coords.data.begin() + f * per_frame,
            traj.coords.data.begin() + (f + 1) * per_frame, one.coords.data.begin());
  return one;
}

int cmd_trajgen(const std::string& config_path, const std::string& out_dir,
                int n_frames, bool scatter) {
  runconfig::RunConfig cfg = load_config(config_path);
  cfg.trajectory.validate();
  cfg.system.validate();
  fs::create_directories(out_dir);
  trajgen::Trajectory traj = build_trajectory(cfg, n_frames);
  std::string base = (fs::path(out_dir) / "trajectory").string();
  io::save_trajectory(traj, base);
  if (scatter) io::save_scatter_pgm(traj, (fs::path(out_dir) / "scatter.pgm").string());
  write_text(fs::path(out_dir) / "config.json", runconfig::to_json_text(cfg));
  std::cout << "trajectory kind=" << traj.kind << " frames=" << traj.n_frames
            << " interleaves=" << traj.n_interleaves << " samples=" << traj.n_samples
            << "\n";
  return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& traj_base,
                 const std::string& out_dir) {
  runconfig::RunConfig cfg = load_config(config_path);
  fs::create_directories(out_dir);
  trajgen::Trajectory traj = traj_base.empty()
                                 ? build_trajectory(cfg, cfg.phantom.t_frames)
                                 : io::load_trajectory(traj_base);
  dataset::SplitDataset data = dataset::build_dataset(cfg.phantom, traj);

  auto dump = [&](const denoiser::Dataset& split, const std::string& name) {
    if (split.empty()) return;
    std::int64_t n = static_cast<std::int64_t>(split.size());
    RealArray gt({n, cfg.phantom.t_frames, cfg.phantom.height, cfg.phantom.width});
    RealArray gr = gt;
    std::int64_t per = gt.numel() / n;
    for (std::int64_t i = 0; i < n; ++i) {
      std::copy(split[i].gt.data.begin(), split[i].gt.data.end(),
                gt.data.begin() + i * per);
      std::copy(split[i].gridded.data.begin(), split[i].gridded.data.end(),
                gr.data.begin() + i * per);
    }
    tensor_file::write_f64((fs::path(out_dir) / (name + "_gt.tnsr")).string(), gt);
    tensor_file::write_f64((fs::path(out_dir) / (name + "_gridded.tnsr")).string(), gr);
  };
  dump(data.train, "train");
  dump(data.val, "val");
  dump(data.test, "test");

  json manifest = {{"n_series", cfg.phantom.n_series},
                   {"splits",
                    {{"train", data.indices.train},
                     {"val", data.indices.val},
                     {"test", data.indices.test}}}};
  write_text(fs::path(out_dir) / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "simulated train=" << data.train.size() << " val=" << data.val.size()
            << " test=" << data.test.size() << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& traj_base,
              const std::string& out_dir, int epochs_override) {
  runconfig::RunConfig cfg = load_config(config_path);
  fs::create_directories(out_dir);
  trajgen::Trajectory traj = traj_base.empty()
                                 ? build_trajectory(cfg, cfg.phantom.t_frames)
                                 : io::load_trajectory(traj_base);
  dataset::SplitDataset data = dataset::build_dataset(cfg.phantom, traj);
  denoiser::TrainState state = denoiser::init_train_state(cfg.model, cfg.train_seed);
  int epochs = epochs_override > 0 ? epochs_override : cfg.train_epochs;
  denoiser::train_epochs(state, data.train, data.val, epochs, cfg.training);
  denoiser::save_checkpoint(state, (fs::path(out_dir) / "model.ckpt").string());
  json report = {{"epochs", state.epoch},
                 {"val_ssim", state.latest_val_ssim},
                 {"loss_history", state.loss_history}};
  write_text(fs::path(out_dir) / "train_report.json", report.dump(2) + "\n");
  std::cout << "trained epochs=" << state.epoch << " val_ssim=" << state.latest_val_ssim
            << "\n";
  return 0;
}

hyperband::Evaluator make_evaluator(const runconfig::RunConfig& cfg) {
  return [cfg](const trajgen::SpiralConfig& tc, int /*trial_id*/, int additional_epochs,
               const std::string& state_in, const std::string& state_out) {
    trajgen::Trajectory traj =
        trajgen::assemble_trajectory(tc, cfg.system, cfg.phantom.t_frames);
    dataset::BuildOptions opts = cfg.phantom;
    dataset::SplitDataset data = dataset::build_dataset(opts, traj);
    denoiser::TrainState state =
        state_in.empty() ? denoiser::init_train_state(cfg.model, cfg.train_seed)
                         : denoiser::load_checkpoint(state_in);
    denoiser::train_epochs(state, data.train, data.val, additional_epochs, cfg.training);
    if (!state_out.empty()) denoiser::save_checkpoint(state, state_out);
    return state.latest_val_ssim;
  };
}

int cmd_hyperband(const std::string& config_path, const std::string& out_dir,
                  int stop_after_rungs) {
  runconfig::RunConfig cfg = load_config(config_path);
  fs::create_directories(out_dir);
  hyperband::RunOptions opts;
  opts.stop_after_rungs = stop_after_rungs;
  hyperband::SearchResult result = hyperband::run_search(
      cfg.search_space, cfg.hyperband, make_evaluator(cfg), out_dir, opts);
  if (stop_after_rungs >= 0) {
    std::cout << "search paused after " << stop_after_rungs << " rung(s)\n";
    return 0;
  }
  std::cout << "best trial=" << result.best_trial << " score=" << result.best_score
            << " epochs=" << result.epochs_consumed << "\n";
  return 0;
}

int cmd_evaluate(const std::string& recon_path, const std::string& gt_path,
                 const std::string& out_dir) {
  fs::create_directories(out_dir);
  RealArray recon = tensor_file::read_real(recon_path);
  RealArray gt = tensor_file::read_real(gt_path);
  if (recon.shape.size() == 3) recon.shape.insert(recon.shape.begin(), 1);
  if (gt.shape.size() == 3) gt.shape.insert(gt.shape.begin(), 1);
  if (recon.shape.size() != 4 || gt.shape.size() != 4)
    throw Error(ErrorCode::ShapeMismatch, "expected [N,T,H,W] or [T,H,W] tensors");
  if (recon.shape[0] != gt.shape[0] || recon.shape[2] != gt.shape[2] ||
      recon.shape[3] != gt.shape[3] || recon.shape[1] > gt.shape[1])
    throw Error(ErrorCode::ShapeMismatch, "recon/gt shapes incompatible");
  std::int64_t n = recon.shape[0], tr = recon.shape[1], tg = gt.shape[1];
  std::int64_t h = recon.shape[2], w = recon.shape[3];
  std::int64_t lag = tg - tr;  // recon frame k aligns with gt frame k + lag

  std::ostringstream csv;
  csv << "series_id,frame,nrmse,psnr_db,ssim,lape_ratio\n";
  std::vector<double> all_nrmse, all_psnr, all_ssim, all_lape;
  for (std::int64_t s = 0; s < n; ++s) {
    for (std::int64_t t = 0; t < tr; ++t) {
      RealArray r({h, w}), g({h, w});
      for (std::int64_t y = 0; y < h; ++y)
        for (std::int64_t x = 0; x < w; ++x) {
          r(y, x) = recon(s, t, y, x);
          g(y, x) = gt(s, t + lag, y, x);
        }
      double e1 = metrics::nrmse(r, g);
      double e2 = metrics::psnr(r, g, 1.0);
      double e3 = metrics::ssim(r, g);
      double e4 = metrics::lape(r, g);
      csv << s << "," << (t + lag + 1) << "," << e1 << "," << e2 << "," << e3 << ","
          << e4 << "\n";
      all_nrmse.push_back(e1);
      all_psnr.push_back(e2);
      all_ssim.push_back(e3);
      all_lape.push_back(e4);
    }
  }
  write_text(fs::path(out_dir) / "metrics.csv", csv.str());
  auto agg = [](const std::vector<double>& v) {
    metrics::Aggregate a = metrics::aggregate(v);
    return json{{"mean", a.mean}, {"std", a.stddev}};
  };
  json summary = {{"nrmse", agg(all_nrmse)},
                  {"psnr_db", agg(all_psnr)},
                  {"ssim", agg(all_ssim)},
                  {"lape_ratio", agg(all_lape)}};
  write_text(fs::path(out_dir) / "summary.json", summary.dump(2) + "\n");
  std::cout << "evaluated " << n << " series x " << tr << " frames\n";
  return 0;
}

int cmd_stream(const std::string& config_path, const std::string& input_path,
               const std::string& traj_base, const std::string& model_path,
               const std::string& mode, const std::string& report_path,
               const std::string& out_path, double inject_grid_ms,
               double inject_denoise_ms) {
  runconfig::RunConfig cfg = load_config(config_path);
  RealArray source = tensor_file::read_real(input_path);
  if (source.shape.size() != 3)
    throw Error(ErrorCode::ShapeMismatch, "stream input must be [T, H, W]");
  trajgen::Trajectory traj = traj_base.empty()
                                 ? build_trajectory(cfg, cfg.phantom.t_frames)
                                 : io::load_trajectory(traj_base);
  denoiser::TrainState state = denoiser::load_checkpoint(model_path);

  stream::StreamOptions opts = cfg.stream;
  if (!mode.empty()) {
    if (mode != "parallel" && mode != "serial")
      throw Error(ErrorCode::ConfigError, "mode must be parallel or serial");
    opts.mode = mode == "serial" ? stream::Mode::Serial : stream::Mode::Parallel;
  }
  if (inject_grid_ms >= 0) opts.inject_grid_ms = inject_grid_ms;
  if (inject_denoise_ms >= 0) opts.inject_denoise_ms = inject_denoise_ms;
  int cap = thread_cap();
  if (cap > 0 && cap < 2) opts.mode = stream::Mode::Serial;

  std::int64_t h = source.shape[1], w = source.shape[2];
  ComplexArray maps = phantom::coil_maps(cfg.phantom.n_coils, static_cast<int>(h),
                                         static_cast<int>(w), cfg.phantom.seed ^ 0xC01Cu);
  stream::GridFn grid = [&](const RealArray& frame, std::int64_t index) {
    RealArray series({1, h, w});
    series.data = frame.data;
    RealArray out = nufft::grid_series(series, maps, frame_slice(traj, index),
                                       cfg.phantom.noise_sigma,
                                       cfg.phantom.seed + static_cast<std::uint64_t>(index));
    RealArray img({h, w});
    img.data = out.data;
    return img;
  };
  stream::DenoiseFn denoise = [&](const std::vector<RealArray>& window) {
    RealArray stacked({static_cast<std::int64_t>(window.size()), h, w});
    for (std::size_t i = 0; i < window.size(); ++i)
      std::copy(window[i].data.begin(), window[i].data.end(),
                stacked.data.begin() + static_cast<std::int64_t>(i) * h * w);
    return denoiser::forward(state.model, stacked);
  };

  stream::StreamResult result = stream::run_stream(source, grid, denoise, opts);
  if (!report_path.empty())
    write_text(report_path, stream::latency_report_json(result.stats));
  if (!out_path.empty()) tensor_file::write_f64(out_path, result.frames);
  std::cout << stream::latency_report_text(result.stats);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spiralforge: spiral trajectory design, NUFFT simulation, denoiser "
               "training, hyperband search, and streaming reconstruction"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", traj_base, recon_path, gt_path;
  std::string input_path, model_path, mode, report_path, out_path;
  int n_frames = 12, train_epochs = 0, stop_after_rungs = -1;
  bool scatter = false;
  double inject_grid_ms = -1.0, inject_denoise_ms = -1.0;

  auto* tg = app.add_subcommand("trajgen", "Generate a sampling trajectory");
  tg->add_option("--config", config_path, "JSON run config");
  tg->add_option("--out", out_dir, "Output directory");
  tg->add_option("--frames", n_frames, "Number of temporal frames");
  tg->add_flag("--scatter", scatter, "Also write a PGM scatter plot");

  auto* sim = app.add_subcommand("simulate", "Phantoms + gridded recon dataset");
  sim->add_option("--config", config_path, "JSON run config");
  sim->add_option("--traj", traj_base, "Trajectory base path (from trajgen)");
  sim->add_option("--out", out_dir, "Output directory");

  auto* trn = app.add_subcommand("train", "Train the sliding-window denoiser");
  trn->add_option("--config", config_path, "JSON run config");
  trn->add_option("--traj", traj_base, "Trajectory base path");
  trn->add_option("--out", out_dir, "Output directory");
  trn->add_option("--epochs", train_epochs, "Override training epochs");

  auto* hb = app.add_subcommand("hyperband", "Joint trajectory/denoiser search");
  hb->add_option("--config", config_path, "JSON run config");
  hb->add_option("--out", out_dir, "Checkpoint/report directory (resumes from a ledger)");
  hb->add_option("--stop-after-rungs", stop_after_rungs,
                 "Pause after N completed rungs (testing aid)");
  hb->add_flag("--resume", "Accepted for clarity; resuming is automatic");

  auto* ev = app.add_subcommand("evaluate", "Image metrics CSV + JSON summary");
  ev->add_option("--recon", recon_path, "Reconstruction tensor [N,T,H,W] or [T,H,W]")
      ->required();
  ev->add_option("--gt", gt_path, "Ground-truth tensor")->required();
  ev->add_option("--out", out_dir, "Output directory");

  auto* st = app.add_subcommand("stream", "Concurrent streaming reconstruction");
  st->add_option("--config", config_path, "JSON run config");
  st->add_option("--input", input_path, "Source series tensor [T,H,W]")->required();
  st->add_option("--traj", traj_base, "Trajectory base path");
  st->add_option("--model", model_path, "Denoiser checkpoint")->required();
  st->add_option("--mode", mode, "parallel | serial");
  st->add_option("--inject-grid-ms", inject_grid_ms, "Extra grid-stage delay");
  st->add_option("--inject-denoise-ms", inject_denoise_ms, "Extra denoise-stage delay");
  st->add_option("--report", report_path, "Latency report JSON path");
  st->add_option("--out-frames", out_path, "Streamed output tensor path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (tg->parsed()) return cmd_trajgen(config_path, out_dir, n_frames, scatter);
    if (sim->parsed()) return cmd_simulate(config_path, traj_base, out_dir);
    if (trn->parsed()) return cmd_train(config_path, traj_base, out_dir, train_epochs);
    if (hb->parsed()) return cmd_hyperband(config_path, out_dir, stop_after_rungs);
    if (ev->parsed()) return cmd_evaluate(recon_path, gt_path, out_dir);
    if (st->parsed())
      return cmd_stream(config_path, input_path, traj_base, model_path, mode,
                        report_path, out_path, inject_grid_ms, inject_denoise_ms);
  } catch (const Error& e) {
    std::cerr << "SPIRALFORGE_ERROR code=" << error_code_name(e.code()) << " message=\""
              << e.what() << "\"\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "SPIRALFORGE_ERROR code=Internal message=\"" << e.what() << "\"\n";
    return 2;
  }
  return 1;
}
