#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cmath>
#include <random>

#include "spiralforge/error.hpp"
#include "spiralforge/stream.hpp"

#include <nlohmann/json.hpp>

using namespace sf;
using namespace sf::stream;

namespace {

RealArray random_series(int t, int h, int w, std::uint64_t seed) {
  RealArray a({t, h, w});
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : a.data) v = u(rng);
  return a;
}

// Pure synthetic stages with traceable numerics.
GridFn test_grid() {
  return [](const RealArray& frame, std::int64_t index) {
    RealArray out = frame;
    for (auto& v : out.data) v = v * 2.0 + static_cast<double>(index) * 1e-3;
    return out;
  };
}

DenoiseFn test_denoise() {
  return [](const std::vector<RealArray>& window) {
    RealArray out = window.back();
    for (const auto& f : window)
      for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += 0.1 * f.data[i];
    return out;
  };
}

// Offline reference: grid every frame, then slide the window.
RealArray offline(const RealArray& source, const GridFn& grid, const DenoiseFn& denoise,
                  int window) {
  int t = static_cast<int>(source.dim(0));
  int h = static_cast<int>(source.dim(1));
  int w = static_cast<int>(source.dim(2));
  std::vector<RealArray> gridded;
  for (int k = 0; k < t; ++k) {
    RealArray frame({h, w});
    for (int i = 0; i < h * w; ++i)
      frame(i) = source.data[static_cast<std::size_t>(k * h * w + i)];
    gridded.push_back(grid(frame, k));
  }
  RealArray out({t - window + 1, h, w});
  for (int k = window - 1; k < t; ++k) {
    std::vector<RealArray> win(gridded.begin() + (k - window + 1),
                               gridded.begin() + k + 1);
    RealArray d = denoise(win);
    for (int i = 0; i < h * w; ++i)
      out.data[static_cast<std::size_t>((k - window + 1) * h * w + i)] = d(i);
  }
  return out;
}

}  // namespace

TEST_CASE("streamed output is bit-identical to offline in both modes") {
  RealArray src = random_series(14, 8, 8, 3);
  RealArray ref = offline(src, test_grid(), test_denoise(), 5);
  for (Mode mode : {Mode::Parallel, Mode::Serial}) {
    StreamOptions opt;
    opt.mode = mode;
    StreamResult res = run_stream(src, test_grid(), test_denoise(), opt);
    CHECK(res.frames.dim(0) == 10);  // T=14, window=5
    CHECK(res.frames.data == ref.data);
    CHECK(res.stats.frames_in == 14);
    CHECK(res.stats.frames_out == 10);
  }
}

TEST_CASE("no frame loss, duplication, or reordering") {
  // Encode the frame identity in a constant image value; the sink sequence
  // must be exactly 4..T-1 (0-based last frame of each window), in order.
  int t = 40, h = 4, w = 4;
  RealArray src({t, h, w});
  for (int k = 0; k < t; ++k)
    for (int i = 0; i < h * w; ++i) src.data[static_cast<std::size_t>(k * h * w + i)] = k;
  GridFn grid = [](const RealArray& f, std::int64_t) { return f; };
  DenoiseFn take_last = [](const std::vector<RealArray>& win) { return win.back(); };
  StreamOptions opt;
  opt.mode = Mode::Parallel;
  StreamResult res = run_stream(src, grid, take_last, opt);
  REQUIRE(res.frames.dim(0) == t - 4);
  for (int k = 0; k < t - 4; ++k)
    CHECK(res.frames(k, 0, 0) == static_cast<double>(k + 4));
}

// Scheduler contention only ever inflates measured periods, so retrying and
// keeping the fastest run removes load-induced flakiness without loosening
// the bound itself.
static StreamResult best_of_runs(const RealArray& src, const StreamOptions& opt,
                                 int attempts = 3) {
  StreamResult best = run_stream(src, test_grid(), test_denoise(), opt);
  for (int i = 1; i < attempts; ++i) {
    StreamResult r = run_stream(src, test_grid(), test_denoise(), opt);
    if (r.stats.output_period_ms < best.stats.output_period_ms) best = std::move(r);
  }
  return best;
}

TEST_CASE("injected 33/19 ms delays: parallel ~33 ms, serial ~52 ms period") {
  RealArray src = random_series(30, 4, 4, 5);
  StreamOptions opt;
  opt.inject_grid_ms = 33.0;
  opt.inject_denoise_ms = 19.0;

  opt.mode = Mode::Parallel;
  StreamResult par = best_of_runs(src, opt);
  CHECK(par.stats.output_period_ms > 33.0 * 0.8);
  CHECK(par.stats.output_period_ms < 33.0 * 1.2);

  opt.mode = Mode::Serial;
  StreamResult ser = best_of_runs(src, opt);
  CHECK(ser.stats.output_period_ms > 52.0 * 0.8);
  CHECK(ser.stats.output_period_ms < 52.0 * 1.2);

  // Timing does not change numerics.
  CHECK(par.frames.data == ser.frames.data);
  // Stage means reflect the injected costs.
  CHECK(par.stats.grid.mean_ms >= 33.0 * 0.8);
  CHECK(par.stats.denoise.mean_ms >= 19.0 * 0.8);
  // Period is at least the slowest stage mean.
  CHECK(par.stats.output_period_ms >= par.stats.grid.mean_ms * 0.8);
}

TEST_CASE("throughput law: period converges to max stage time across profiles") {
  RealArray src = random_series(24, 4, 4, 6);
  struct Profile {
    double g, d;
  } profiles[] = {{20.0, 5.0}, {5.0, 20.0}, {12.0, 12.0}};
  for (const auto& pr : profiles) {
    CAPTURE(pr.g);
    CAPTURE(pr.d);
    StreamOptions opt;
    opt.mode = Mode::Parallel;
    opt.inject_grid_ms = pr.g;
    opt.inject_denoise_ms = pr.d;
    StreamResult res = best_of_runs(src, opt);
    double expect = std::max(pr.g, pr.d);
    CHECK(res.stats.output_period_ms > expect * 0.75);
    CHECK(res.stats.output_period_ms < expect * 1.35);
  }
}

TEST_CASE("slow sink: bounded queues give backpressure, output still complete") {
  RealArray src = random_series(30, 4, 4, 7);
  StreamOptions opt;
  opt.mode = Mode::Parallel;
  opt.queue_capacity = 2;
  opt.inject_emit_ms = 15.0;  // sink slower than both stages
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};
  GridFn grid = [&](const RealArray& f, std::int64_t i) {
    int cur = ++in_flight;
    int p = peak.load();
    while (cur > p && !peak.compare_exchange_weak(p, cur)) {
    }
    return test_grid()(f, i);
  };
  DenoiseFn denoise = [&](const std::vector<RealArray>& w) {
    --in_flight;
    return test_denoise()(w);
  };
  StreamResult res = run_stream(src, grid, denoise, opt);
  CHECK(res.stats.frames_out == 26);
  RealArray ref = offline(src, test_grid(), test_denoise(), 5);
  CHECK(res.frames.data == ref.data);
  // In-flight gridded frames are bounded by the channel capacities plus the
  // window buffer and the frames each stage holds in hand — far below the
  // 30 frames an unbounded pipeline would run ahead by.
  CHECK(peak.load() <= 2 * static_cast<int>(opt.queue_capacity) + opt.window + 3);
}

TEST_CASE("latency report: zero-delay run and JSON round trip") {
  RealArray src = random_series(12, 4, 4, 8);
  StreamOptions opt;
  opt.mode = Mode::Serial;
  StreamResult res = run_stream(src, test_grid(), test_denoise(), opt);
  CHECK(res.stats.grid.mean_ms < 2.0);
  CHECK(res.stats.denoise.mean_ms < 2.0);
  CHECK(res.stats.frames_out == 8);

  std::string j = latency_report_json(res.stats);
  auto parsed = nlohmann::json::parse(j);
  CHECK(parsed.contains("grid"));
  CHECK(parsed.contains("denoise"));
  CHECK(parsed.contains("other"));
  CHECK(parsed["frames_out"].get<std::int64_t>() == 8);
  CHECK(parsed["grid"]["mean_ms"].get<double>() ==
        doctest::Approx(res.stats.grid.mean_ms));
  // Byte-stable serialize -> parse -> serialize.
  CHECK(nlohmann::json::parse(j).dump(2) == parsed.dump(2));

  std::string txt = latency_report_text(res.stats);
  CHECK(txt.find("grid") != std::string::npos);
  CHECK(txt.find("denoise") != std::string::npos);
}

TEST_CASE("error paths: short series and stage failure") {
  RealArray tiny = random_series(3, 4, 4, 9);
  StreamOptions opt;
  CHECK_THROWS_AS(run_stream(tiny, test_grid(), test_denoise(), opt), Error);

  RealArray src = random_series(10, 4, 4, 10);
  GridFn bad = [](const RealArray&, std::int64_t idx) -> RealArray {
    if (idx == 6) throw Error(ErrorCode::NonFiniteLoss, "synthetic stage failure");
    return RealArray({4, 4});
  };
  for (Mode mode : {Mode::Parallel, Mode::Serial}) {
    StreamOptions o;
    o.mode = mode;
    CHECK_THROWS_AS(run_stream(src, bad, test_denoise(), o), Error);
  }
}
