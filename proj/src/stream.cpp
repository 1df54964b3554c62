#include "spiralforge/stream.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace sf::stream {

namespace {

using Clock = std::chrono::steady_clock;
using json = nlohmann::json;

double ms_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

void sleep_ms(double ms) {
  if (ms > 0.0)
    std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(ms));
}

struct FramePacket {
  std::int64_t index = 0;
  RealArray image;
  Clock::time_point enqueue;
};

// Bounded FIFO channel with blocking push/pop and close semantics.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {}

  void push(T item) {
    std::unique_lock<std::mutex> lock(mu_);
    not_full_.wait(lock, [&] { return items_.size() < capacity_ || closed_; });
    if (closed_) return;
    items_.push_back(std::move(item));
    not_empty_.notify_one();
  }

  // Returns nullopt when closed and drained, throws SourceStall on timeout.
  std::optional<T> pop(double timeout_ms) {
    std::unique_lock<std::mutex> lock(mu_);
    bool ok = not_empty_.wait_for(
        lock, std::chrono::duration<double, std::milli>(timeout_ms),
        [&] { return !items_.empty() || closed_; });
    if (!ok) throw Error(ErrorCode::SourceStall, "stage input timed out");
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return item;
  }

  void close() {
    std::lock_guard<std::mutex> lock(mu_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

 private:
  std::size_t capacity_;
  std::deque<T> items_;
  bool closed_ = false;
  std::mutex mu_;
  std::condition_variable not_full_, not_empty_;
};

StageStats summarize(std::vector<double> v) {
  StageStats s;
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean_ms = sum / static_cast<double>(v.size());
  std::sort(v.begin(), v.end());
  s.median_ms = v[v.size() / 2];
  s.p95_ms = v[static_cast<std::size_t>(0.95 * (v.size() - 1))];
  return s;
}

}  // namespace

StreamResult run_stream(const RealArray& source, const GridFn& grid,
                        const DenoiseFn& denoise, const StreamOptions& options) {
  if (source.shape.size() != 3)
    throw Error(ErrorCode::ShapeMismatch, "source must be [T, H, W]");
  std::int64_t t = source.dim(0), h = source.dim(1), w = source.dim(2);
  int win = options.window;
  if (t < win) throw Error(ErrorCode::SeriesTooShort, "fewer frames than the window");

  auto frame_at = [&](std::int64_t f) {
    RealArray frame({h, w});
    std::copy_n(source.data.begin() + f * h * w, h * w, frame.data.begin());
    return frame;
  };

  std::vector<double> grid_ms, denoise_ms, emit_ms, periods, e2e;
  std::vector<Clock::time_point> enqueue_times(static_cast<std::size_t>(t));

  StreamResult result;
  result.frames = RealArray({t - win + 1, h, w});
  std::int64_t emitted = 0;
  Clock::time_point last_emit{};

  auto emit_frame = [&](const FramePacket& pkt) {
    sleep_ms(options.inject_emit_ms);
    auto now = Clock::now();
    if (pkt.index - (win - 1) != emitted)
      throw Error(ErrorCode::StageError, "output frames out of order");
    std::copy(pkt.image.data.begin(), pkt.image.data.end(),
              result.frames.data.begin() + emitted * h * w);
    if (emitted > 0) periods.push_back(ms_between(last_emit, now));
    last_emit = now;
    e2e.push_back(ms_between(pkt.enqueue, now));
    ++emitted;
  };

  if (options.mode == Mode::Serial) {
    std::vector<RealArray> window;
    for (std::int64_t f = 0; f < t; ++f) {
      FramePacket pkt;
      pkt.index = f;
      pkt.enqueue = Clock::now();
      auto g0 = Clock::now();
      RealArray gridded = grid(frame_at(f), f);
      sleep_ms(options.inject_grid_ms);
      grid_ms.push_back(ms_between(g0, Clock::now()));
      window.push_back(std::move(gridded));
      if (static_cast<int>(window.size()) > win) window.erase(window.begin());
      if (static_cast<int>(window.size()) == win) {
        auto d0 = Clock::now();
        pkt.image = denoise(window);
        sleep_ms(options.inject_denoise_ms);
        denoise_ms.push_back(ms_between(d0, Clock::now()));
        auto em0 = Clock::now();
        emit_frame(pkt);
        emit_ms.push_back(ms_between(em0, Clock::now()));
      }
    }
  } else {
    BoundedQueue<FramePacket> to_denoise(options.queue_capacity);
    BoundedQueue<FramePacket> to_emit(options.queue_capacity);
    std::exception_ptr grid_error, denoise_error;

    std::thread grid_thread([&] {
      try {
        for (std::int64_t f = 0; f < t; ++f) {
          FramePacket pkt;
          pkt.index = f;
          pkt.enqueue = Clock::now();
          auto g0 = Clock::now();
          pkt.image = grid(frame_at(f), f);
          sleep_ms(options.inject_grid_ms);
          grid_ms.push_back(ms_between(g0, Clock::now()));
          to_denoise.push(std::move(pkt));
        }
      } catch (...) {
        grid_error = std::current_exception();
      }
      to_denoise.close();
    });

    std::thread denoise_thread([&] {
      try {
        std::vector<RealArray> window;
        while (true) {
          auto pkt = to_denoise.pop(options.source_timeout_ms);
          if (!pkt) break;
          window.push_back(std::move(pkt->image));
          if (static_cast<int>(window.size()) > win) window.erase(window.begin());
          if (static_cast<int>(window.size()) == win) {
            auto d0 = Clock::now();
            FramePacket out;
            out.index = pkt->index;
            out.enqueue = pkt->enqueue;
            out.image = denoise(window);
            sleep_ms(options.inject_denoise_ms);
            denoise_ms.push_back(ms_between(d0, Clock::now()));
            to_emit.push(std::move(out));
          }
        }
      } catch (...) {
        denoise_error = std::current_exception();
      }
      to_emit.close();
    });

    try {
      while (true) {
        auto pkt = to_emit.pop(options.source_timeout_ms);
        if (!pkt) break;
        auto em0 = Clock::now();
        emit_frame(*pkt);
        emit_ms.push_back(ms_between(em0, Clock::now()));
      }
    } catch (...) {
      to_denoise.close();
      to_emit.close();
      grid_thread.join();
      denoise_thread.join();
      throw;
    }
    grid_thread.join();
    denoise_thread.join();
    if (grid_error) std::rethrow_exception(grid_error);
    if (denoise_error) std::rethrow_exception(denoise_error);
  }

  if (emitted != t - win + 1)
    throw Error(ErrorCode::StageError, "frame loss in the pipeline");

  PipelineStats& stats = result.stats;
  stats.grid = summarize(grid_ms);
  stats.denoise = summarize(denoise_ms);
  stats.emit = summarize(emit_ms);
  stats.frames_in = t;
  stats.frames_out = emitted;
  if (!e2e.empty()) {
    double sum = 0.0;
    for (double x : e2e) sum += x;
    stats.end_to_end_ms = sum / static_cast<double>(e2e.size());
  }
  if (static_cast<int>(periods.size()) > options.warmup_outputs) {
    double sum = 0.0;
    int n = 0;
    for (std::size_t i = static_cast<std::size_t>(options.warmup_outputs);
         i < periods.size(); ++i, ++n)
      sum += periods[i];
    stats.output_period_ms = sum / n;
  } else if (!periods.empty()) {
    double sum = 0.0;
    for (double p : periods) sum += p;
    stats.output_period_ms = sum / static_cast<double>(periods.size());
  }
  return result;
}

std::string latency_report_json(const PipelineStats& stats) {
  auto stage = [](const StageStats& s) {
    return json{{"mean_ms", s.mean_ms}, {"median_ms", s.median_ms}, {"p95_ms", s.p95_ms}};
  };
  json j{{"grid", stage(stats.grid)},
         {"denoise", stage(stats.denoise)},
         {"other", stage(stats.emit)},
         {"output_period_ms", stats.output_period_ms},
         {"end_to_end_ms", stats.end_to_end_ms},
         {"frames_in", stats.frames_in},
         {"frames_out", stats.frames_out}};
  return j.dump(2);
}

std::string latency_report_text(const PipelineStats& stats) {
  std::ostringstream os;
  os << "frames: " << stats.frames_out << "/" << stats.frames_in << "\n"
     << "grid     mean " << stats.grid.mean_ms << " ms (p95 " << stats.grid.p95_ms
     << ")\n"
     << "denoise  mean " << stats.denoise.mean_ms << " ms (p95 "
     << stats.denoise.p95_ms << ")\n"
     << "other    mean " << stats.emit.mean_ms << " ms (p95 " << stats.emit.p95_ms
     << ")\n"
     << "output period " << stats.output_period_ms << " ms, end-to-end "
     << stats.end_to_end_ms << " ms\n";
  return os.str();
}

}  // namespace sf::stream
