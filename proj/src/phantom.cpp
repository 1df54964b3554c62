#include "spiralforge/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace sf::phantom {

namespace {

constexpr double kPi = std::numbers::pi;

struct Ellipse {
  double cy, cx, ry, rx, angle, value;
};

// Soft-edged ellipse membership in [0, 1].
double ellipse_at(const Ellipse& e, double y, double x) {
  double dy = y - e.cy, dx = x - e.cx;
  double c = std::cos(e.angle), s = std::sin(e.angle);
  double u = (dx * c + dy * s) / e.rx;
  double v = (-dx * s + dy * c) / e.ry;
  double q = u * u + v * v;
  return std::clamp((1.0 - q) / 0.15 + 1.0, 0.0, 1.0);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

RealArray generate_cine(const PhantomSpec& spec, int t, int h, int w) {
  if (t < 5 || h < 8 || w < 8)
    throw Error(ErrorCode::InvalidDims, "need T >= 5 and H, W >= 8");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  double cy = h / 2.0 + (uni(rng) - 0.5) * 0.15 * h;
  double cx = w / 2.0 + (uni(rng) - 0.5) * 0.15 * w;
  double vr = (0.16 + 0.06 * uni(rng)) * h;   // ventricle base radius
  double ecc = 0.8 + 0.3 * uni(rng);
  double ring = (0.35 + 0.15 * uni(rng)) * vr;  // myocardium thickness
  double phase0 = 2.0 * kPi * uni(rng);
  double vval = 0.75 + 0.25 * uni(rng);
  double mval = 0.35 + 0.15 * uni(rng);

  std::vector<Ellipse> statics;
  int n_static = std::clamp(spec.n_ellipses, 2, 4);
  for (int i = 0; i < n_static; ++i) {
    Ellipse e;
    e.cy = (0.15 + 0.7 * uni(rng)) * h;
    e.cx = (0.15 + 0.7 * uni(rng)) * w;
    e.ry = (0.05 + 0.08 * uni(rng)) * h;
    e.rx = (0.05 + 0.08 * uni(rng)) * w;
    e.angle = kPi * uni(rng);
    e.value = 0.25 + 0.5 * uni(rng);
    statics.push_back(e);
  }

  // Smooth background: a handful of low-frequency cosines plus a pedestal.
  struct Wave {
    double fy, fx, ph, amp;
  };
  std::vector<Wave> waves;
  for (int i = 0; i < 4; ++i)
    waves.push_back({(0.5 + 1.5 * uni(rng)) / h, (0.5 + 1.5 * uni(rng)) / w,
                     2.0 * kPi * uni(rng), spec.background_texture * uni(rng)});

  RealArray out({t, h, w});
  for (int f = 0; f < t; ++f) {
    double osc = std::sin(2.0 * kPi * f / spec.period_frames + phase0);
    double amp = 0.5 * spec.motion_amplitude * h;
    Ellipse vent{cy, cx, vr + amp * osc, ecc * (vr + amp * osc), 0.0, vval};
    // Ring moves in anti-phase: outer boundary shrinks as the ventricle grows.
    double router = vr + ring - amp * osc;
    Ellipse myo_outer{cy, cx, router, ecc * router, 0.0, mval};

    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double bg = 0.12;
        for (const auto& wv : waves)
          bg += wv.amp * std::cos(2.0 * kPi * (wv.fy * y + wv.fx * x) + wv.ph);
        double val = std::max(0.0, bg);
        double mo = ellipse_at(myo_outer, y, x);
        double vi = ellipse_at(vent, y, x);
        val += myo_outer.value * mo + (vent.value - myo_outer.value) * vi;
        for (const auto& e : statics) val += e.value * ellipse_at(e, y, x);
        out(f, y, x) = val;
      }
  }

  double mx = *std::max_element(out.data.begin(), out.data.end());
  for (auto& v : out.data) v /= mx;
  return out;
}

ComplexArray coil_maps(int n_coils, int h, int w, std::uint64_t seed) {
  if (n_coils < 1 || h < 2 || w < 2)
    throw Error(ErrorCode::InvalidDims, "bad coil map dims");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  ComplexArray maps({n_coils, h, w});
  double radius = 0.6 * std::max(h, w);
  double sigma = 0.75 * std::max(h, w);
  for (int c = 0; c < n_coils; ++c) {
    double ang = 2.0 * kPi * (c + 0.3 * uni(rng)) / n_coils;
    double cy = h / 2.0 + radius * std::sin(ang);
    double cx = w / 2.0 + radius * std::cos(ang);
    double py = 0.5 * (uni(rng) - 0.5) / h;  // per-coil linear phase ramp
    double px = 0.5 * (uni(rng) - 0.5) / w;
    double ph0 = 2.0 * kPi * c / n_coils;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
        double mag = 0.1 + std::exp(-d2 / (2.0 * sigma * sigma));
        double phase = ph0 + 2.0 * kPi * (py * y + px * x);
        maps(c, y, x) = std::polar(mag, phase);
      }
  }
  // Normalize so RSS is exactly 1 at every pixel; gridded series then compare
  // directly against the phantom.
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double rss = 0.0;
      for (int c = 0; c < n_coils; ++c) rss += std::norm(maps(c, y, x));
      rss = std::sqrt(rss);
      for (int c = 0; c < n_coils; ++c) maps(c, y, x) /= rss;
    }
  return maps;
}

RealArray transition_sequence(const RealArray& a, const RealArray& b,
                              int switch_frame) {
  if (a.shape.size() != 3 || b.shape.size() != 3 || a.dim(1) != b.dim(1) ||
      a.dim(2) != b.dim(2))
    throw Error(ErrorCode::ShapeMismatch, "series shapes differ");
  std::int64_t t = std::min(a.dim(0), b.dim(0));
  if (switch_frame < 1 || switch_frame > t)
    throw Error(ErrorCode::InvalidDims, "switch_frame out of range");
  std::int64_t h = a.dim(1), w = a.dim(2);
  RealArray out({t, h, w});
  for (std::int64_t f = 0; f < t; ++f) {
    const RealArray& src = (f + 1 < switch_frame) ? a : b;  // 1-indexed switch
    std::copy_n(src.data.begin() + f * h * w, h * w, out.data.begin() + f * h * w);
  }
  return out;
}

SplitIndices split_dataset(int n_series, double f_train, double f_val, double f_test) {
  if (n_series < 1) throw Error(ErrorCode::EmptySplit, "no series");
  if (f_train + f_val + f_test > 1.0 + 1e-9)
    throw Error(ErrorCode::BoundsViolation, "split fractions must sum to <= 1");

  // Stable pseudo-random order from the index hash alone, so the assignment
  // is independent of trajectory and reproducible across runs.
  std::vector<int> order(static_cast<std::size_t>(n_series));
  for (int i = 0; i < n_series; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [](int a, int b) {
    auto ha = splitmix64(static_cast<std::uint64_t>(a));
    auto hb = splitmix64(static_cast<std::uint64_t>(b));
    return ha != hb ? ha < hb : a < b;
  });

  double fracs[3] = {f_train, f_val, f_test};
  int counts[3];
  double rema[3];
  int total = 0;
  for (int i = 0; i < 3; ++i) {
    double ideal = fracs[i] * n_series;
    counts[i] = static_cast<int>(std::floor(ideal + 1e-9));
    rema[i] = ideal - counts[i];
    total += counts[i];
  }
  int want = static_cast<int>(std::llround((f_train + f_val + f_test) * n_series));
  while (total < want) {
    int best = 0;
    for (int i = 1; i < 3; ++i)
      if (rema[i] > rema[best]) best = i;
    ++counts[best];
    rema[best] = -1.0;
    ++total;
  }
  if (counts[0] == 0) throw Error(ErrorCode::EmptySplit, "train split is empty");

  SplitIndices s;
  int pos = 0;
  for (int i = 0; i < counts[0]; ++i) s.train.push_back(order[static_cast<std::size_t>(pos++)]);
  for (int i = 0; i < counts[1]; ++i) s.val.push_back(order[static_cast<std::size_t>(pos++)]);
  for (int i = 0; i < counts[2]; ++i) s.test.push_back(order[static_cast<std::size_t>(pos++)]);
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

}  // namespace sf::phantom
