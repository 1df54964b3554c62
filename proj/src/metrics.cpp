#include "spiralforge/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace sf::metrics {

namespace {

void check_same_shape(const RealArray& x, const RealArray& ref) {
  if (x.shape != ref.shape)
    throw Error(ErrorCode::ShapeMismatch, "image shapes differ");
}

std::vector<double> gaussian_window(int n, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(n) * n);
  double c = (n - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double d2 = (i - c) * (i - c) + (j - c) * (j - c);
      w[static_cast<std::size_t>(i) * n + j] = std::exp(-d2 / (2 * sigma * sigma));
      sum += w[static_cast<std::size_t>(i) * n + j];
    }
  for (auto& v : w) v /= sum;
  return w;
}

}  // namespace

double nrmse(const RealArray& x, const RealArray& ref) {
  check_same_shape(x, ref);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    double d = x.data[i] - ref.data[i];
    num += d * d;
    den += ref.data[i] * ref.data[i];
  }
  if (den <= 0.0) throw Error(ErrorCode::ZeroReference, "reference has zero norm");
  return std::sqrt(num / den);
}

double psnr(const RealArray& x, const RealArray& ref, double peak) {
  check_same_shape(x, ref);
  if (peak <= 0.0) peak = *std::max_element(ref.data.begin(), ref.data.end());
  double mse = 0.0;
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    double d = x.data[i] - ref.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(x.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(peak / std::sqrt(mse));
}

double ssim(const RealArray& x, const RealArray& ref, const SsimParams& p) {
  check_same_shape(x, ref);
  if (x.shape.size() != 2)
    throw Error(ErrorCode::ShapeMismatch, "ssim expects 2D images");
  std::int64_t h = x.dim(0), w = x.dim(1);
  int n = p.window;
  if (h < n || w < n)
    throw Error(ErrorCode::ImageSmallerThanWindow, "image smaller than SSIM window");

  auto win = gaussian_window(n, p.sigma);
  double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
  double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);

  double total = 0.0;
  std::int64_t count = 0;
  for (std::int64_t i = 0; i + n <= h; ++i) {
    for (std::int64_t j = 0; j + n <= w; ++j) {
      double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          double g = win[static_cast<std::size_t>(a) * n + b];
          double xv = x(i + a, j + b);
          double yv = ref(i + a, j + b);
          mx += g * xv;
          my += g * yv;
          sxx += g * xv * xv;
          syy += g * yv * yv;
          sxy += g * xv * yv;
        }
      double vx = sxx - mx * mx;
      double vy = syy - my * my;
      double cov = sxy - mx * my;
      double s = ((2 * mx * my + c1) * (2 * cov + c2)) /
                 ((mx * mx + my * my + c1) * (vx + vy + c2));
      total += s;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

double laplacian_energy(const RealArray& x) {
  std::int64_t h = x.dim(0), w = x.dim(1);
  auto at = [&](std::int64_t i, std::int64_t j) {
    // Reflective border.
    if (i < 0) i = -i;
    if (j < 0) j = -j;
    if (i >= h) i = 2 * h - 2 - i;
    if (j >= w) j = 2 * w - 2 - j;
    return x(i, j);
  };
  double e = 0.0;
  for (std::int64_t i = 0; i < h; ++i)
    for (std::int64_t j = 0; j < w; ++j) {
      double lap = at(i - 1, j) + at(i + 1, j) + at(i, j - 1) + at(i, j + 1) -
                   4.0 * at(i, j);
      e += lap * lap;
    }
  return e / static_cast<double>(h * w);
}

double lape(const RealArray& x, const RealArray& ref) {
  check_same_shape(x, ref);
  double er = laplacian_energy(ref);
  if (er <= 0.0)
    throw Error(ErrorCode::ZeroReferenceEnergy, "reference Laplacian energy is zero");
  return laplacian_energy(x) / er;
}

TransitionReport transition_curve(const RealArray& gt_series,
                                  const RealArray& recon_series, int switch_frame,
                                  int first_frame) {
  std::int64_t t_gt = gt_series.dim(0);
  std::int64_t t_rc = recon_series.dim(0);
  if (t_rc != t_gt - first_frame + 1)
    throw Error(ErrorCode::ShapeMismatch, "recon/gt frame counts inconsistent");

  TransitionReport rep;
  rep.first_frame = first_frame;
  rep.switch_frame = switch_frame;

  std::int64_t h = gt_series.dim(1), w = gt_series.dim(2);
  auto frame_of = [&](const RealArray& s, std::int64_t t) {
    RealArray f({h, w});
    std::copy_n(s.data.begin() + t * h * w, h * w, f.data.begin());
    return f;
  };

  for (std::int64_t k = 0; k < t_rc; ++k)
    rep.ssim_per_frame.push_back(
        ssim(frame_of(recon_series, k), frame_of(gt_series, first_frame - 1 + k)));

  // Pre-switch mean over reconstructable frames before the switch.
  double pre = 0.0;
  int npre = 0;
  for (std::int64_t k = 0; k < t_rc; ++k) {
    int frame = first_frame + static_cast<int>(k);
    if (frame < switch_frame) {
      pre += rep.ssim_per_frame[static_cast<std::size_t>(k)];
      ++npre;
    }
  }
  rep.pre_switch_mean = npre > 0 ? pre / npre : 0.0;

  rep.post_switch_min = 1.0;
  bool first_post_seen = false;
  for (std::int64_t k = 0; k < t_rc; ++k) {
    int frame = first_frame + static_cast<int>(k);
    if (frame >= switch_frame) {
      double s = rep.ssim_per_frame[static_cast<std::size_t>(k)];
      if (!first_post_seen) {
        rep.first_post_switch_ssim = s;
        first_post_seen = true;
      }
      rep.post_switch_min = std::min(rep.post_switch_min, s);
      if (rep.recovery_frames < 0 && s >= rep.pre_switch_mean - 0.02)
        rep.recovery_frames = frame - switch_frame + 1;
    }
  }
  return rep;
}

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  if (values.empty()) return a;
  for (double v : values) a.mean += v;
  a.mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - a.mean) * (v - a.mean);
  a.stddev = std::sqrt(ss / static_cast<double>(values.size()));
  return a;
}

}  // namespace sf::metrics
