#include "spiralforge/nufft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <random>

namespace sf::nufft {

namespace {

constexpr double kPi = std::numbers::pi;

// Modified Bessel function of the first kind, order zero (Abramowitz &
// Stegun 9.8.1/9.8.2 polynomial approximations).
double bessel_i0(double x) {
  double ax = std::abs(x);
  if (ax < 3.75) {
    double t = x / 3.75;
    t *= t;
    return 1.0 + t * (3.5156229 + t * (3.0899424 + t * (1.2067492 +
                 t * (0.2659732 + t * (0.0360768 + t * 0.0045813)))));
  }
  double t = 3.75 / ax;
  return (std::exp(ax) / std::sqrt(ax)) *
         (0.39894228 + t * (0.01328592 + t * (0.00225319 + t * (-0.00157565 +
          t * (0.00916281 + t * (-0.02057706 + t * (0.02635537 +
          t * (-0.01647633 + t * 0.00392377))))))));
}

// Shared FFTW plan cache. Plan creation is not thread-safe; execution on
// caller buffers via fftw_execute_dft is.
class FftCache {
 public:
  void transform(std::vector<cplx>& buf, int rows, int cols, int sign) {
    fftw_plan plan;
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto key = std::make_tuple(rows, cols, sign);
      auto it = plans_.find(key);
      if (it == plans_.end()) {
        // UNALIGNED so cached plans work on any caller buffer.
        plan = fftw_plan_dft_2d(rows, cols,
                                reinterpret_cast<fftw_complex*>(buf.data()),
                                reinterpret_cast<fftw_complex*>(buf.data()),
                                sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(key, plan);
      } else {
        plan = it->second;
      }
    }
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(buf.data()),
                     reinterpret_cast<fftw_complex*>(buf.data()));
  }

 private:
  std::mutex mu_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

FftCache& fft_cache() {
  static FftCache cache;
  return cache;
}

}  // namespace

double GridKernel::effective_beta() const {
  if (beta > 0.0) return beta;
  // Beatty et al. minimal-aliasing shape, in fine-grid units (width and
  // oversampling both scale with the phase refinement factor).
  double w = width * phases, a = oversampling * phases;
  return kPi * std::sqrt((w * w / (a * a)) * (a - 0.5) * (a - 0.5) - 0.8);
}

void GridKernel::validate() const {
  if (width < 2) throw Error(ErrorCode::BoundsViolation, "kernel width must be >= 2");
  if (oversampling < 1.25)
    throw Error(ErrorCode::BoundsViolation, "oversampling must be >= 1.25");
  if (phases < 1 || phases > 4)
    throw Error(ErrorCode::BoundsViolation, "phases must be in [1, 4]");
}

Gridder::Gridder(int h, int w, GridKernel kernel) : h_(h), w_(w), kernel_(kernel) {
  kernel_.validate();
  if (h < 2 || w < 2) throw Error(ErrorCode::InvalidDims, "image too small");
  ew_ = kernel_.width * kernel_.phases;
  double scale = kernel_.oversampling * kernel_.phases;
  gh_ = 2 * static_cast<int>(std::ceil(scale * h / 2.0));
  gw_ = 2 * static_cast<int>(std::ceil(scale * w / 2.0));

  double beta = kernel_.effective_beta();
  double half = ew_ / 2.0;
  double i0b = bessel_i0(beta);
  table_.resize(static_cast<std::size_t>(kernel_.table_len) + 2);
  for (int i = 0; i < kernel_.table_len + 2; ++i) {
    double t = half * i / kernel_.table_len;
    double u = 1.0 - (t / half) * (t / half);
    table_[static_cast<std::size_t>(i)] =
        u > 0.0 ? bessel_i0(beta * std::sqrt(u)) / i0b : 0.0;
  }

  // Deapodization: inverse DFT of the kernel sampled at integer grid taps
  // (the discrete sum the interpolator actually realizes), evaluated at
  // centered pixel offsets x. Using the kernel's continuous transform here
  // instead leaves a smooth multiplicative bias of order 1e-3.
  auto apod = [&](int n, int g) {
    std::vector<double> c(static_cast<std::size_t>(n));
    auto kb = [&](double t) {
      double u = 1.0 - (t / half) * (t / half);
      return u > 0.0 ? bessel_i0(beta * std::sqrt(u)) / i0b : 0.0;
    };
    int taps = static_cast<int>(std::ceil(half)) - 1;
    for (int x = 0; x < n; ++x) {
      double nu = static_cast<double>(x - n / 2) / g;
      double acc = kb(0.0);
      for (int j = 1; j <= taps + 1; ++j)
        acc += 2.0 * kb(static_cast<double>(j)) * std::cos(2.0 * kPi * j * nu);
      c[static_cast<std::size_t>(x)] = acc;
    }
    return c;
  };
  apo_y_ = apod(h_, gh_);
  apo_x_ = apod(w_, gw_);
}

double Gridder::kernel_at(double t) const {
  double half = ew_ / 2.0;
  double a = std::abs(t);
  if (a >= half) return 0.0;
  double pos = a / half * kernel_.table_len;
  int idx = static_cast<int>(pos);
  double f = pos - idx;
  return table_[static_cast<std::size_t>(idx)] * (1.0 - f) +
         table_[static_cast<std::size_t>(idx) + 1] * f;
}

KSamples Gridder::forward(const ComplexImage& image, const RealArray& coords) const {
  if (image.data.shape.size() != 3 || image.data.dim(1) != h_ ||
      image.data.dim(2) != w_)
    throw Error(ErrorCode::ShapeMismatch, "image shape does not match gridder");
  if (coords.shape.size() != 2 || coords.dim(1) != 2)
    throw Error(ErrorCode::ShapeMismatch, "coords must be [M, 2]");
  std::int64_t n_coils = image.data.dim(0);
  std::int64_t m = coords.dim(0);
  for (std::int64_t j = 0; j < m; ++j)
    if (std::abs(coords(j, 0)) > 0.5 + 1e-12 || std::abs(coords(j, 1)) > 0.5 + 1e-12)
      throw Error(ErrorCode::CoordOutOfRange, "coordinate outside [-0.5, 0.5]");

  KSamples out;
  out.coords = coords;
  out.data = ComplexArray({n_coils, m});
  int half_w = ew_ / 2;

  std::vector<cplx> grid(static_cast<std::size_t>(gh_) * gw_);
  for (std::int64_t c = 0; c < n_coils; ++c) {
    std::fill(grid.begin(), grid.end(), cplx{});
    // Deapodize and scatter with the image center at grid index 0 (ifftshift).
    for (int y = 0; y < h_; ++y) {
      int gy = ((y - h_ / 2) % gh_ + gh_) % gh_;
      for (int x = 0; x < w_; ++x) {
        int gx = ((x - w_ / 2) % gw_ + gw_) % gw_;
        grid[static_cast<std::size_t>(gy) * gw_ + gx] =
            image.data(c, y, x) /
            (apo_y_[static_cast<std::size_t>(y)] * apo_x_[static_cast<std::size_t>(x)]);
      }
    }
    fft_cache().transform(grid, gh_, gw_, FFTW_FORWARD);

    for (std::int64_t j = 0; j < m; ++j) {
      double px = coords(j, 0) * gw_;  // coords are (kx, ky)
      double py = coords(j, 1) * gh_;
      cplx acc{};
      int my0 = static_cast<int>(std::ceil(py - half_w));
      int mx0 = static_cast<int>(std::ceil(px - half_w));
      for (int my = my0; my <= my0 + ew_; ++my) {
        double ky = kernel_at(py - my);
        if (ky == 0.0) continue;
        int iy = ((my % gh_) + gh_) % gh_;
        for (int mx = mx0; mx <= mx0 + ew_; ++mx) {
          double kx = kernel_at(px - mx);
          if (kx == 0.0) continue;
          int ix = ((mx % gw_) + gw_) % gw_;
          acc += ky * kx * grid[static_cast<std::size_t>(iy) * gw_ + ix];
        }
      }
      out.data(c, j) = acc;
    }
  }
  return out;
}

ComplexImage Gridder::adjoint(const KSamples& samples, const RealArray* weights) const {
  if (samples.data.shape.size() != 2 || samples.coords.shape.size() != 2 ||
      samples.data.dim(1) != samples.coords.dim(0))
    throw Error(ErrorCode::ShapeMismatch, "samples/coords inconsistent");
  std::int64_t n_coils = samples.data.dim(0);
  std::int64_t m = samples.coords.dim(0);
  if (weights && weights->numel() != m)
    throw Error(ErrorCode::ShapeMismatch, "weights length mismatch");

  ComplexImage out;
  out.data = ComplexArray({n_coils, h_, w_});
  int half_w = ew_ / 2;

  std::vector<cplx> grid(static_cast<std::size_t>(gh_) * gw_);
  for (std::int64_t c = 0; c < n_coils; ++c) {
    std::fill(grid.begin(), grid.end(), cplx{});
    for (std::int64_t j = 0; j < m; ++j) {
      cplx v = samples.data(c, j);
      if (weights) v *= (*weights)(j);
      double px = samples.coords(j, 0) * gw_;
      double py = samples.coords(j, 1) * gh_;
      int my0 = static_cast<int>(std::ceil(py - half_w));
      int mx0 = static_cast<int>(std::ceil(px - half_w));
      for (int my = my0; my <= my0 + ew_; ++my) {
        double ky = kernel_at(py - my);
        if (ky == 0.0) continue;
        int iy = ((my % gh_) + gh_) % gh_;
        for (int mx = mx0; mx <= mx0 + ew_; ++mx) {
          double kx = kernel_at(px - mx);
          if (kx == 0.0) continue;
          int ix = ((mx % gw_) + gw_) % gw_;
          grid[static_cast<std::size_t>(iy) * gw_ + ix] += ky * kx * v;
        }
      }
    }
    // FFTW backward (no scaling) is exactly the conjugate transpose of the
    // forward transform used above.
    fft_cache().transform(grid, gh_, gw_, FFTW_BACKWARD);
    for (int y = 0; y < h_; ++y) {
      int gy = ((y - h_ / 2) % gh_ + gh_) % gh_;
      for (int x = 0; x < w_; ++x) {
        int gx = ((x - w_ / 2) % gw_ + gw_) % gw_;
        out.data(c, y, x) =
            grid[static_cast<std::size_t>(gy) * gw_ + gx] /
            (apo_y_[static_cast<std::size_t>(y)] * apo_x_[static_cast<std::size_t>(x)]);
      }
    }
  }
  return out;
}

RealArray rss_combine(const ComplexImage& image) {
  if (image.data.shape.size() != 3 || image.data.dim(0) < 1)
    throw Error(ErrorCode::ShapeMismatch, "expected [n_coils, H, W]");
  std::int64_t n_coils = image.data.dim(0), h = image.data.dim(1), w = image.data.dim(2);
  RealArray out({h, w});
  for (std::int64_t c = 0; c < n_coils; ++c)
    for (std::int64_t y = 0; y < h; ++y)
      for (std::int64_t x = 0; x < w; ++x)
        out(y, x) += std::norm(image.data(c, y, x));
  for (auto& v : out.data) v = std::sqrt(v);
  return out;
}

RealArray grid_series(const RealArray& gt_series, const ComplexArray& coil_maps,
                      const trajgen::Trajectory& traj, double noise_sigma,
                      std::uint64_t noise_seed, const GridKernel& kernel) {
  if (gt_series.shape.size() != 3 || coil_maps.shape.size() != 3)
    throw Error(ErrorCode::ShapeMismatch, "expected [T,H,W] series and [C,H,W] maps");
  std::int64_t t = gt_series.dim(0), h = gt_series.dim(1), w = gt_series.dim(2);
  if (coil_maps.dim(1) != h || coil_maps.dim(2) != w)
    throw Error(ErrorCode::ShapeMismatch, "coil map dims do not match series");
  if (traj.n_frames != t)
    throw Error(ErrorCode::ShapeMismatch, "trajectory/series frame counts differ");
  std::int64_t n_coils = coil_maps.dim(0);

  Gridder gridder(static_cast<int>(h), static_cast<int>(w), kernel);
  std::int64_t m = static_cast<std::int64_t>(traj.n_interleaves) * traj.n_samples;

  // Absolute quadrature weights: mean-1 analytic weights times the mean
  // sample area, shared by every frame.
  RealArray weights({m});
  for (int j = 0; j < traj.n_interleaves; ++j)
    for (int s = 0; s < traj.n_samples; ++s)
      weights(static_cast<std::int64_t>(j) * traj.n_samples + s) =
          traj.density_weights(j, s) * traj.quad_scale;

  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  RealArray out({t, h, w});
  for (std::int64_t f = 0; f < t; ++f) {
    ComplexImage coil_imgs;
    coil_imgs.data = ComplexArray({n_coils, h, w});
    for (std::int64_t c = 0; c < n_coils; ++c)
      for (std::int64_t y = 0; y < h; ++y)
        for (std::int64_t x = 0; x < w; ++x)
          coil_imgs.data(c, y, x) = coil_maps(c, y, x) * gt_series(f, y, x);

    RealArray coords({m, 2});
    for (int j = 0; j < traj.n_interleaves; ++j)
      for (int s = 0; s < traj.n_samples; ++s) {
        coords(static_cast<std::int64_t>(j) * traj.n_samples + s, 0) =
            traj.coords(f, j, s, 0);
        coords(static_cast<std::int64_t>(j) * traj.n_samples + s, 1) =
            traj.coords(f, j, s, 1);
      }

    KSamples samples = gridder.forward(coil_imgs, coords);
    if (noise_sigma > 0.0)
      for (auto& z : samples.data.data)
        z += cplx(noise_sigma * gauss(rng), noise_sigma * gauss(rng));

    RealArray frame = rss_combine(gridder.adjoint(samples, &weights));
    for (std::int64_t y = 0; y < h; ++y)
      for (std::int64_t x = 0; x < w; ++x)
        out(f, y, x) = std::max(0.0, frame(y, x));
  }
  return out;
}

}  // namespace sf::nufft
