#include "spiralforge/trajgen.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

namespace sf::trajgen {

namespace {

constexpr double kPi = std::numbers::pi;

void require(bool ok, ErrorCode code, const std::string& msg) {
  if (!ok) throw Error(code, msg);
}

}  // namespace

std::string to_string(Transition t) {
  switch (t) {
    case Transition::Linear: return "linear";
    case Transition::Hanning: return "hanning";
    case Transition::Quadratic: return "quadratic";
  }
  return "?";
}

std::string to_string(Ordering o) {
  return o == Ordering::Linear ? "linear" : "tiny_golden";
}

Transition transition_from_string(const std::string& s) {
  if (s == "linear") return Transition::Linear;
  if (s == "hanning") return Transition::Hanning;
  if (s == "quadratic") return Transition::Quadratic;
  throw Error(ErrorCode::ConfigError, "unknown transition: " + s);
}

Ordering ordering_from_string(const std::string& s) {
  if (s == "linear") return Ordering::Linear;
  if (s == "tiny_golden") return Ordering::TinyGolden;
  throw Error(ErrorCode::ConfigError, "unknown ordering: " + s);
}

void SpiralConfig::validate() const {
  require(r_inner >= 0.1 && r_inner <= 0.3, ErrorCode::BoundsViolation,
          "r_inner must be in [0.1, 0.3]");
  require(u_inner >= 12.0 && u_inner <= 24.0, ErrorCode::BoundsViolation,
          "u_inner must be in [12, 24]");
  require(r_outer >= r_inner && r_outer <= 1.0 - r_inner, ErrorCode::BoundsViolation,
          "r_outer must be in [r_inner, 1 - r_inner]");
  require(rho >= 0.01 && rho <= 0.35, ErrorCode::BoundsViolation,
          "rho must be in [0.01, 0.35]");
  require(tr_ms >= 2.88 && tr_ms <= 3.7, ErrorCode::BoundsViolation,
          "tr_ms must be in [2.88, 3.7]");
  require(t_acq_ms <= 55.0 && t_acq_ms > 0.0, ErrorCode::BoundsViolation,
          "t_acq_ms must be in (0, 55]");
}

SpiralConfig optimized_config() { return SpiralConfig{}; }

void GradientSystem::validate() const {
  require(fov_mm > 0 && matrix > 0 && dwell_us > 0 && readout_overhead_ms > 0 &&
              max_kstep > 0,
          ErrorCode::BoundsViolation, "GradientSystem fields must be positive");
}

int interleave_count(double t_acq_ms, double tr_ms) {
  require(t_acq_ms > 0 && tr_ms > 0, ErrorCode::ZeroOrNegativeInput,
          "t_acq_ms and tr_ms must be positive");
  int n = static_cast<int>(std::floor(t_acq_ms / tr_ms));
  require(n >= 1, ErrorCode::ResultBelowOne, "TR exceeds frame budget");
  return n;
}

double undersampling_profile(const SpiralConfig& config, double r) {
  require(r >= 0.0 && r <= 1.0, ErrorCode::RadiusOutOfRange,
          "radius must be in [0, 1]");
  if (r <= config.r_inner) return config.u_inner;
  if (r >= config.r_outer) return config.u_inner / config.rho;
  double x = (r - config.r_inner) / (config.r_outer - config.r_inner);
  double t;
  switch (config.transition) {
    case Transition::Linear: t = x; break;
    case Transition::Quadratic: t = x * x; break;
    case Transition::Hanning: t = 0.5 * (1.0 - std::cos(kPi * x)); break;
    default: t = x;
  }
  // Interpolation acts on density d = 1/U from 1/u_inner to rho/u_inner.
  double d = (1.0 / config.u_inner) * (1.0 - (1.0 - config.rho) * t);
  return 1.0 / d;
}

double effective_acceleration(const SpiralConfig& config, double r) {
  int n = interleave_count(config.t_acq_ms, config.tr_ms);
  return undersampling_profile(config, r) / n;
}

int samples_per_readout(const SpiralConfig& config, const GradientSystem& sys) {
  double readout_ms = config.tr_ms - sys.readout_overhead_ms;
  require(readout_ms > 0, ErrorCode::InfeasibleReadout,
          "readout overhead exceeds TR");
  return static_cast<int>(std::floor(readout_ms * 1000.0 / sys.dwell_us));
}

namespace {

// Integrate dr/dtheta = U(2r)/(matrix * 2*pi) from r=0 to r=0.5 and resample
// the curve at uniform arc length. `profile` takes the normalized radius in
// [0, 1].
RealArray integrate_spiral(const std::function<double(double)>& profile,
                           const GradientSystem& sys, int n_samples) {
  require(n_samples >= 2, ErrorCode::InfeasibleReadout, "too few readout samples");
  const double dk = 1.0 / sys.matrix;
  auto rhs = [&](double rc) { return profile(std::min(1.0, 2.0 * rc)) * dk / (2.0 * kPi); };

  // RK4 with a fixed angular step; the curve is stored as (theta, r) knots.
  const double dth = 1e-3;
  std::vector<double> thetas{0.0}, radii{0.0};
  double th = 0.0, r = 0.0;
  while (r < 0.5) {
    double k1 = rhs(r);
    double k2 = rhs(std::min(0.5, r + 0.5 * dth * k1));
    double k3 = rhs(std::min(0.5, r + 0.5 * dth * k2));
    double k4 = rhs(std::min(0.5, r + dth * k3));
    double r_next = r + dth / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    if (r_next >= 0.5) {
      // Land the last knot exactly on the boundary.
      double frac = (0.5 - r) / (r_next - r);
      th += dth * frac;
      r = 0.5;
    } else {
      th += dth;
      r = r_next;
    }
    thetas.push_back(th);
    radii.push_back(r);
  }

  // Cumulative arc length along the knots.
  std::size_t m = thetas.size();
  std::vector<double> arc(m, 0.0);
  for (std::size_t i = 1; i < m; ++i) {
    double dthi = thetas[i] - thetas[i - 1];
    double dri = radii[i] - radii[i - 1];
    double rmid = 0.5 * (radii[i] + radii[i - 1]);
    arc[i] = arc[i - 1] + std::sqrt(rmid * rmid * dthi * dthi + dri * dri);
  }
  double total = arc.back();
  require(total / (n_samples - 1) <= sys.max_kstep, ErrorCode::InfeasibleReadout,
          "required arc-length speed exceeds the gradient cap");

  RealArray out({n_samples, 2});
  std::size_t seg = 0;
  for (int i = 0; i < n_samples; ++i) {
    double target = total * i / (n_samples - 1);
    while (seg + 1 < m - 1 && arc[seg + 1] < target) ++seg;
    double span = arc[seg + 1] - arc[seg];
    double f = span > 0 ? (target - arc[seg]) / span : 0.0;
    double thi = thetas[seg] + f * (thetas[seg + 1] - thetas[seg]);
    double ri = radii[seg] + f * (radii[seg + 1] - radii[seg]);
    out(i, 0) = ri * std::cos(thi);
    out(i, 1) = ri * std::sin(thi);
  }
  return out;
}

// Analytic per-sample k-space area for a uniform-arc-length spiral with N
// rotated arms. At radius r the arms are U(r)*dk/N apart radially and the
// velocity makes angle psi with the radius, sin(psi) = r / sqrt(r^2 + a^2)
// with a = dr/dtheta, so the area element is step * (U*dk/N) * sin(psi).
// A floor of 0.05 * max avoids zero weight at the center. Returned weights
// are mean-1; the mean absolute area goes to *quad_scale.
RealArray density_weights_for(const std::function<double(double)>& profile,
                              const RealArray& interleave, int matrix,
                              int n_interleaves, double* quad_scale) {
  std::int64_t n = interleave.dim(0);
  const double dk = 1.0 / matrix;
  double arc = 0.0;
  for (std::int64_t i = 1; i < n; ++i)
    arc += std::hypot(interleave(i, 0) - interleave(i - 1, 0),
                      interleave(i, 1) - interleave(i - 1, 1));
  double step = arc / static_cast<double>(n - 1);

  RealArray w({n});
  double wmax = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    double r = std::hypot(interleave(i, 0), interleave(i, 1));
    double u = profile(std::min(1.0, 2.0 * r));
    double a = u * dk / (2.0 * kPi);
    double sin_psi = r / std::sqrt(r * r + a * a);
    w(i) = step * (u * dk / n_interleaves) * sin_psi;
    wmax = std::max(wmax, w(i));
  }
  double floor_w = 0.05 * wmax;
  double sum = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    w(i) = std::max(w(i), floor_w);
    sum += w(i);
  }
  double mean = sum / static_cast<double>(n);
  if (quad_scale) *quad_scale = mean;
  for (std::int64_t i = 0; i < n; ++i) w(i) /= mean;
  return w;
}

Trajectory rotate_interleaves(const RealArray& base, const RealArray& weights,
                              Ordering ordering, int n_interleaves, int n_frames) {
  std::int64_t n_samples = base.dim(0);
  Trajectory traj;
  traj.n_frames = n_frames;
  traj.n_interleaves = n_interleaves;
  traj.n_samples = static_cast<int>(n_samples);
  traj.coords = RealArray({n_frames, n_interleaves, n_samples, 2});
  traj.density_weights = RealArray({n_interleaves, n_samples});
  for (int j = 0; j < n_interleaves; ++j)
    for (std::int64_t s = 0; s < n_samples; ++s)
      traj.density_weights(j, s) = weights(s);

  for (int f = 0; f < n_frames; ++f) {
    for (int j = 0; j < n_interleaves; ++j) {
      double deg = ordering == Ordering::Linear
                       ? j * (360.0 / n_interleaves)
                       : std::fmod((static_cast<double>(f) * n_interleaves + j) *
                                       kTinyGoldenDeg,
                                   360.0);
      double phi = deg * kPi / 180.0;
      double c = std::cos(phi), s2 = std::sin(phi);
      for (std::int64_t s = 0; s < n_samples; ++s) {
        double x = base(s, 0), y = base(s, 1);
        traj.coords(f, j, s, 0) = x * c - y * s2;
        traj.coords(f, j, s, 1) = x * s2 + y * c;
      }
    }
  }
  return traj;
}

}  // namespace

RealArray generate_interleave(const SpiralConfig& config, const GradientSystem& sys) {
  config.validate();
  sys.validate();
  int n_samples = samples_per_readout(config, sys);
  auto profile = [&](double r) { return undersampling_profile(config, r); };
  return integrate_spiral(profile, sys, n_samples);
}

Trajectory assemble_trajectory(const SpiralConfig& config, const GradientSystem& sys,
                               int n_frames) {
  require(n_frames >= 1, ErrorCode::InvalidDims, "n_frames must be >= 1");
  int n = interleave_count(config.t_acq_ms, config.tr_ms);
  RealArray base = generate_interleave(config, sys);
  auto profile = [&](double r) { return undersampling_profile(config, r); };
  double quad = 0.0;
  RealArray w = density_weights_for(profile, base, sys.matrix, n, &quad);
  Trajectory traj = rotate_interleaves(base, w, config.ordering, n, n_frames);
  traj.kind = "spiral";
  traj.config = config;
  traj.quad_scale = quad;
  return traj;
}

Trajectory uniform_spiral(const GradientSystem& sys, double u_uniform, double tr_ms,
                          double t_acq_ms, Ordering ordering, int n_frames) {
  require(u_uniform > 0, ErrorCode::DegenerateDensity, "u_uniform must be positive");
  require(n_frames >= 1, ErrorCode::InvalidDims, "n_frames must be >= 1");
  sys.validate();
  int n = interleave_count(t_acq_ms, tr_ms);
  SpiralConfig pseudo;  // timing carrier for the manifest
  pseudo.tr_ms = tr_ms;
  pseudo.t_acq_ms = t_acq_ms;
  pseudo.ordering = ordering;
  double readout_ms = tr_ms - sys.readout_overhead_ms;
  require(readout_ms > 0, ErrorCode::InfeasibleReadout, "readout overhead exceeds TR");
  int n_samples = static_cast<int>(std::floor(readout_ms * 1000.0 / sys.dwell_us));
  auto profile = [=](double) { return u_uniform; };
  RealArray base = integrate_spiral(profile, sys, n_samples);
  double quad = 0.0;
  RealArray w = density_weights_for(profile, base, sys.matrix, n, &quad);
  Trajectory traj = rotate_interleaves(base, w, ordering, n, n_frames);
  traj.kind = "uniform_spiral";
  traj.config = pseudo;
  traj.quad_scale = quad;
  return traj;
}

Trajectory radial_trajectory(const GradientSystem& sys, int spokes_per_frame,
                             int n_frames, int samples_per_spoke) {
  require(spokes_per_frame >= 1, ErrorCode::InvalidDims, "spokes_per_frame >= 1");
  require(n_frames >= 1, ErrorCode::InvalidDims, "n_frames must be >= 1");
  sys.validate();
  int ns = samples_per_spoke > 0 ? samples_per_spoke : sys.matrix + 1;
  if (ns % 2 == 0) ++ns;  // keep a center sample

  // Base spoke along +x: full diameter, uniform spacing.
  RealArray base({ns, 2});
  for (int i = 0; i < ns; ++i) {
    base(i, 0) = -0.5 + static_cast<double>(i) / (ns - 1);
    base(i, 1) = 0.0;
  }
  // Ramp weights: area element |k| * (pi / spokes) * dt, floored near k=0.
  double dt = 1.0 / (ns - 1);
  RealArray w({ns});
  double wmax = 0.0;
  for (int i = 0; i < ns; ++i) {
    w(i) = std::abs(base(i, 0)) * (kPi / spokes_per_frame) * dt;
    wmax = std::max(wmax, w(i));
  }
  double floor_w = 0.05 * wmax;
  double sum = 0.0;
  for (int i = 0; i < ns; ++i) {
    w(i) = std::max(w(i), floor_w);
    sum += w(i);
  }
  double mean = sum / ns;
  for (int i = 0; i < ns; ++i) w(i) /= mean;

  Trajectory traj;
  traj.kind = "radial";
  traj.quad_scale = mean;
  traj.n_frames = n_frames;
  traj.n_interleaves = spokes_per_frame;
  traj.n_samples = ns;
  traj.coords = RealArray({n_frames, spokes_per_frame, ns, 2});
  traj.density_weights = RealArray({spokes_per_frame, ns});
  for (int j = 0; j < spokes_per_frame; ++j)
    for (int i = 0; i < ns; ++i) traj.density_weights(j, i) = w(i);

  for (int f = 0; f < n_frames; ++f) {
    for (int j = 0; j < spokes_per_frame; ++j) {
      // Spokes are diameters, so angles live on [0, 180).
      double deg = std::fmod((static_cast<double>(f) * spokes_per_frame + j) *
                                 kTinyGoldenDeg,
                             180.0);
      double phi = deg * kPi / 180.0;
      double c = std::cos(phi), s2 = std::sin(phi);
      for (int i = 0; i < ns; ++i) {
        traj.coords(f, j, i, 0) = base(i, 0) * c;
        traj.coords(f, j, i, 1) = base(i, 0) * s2;
      }
    }
  }
  return traj;
}

}  // namespace sf::trajgen
