#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "spiralforge/trajgen.hpp"

using namespace sf;
using namespace sf::trajgen;

namespace {

constexpr double kPi = std::numbers::pi;

GradientSystem desk_system(int matrix = 240) {
  GradientSystem sys;
  sys.fov_mm = 400.0;
  sys.matrix = matrix;
  return sys;
}

double radius(const Trajectory& t, int f, int j, int s) {
  return std::hypot(t.coords(f, j, s, 0), t.coords(f, j, s, 1));
}

double angle_deg(const Trajectory& t, int f, int j, int s) {
  double a = std::atan2(t.coords(f, j, s, 1), t.coords(f, j, s, 0)) * 180.0 / kPi;
  return a < 0.0 ? a + 360.0 : a;
}

}  // namespace

TEST_CASE("interleave_count floor arithmetic") {
  CHECK(interleave_count(55, 3.6) == 15);
  CHECK(interleave_count(55, 2.88) == 19);
  CHECK(interleave_count(55, 3.7) == 14);  // Table prints 15; floor gives 14
  CHECK(interleave_count(55, 55.0 / 15.0) == 15);

  CHECK_THROWS_AS(interleave_count(0, 3.6), Error);
  CHECK_THROWS_AS(interleave_count(55, -1), Error);
  CHECK_THROWS_AS(interleave_count(2, 3.6), Error);  // result below one
  try {
    interleave_count(2, 3.6);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ResultBelowOne);
  }
}

TEST_CASE("undersampling profile values for the optimized row") {
  SpiralConfig c = optimized_config();
  CHECK(undersampling_profile(c, 0.05) == doctest::Approx(16.0).epsilon(1e-12));
  CHECK(undersampling_profile(c, 0.9) ==
        doctest::Approx(16.0 / 0.07).epsilon(1e-12));  // ~228.57
  // hanning midpoint: density halfway between inner and outer densities
  double r_mid = (c.r_inner + c.r_outer) / 2.0;
  double d_mid = 1.0 / undersampling_profile(c, r_mid);
  double d_in = 1.0 / 16.0, d_out = 0.07 / 16.0;
  CHECK(d_mid == doctest::Approx((d_in + d_out) / 2.0).epsilon(1e-12));

  CHECK_THROWS_AS(undersampling_profile(c, -0.01), Error);
  CHECK_THROWS_AS(undersampling_profile(c, 1.01), Error);
}

TEST_CASE("undersampling profile is continuous and monotone for all transitions") {
  for (Transition tr : {Transition::Linear, Transition::Hanning, Transition::Quadratic}) {
    SpiralConfig c = optimized_config();
    c.transition = tr;
    double d_in = 1.0 / 16.0, d_out = 0.07 / 16.0;
    double prev_u = undersampling_profile(c, 0.0);
    double prev_d = 1.0 / prev_u;
    for (int i = 1; i <= 1000; ++i) {
      double r = i / 1000.0;
      double u = undersampling_profile(c, r);
      double d = 1.0 / u;
      CHECK(u >= prev_u - 1e-9);  // monotone non-decreasing (rho < 1)
      // Continuity of the interpolated density (the designed quantity).
      CHECK(std::abs(d - prev_d) < (d_in - d_out) * 0.02);
      prev_u = u;
      prev_d = d;
    }
    CHECK(undersampling_profile(c, 1.0) == doctest::Approx(16.0 / 0.07));
  }
}

TEST_CASE("effective acceleration matches Table-row arithmetic") {
  SpiralConfig c = optimized_config();
  CHECK(effective_acceleration(c, 0.0) == doctest::Approx(16.0 / 15.0).epsilon(1e-9));
  CHECK(effective_acceleration(c, 1.0) ==
        doctest::Approx(16.0 / 0.07 / 15.0).epsilon(1e-9));  // ~15.24
}

TEST_CASE("generate_interleave: endpoint, monotonicity, sample count") {
  SpiralConfig c = optimized_config();
  GradientSystem sys = desk_system();
  RealArray arm = generate_interleave(c, sys);
  int n_expected = static_cast<int>(
      std::floor((c.tr_ms - sys.readout_overhead_ms) * 1000.0 / sys.dwell_us));
  CHECK(arm.dim(0) == n_expected);
  CHECK(arm.dim(1) == 2);

  double prev_r = -1.0;
  for (std::int64_t s = 0; s < arm.dim(0); ++s) {
    double r = std::hypot(arm(s, 0), arm(s, 1));
    CHECK(r >= prev_r - 1e-12);  // non-decreasing
    prev_r = r;
  }
  CHECK(prev_r == doctest::Approx(0.5).epsilon(0).scale(1).epsilon(1e-3));
  CHECK(std::abs(prev_r - 0.5) < 1e-3);
}

TEST_CASE("spiral pitch: radius gain per revolution equals U * dk_norm") {
  // Constant-density case via the uniform generator; oracle is the ODE
  // dr/dtheta = U * dk / (2 pi), whose gain over one revolution is U * dk.
  GradientSystem sys = desk_system(240);
  sys.max_kstep = 0.05;  // permit the long low-U arc within one readout
  double u = 12.0;  // slow pitch: ~10 revolutions, many (theta, theta+2pi) pairs
  Trajectory t = uniform_spiral(sys, u, 55.0 / 15.0, 55.0, Ordering::Linear, 1);
  double dk = 1.0 / sys.matrix;

  // Unwrap the angle along the interleave and compare r(theta + 2 pi) - r(theta).
  std::vector<double> theta(t.n_samples), rad(t.n_samples);
  double prev = 0.0, acc = 0.0;
  for (int s = 0; s < t.n_samples; ++s) {
    double a = std::atan2(t.coords(0, 0, s, 1), t.coords(0, 0, s, 0));
    if (s > 0) {
      double d = a - prev;
      while (d < -kPi) d += 2 * kPi;
      while (d > kPi) d -= 2 * kPi;
      acc += d;
    }
    prev = a;
    theta[static_cast<std::size_t>(s)] = acc;
    rad[static_cast<std::size_t>(s)] = radius(t, 0, 0, s);
  }
  int checked = 0;
  for (int s = 0; s < t.n_samples && checked < 50; s += 17) {
    double target = theta[static_cast<std::size_t>(s)] + 2 * kPi;
    for (int q = s + 1; q < t.n_samples; ++q) {
      if (theta[static_cast<std::size_t>(q)] >= target) {
        // Interpolate radius at exactly one revolution later.
        double f = (target - theta[static_cast<std::size_t>(q - 1)]) /
                   (theta[static_cast<std::size_t>(q)] - theta[static_cast<std::size_t>(q - 1)]);
        double r2 = rad[static_cast<std::size_t>(q - 1)] +
                    f * (rad[static_cast<std::size_t>(q)] - rad[static_cast<std::size_t>(q - 1)]);
        double gain = r2 - rad[static_cast<std::size_t>(s)];
        // Skip the very center where the ODE linearization is poor.
        if (rad[static_cast<std::size_t>(s)] > 0.05) {
          CHECK(gain == doctest::Approx(u * dk).epsilon(0.02));
          ++checked;
        }
        break;
      }
    }
  }
  CHECK(checked >= 10);
}

TEST_CASE("assemble_trajectory linear ordering: 24-degree fan, frame periodic") {
  SpiralConfig c = optimized_config();
  GradientSystem sys = desk_system();
  Trajectory t = assemble_trajectory(c, sys, 2);
  CHECK(t.n_interleaves == 15);
  int s_probe = t.n_samples - 1;  // outermost sample, farthest from origin
  double base = angle_deg(t, 0, 0, s_probe);
  for (int j = 0; j < 15; ++j) {
    double expect = std::fmod(base + j * 24.0, 360.0);
    double got = angle_deg(t, 0, j, s_probe);
    double d = std::abs(got - expect);
    if (d > 180.0) d = 360.0 - d;
    CHECK(d < 1e-9);
  }
  // Linear ordering: frame 2 identical to frame 1.
  for (int j = 0; j < t.n_interleaves; ++j)
    for (int s = 0; s < t.n_samples; s += 101) {
      CHECK(t.coords(1, j, s, 0) == t.coords(0, j, s, 0));
      CHECK(t.coords(1, j, s, 1) == t.coords(0, j, s, 1));
    }
}

TEST_CASE("assemble_trajectory tiny golden ordering: frame-2 offset 349.5 degrees") {
  SpiralConfig c = optimized_config();
  c.ordering = Ordering::TinyGolden;
  GradientSystem sys = desk_system();
  Trajectory t = assemble_trajectory(c, sys, 2);
  CHECK(t.n_interleaves == 15);
  int s_probe = t.n_samples - 1;
  double d = angle_deg(t, 1, 0, s_probe) - angle_deg(t, 0, 0, s_probe);
  while (d < 0) d += 360.0;
  while (d >= 360.0) d -= 360.0;
  CHECK(d == doctest::Approx(std::fmod(15 * 47.3, 360.0)).epsilon(1e-9));  // 349.5

  // No repeated interleave angle within ceil(360/47.3)*N global interleaves.
  int window = static_cast<int>(std::ceil(360.0 / 47.3)) * t.n_interleaves;
  int frames_needed = (window + t.n_interleaves - 1) / t.n_interleaves;
  Trajectory tw = assemble_trajectory(c, sys, frames_needed);
  std::set<long long> seen;
  int count = 0;
  for (int f = 0; f < frames_needed && count < window; ++f)
    for (int j = 0; j < tw.n_interleaves && count < window; ++j, ++count) {
      double ang = std::fmod((f * tw.n_interleaves + j) * 47.3, 360.0);
      long long key = std::llround(ang * 1e9);
      CHECK(seen.insert(key).second);
    }
}

TEST_CASE("trajectory invariants: bounds, endpoint, positive rotation-invariant weights") {
  GradientSystem sys = desk_system();
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> uri(0.1, 0.3), uu(12, 24), urho(0.01, 0.35),
      utr(2.88, 3.7);
  for (int trial = 0; trial < 5; ++trial) {
    SpiralConfig c;
    c.r_inner = uri(rng);
    c.u_inner = uu(rng);
    c.rho = urho(rng);
    c.r_outer = c.r_inner + (1 - 2 * c.r_inner) * 0.5;
    c.tr_ms = utr(rng);
    c.t_acq_ms = 55.0;
    c.transition = trial % 2 ? Transition::Linear : Transition::Hanning;
    Trajectory t = assemble_trajectory(c, sys, 2);
    double maxc = 0.0;
    for (double v : t.coords.data) maxc = std::max(maxc, std::abs(v));
    CHECK(maxc <= 0.5 + 1e-12);
    CHECK(std::abs(radius(t, 0, 0, t.n_samples - 1) - 0.5) < 1e-3);
    for (double w : t.density_weights.data) CHECK(w > 0.0);
    CHECK(t.quad_scale > 0.0);
  }
}

TEST_CASE("density weights integrate to annulus areas (quadrature oracle)") {
  // Absolute weights w * quad_scale form a quadrature rule for k-space area:
  // the per-radius-bin weight sum must match the annulus area pi*(r2^2-r1^2).
  GradientSystem sys = desk_system(64);
  SpiralConfig c = optimized_config();
  Trajectory t = assemble_trajectory(c, sys, 1);
  const int nbins = 8;
  std::vector<double> mass(nbins, 0.0);
  for (int j = 0; j < t.n_interleaves; ++j)
    for (int s = 0; s < t.n_samples; ++s) {
      double r = radius(t, 0, j, s);
      int b = std::min(nbins - 1, static_cast<int>(r / 0.5 * nbins));
      mass[static_cast<std::size_t>(b)] += t.density_weights(j, s) * t.quad_scale;
    }
  double total = 0.0;
  for (int b = 0; b < nbins; ++b) {
    double r1 = 0.5 * b / nbins, r2 = 0.5 * (b + 1) / nbins;
    double area = kPi * (r2 * r2 - r1 * r1);
    total += mass[static_cast<std::size_t>(b)];
    // Innermost bin is inflated by the weight floor; others match the area.
    if (b > 0) CHECK(mass[static_cast<std::size_t>(b)] == doctest::Approx(area).epsilon(0.06));
  }
  CHECK(total == doctest::Approx(kPi * 0.25).epsilon(0.06));

  // Mean normalization of the relative weights.
  double mean = 0.0;
  for (double w : t.density_weights.data) mean += w;
  mean /= static_cast<double>(t.density_weights.numel());
  CHECK(mean == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("uniform_spiral matches the Table baseline row") {
  GradientSystem sys = desk_system();
  Trajectory t = uniform_spiral(sys, 92.0, 55.0 / 15.0, 55.0, Ordering::Linear, 1);
  CHECK(t.n_interleaves == 15);
  CHECK(92.0 / t.n_interleaves == doctest::Approx(6.13).epsilon(1e-3));
  CHECK(t.kind == "uniform_spiral");
  // Weights monotone non-decreasing in radius (ramp-like area element).
  for (int s = 1; s < t.n_samples; ++s)
    CHECK(t.density_weights(0, s) >= t.density_weights(0, s - 1) - 1e-12);
}

TEST_CASE("radial trajectory: spoke count, center sample, ramp weights") {
  GradientSystem sys = desk_system(64);
  Trajectory t = radial_trajectory(sys, 17, 2);
  CHECK(t.n_interleaves == 17);
  CHECK(t.n_samples % 2 == 1);  // odd: exact center sample
  CHECK(t.kind == "radial");

  // 34 distinct spoke angles mod 180 over two frames.
  std::set<long long> angles;
  for (int f = 0; f < 2; ++f)
    for (int j = 0; j < 17; ++j) {
      double a = std::fmod((f * 17 + j) * 47.3, 180.0);
      angles.insert(std::llround(a * 1e9));
    }
  CHECK(angles.size() == 34);

  // Center sample exactly at the origin.
  int mid = t.n_samples / 2;
  CHECK(t.coords(0, 0, mid, 0) == 0.0);
  CHECK(t.coords(0, 0, mid, 1) == 0.0);

  // Ramp: center weight below end weight.
  CHECK(t.density_weights(0, mid) < t.density_weights(0, 0));
  CHECK(t.density_weights(0, mid) < t.density_weights(0, t.n_samples - 1));
}

TEST_CASE("config validation rejects out-of-range fields by name") {
  SpiralConfig c = optimized_config();
  c.rho = 0.5;
  try {
    c.validate();
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BoundsViolation);
    CHECK(std::string(e.what()).find("rho") != std::string::npos);
  }
  SpiralConfig c2 = optimized_config();
  c2.u_inner = 25.0;
  CHECK_THROWS_AS(c2.validate(), Error);
  SpiralConfig c3 = optimized_config();
  c3.r_outer = c3.r_inner - 0.01;
  CHECK_THROWS_AS(c3.validate(), Error);
}

TEST_CASE("determinism: identical inputs give bit-identical trajectories") {
  GradientSystem sys = desk_system(64);
  SpiralConfig c = optimized_config();
  c.ordering = Ordering::TinyGolden;
  Trajectory a = assemble_trajectory(c, sys, 3);
  Trajectory b = assemble_trajectory(c, sys, 3);
  CHECK(a.coords.data == b.coords.data);
  CHECK(a.density_weights.data == b.density_weights.data);
  CHECK(a.quad_scale == b.quad_scale);
}

TEST_CASE("infeasible readout is rejected") {
  GradientSystem sys = desk_system(240);
  sys.max_kstep = 1e-5;  // absurdly tight cap
  SpiralConfig c = optimized_config();
  CHECK_THROWS_AS(generate_interleave(c, sys), Error);
  try {
    generate_interleave(c, sys);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InfeasibleReadout);
  }
}
