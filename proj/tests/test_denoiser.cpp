#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "spiralforge/denoiser.hpp"
#include "spiralforge/phantom.hpp"

using namespace sf;
using namespace sf::denoiser;

namespace {

RealArray random_window(int t, int h, int w, std::uint64_t seed) {
  RealArray a({t, h, w});
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : a.data) v = u(rng);
  return a;
}

ModelConfig tiny_cfg() {
  ModelConfig c;
  c.c1 = 4;
  c.c2 = 8;
  c.c3 = 16;
  return c;
}

}  // namespace

TEST_CASE("forward: output shape, clamping, purity") {
  Model m = init_model(tiny_cfg(), 1);
  RealArray w = random_window(5, 16, 16, 2);
  RealArray out1 = forward(m, w);
  CHECK(out1.dim(0) == 16);
  CHECK(out1.dim(1) == 16);
  for (double v : out1.data) CHECK(v >= 0.0);
  RealArray out2 = forward(m, w);  // no state leaks across calls
  CHECK(out1.data == out2.data);

  RealArray bad = random_window(4, 16, 16, 3);
  CHECK_THROWS_AS(forward(m, bad), Error);
  RealArray odd = random_window(5, 18, 18, 3);
  CHECK_THROWS_AS(forward(m, odd), Error);  // dims not divisible by 4
}

TEST_CASE("forward depends on the latest frame (non-degeneracy probe)") {
  Model m = init_model(tiny_cfg(), 4);
  RealArray w = random_window(5, 16, 16, 5);
  RealArray out = forward(m, w);
  RealArray w2 = w;
  w2(4, 8, 8) += 0.25;  // perturb frame 5
  RealArray out2 = forward(m, w2);
  CHECK(out.data != out2.data);
}

TEST_CASE("exactly two weight sets: zeroing block1 kills all intermediates") {
  ModelConfig cfg = tiny_cfg();
  Model m = init_model(cfg, 6);
  CHECK(static_cast<std::int64_t>(m.params.size()) == m.block1_size + m.block2_size);
  CHECK(m.block1_size == block_param_count(cfg));
  CHECK(m.block2_size == block_param_count(cfg));

  // With block1 zeroed, every frame triplet maps to the same (zero)
  // intermediate, so the output is a constant function of the input.
  Model z = m;
  std::fill(z.params.begin(), z.params.begin() + z.block1_size, 0.0);
  RealArray wa = random_window(5, 16, 16, 7);
  RealArray wb = random_window(5, 16, 16, 8);
  RealArray oa = forward(z, wa);
  RealArray ob = forward(z, wb);
  CHECK(oa.data == ob.data);
}

TEST_CASE("parameter-count identity under width doubling") {
  ModelConfig c1 = tiny_cfg();
  ModelConfig c2 = c1;
  c2.c1 *= 2;
  c2.c2 *= 2;
  c2.c3 *= 2;
  std::int64_t p1 = block_param_count(c1);
  std::int64_t p2 = block_param_count(c2);
  // Conv parameter counts are quadratic in channel width up to the linear
  // bias/in-out edge terms: p2 < 4*p1 and p2 > 2*p1.
  CHECK(p2 > 2 * p1);
  CHECK(p2 < 4 * p1);

  // Exact analytic identity: recompute from the convolution structure is the
  // library's job; here we assert the count matches the stored vector.
  Model m = init_model(c2, 1);
  CHECK(static_cast<std::int64_t>(m.params.size()) == 2 * p2);
}

TEST_CASE("ssim_loss: identities and gradient vs central finite differences") {
  RealArray x = random_window(1, 12, 12, 9);
  RealArray img({12, 12});
  for (int i = 0; i < 144; ++i) img(i) = x.data[static_cast<std::size_t>(i)];
  CHECK(ssim_loss(img, img) == doctest::Approx(0.0).epsilon(1e-12));

  RealArray y({12, 12});
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : y.data) v = u(rng);
  double l = ssim_loss(img, y);
  CHECK(l >= 0.0);
  CHECK(l <= 2.0);

  RealArray grad({12, 12});
  ssim_loss(img, y, &grad);
  const double eps = 1e-6;
  for (int i = 0; i < 144; i += 17) {
    RealArray p = img, q = img;
    p(i) += eps;
    q(i) -= eps;
    double fd = (ssim_loss(p, y) - ssim_loss(q, y)) / (2 * eps);
    if (std::abs(fd) > 1e-8)
      CHECK(std::abs(grad(i) - fd) / std::abs(fd) < 1e-3);
    else
      CHECK(std::abs(grad(i) - fd) < 1e-8);
  }
}

TEST_CASE("composite network gradient vs central finite differences (5x12x12)") {
  Model m = init_model(tiny_cfg(), 11);
  RealArray w = random_window(5, 12, 12, 12);
  RealArray target = random_window(1, 12, 12, 13);
  RealArray tgt({12, 12});
  for (int i = 0; i < 144; ++i) tgt(i) = target.data[static_cast<std::size_t>(i)];

  std::vector<double> grad;
  loss_and_param_grad(m, w, tgt, &grad);
  CHECK(grad.size() == m.params.size());

  const double eps = 1e-6;
  std::mt19937_64 rng(14);
  std::uniform_int_distribution<std::size_t> pick(0, m.params.size() - 1);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    std::size_t i = pick(rng);
    Model p = m, q = m;
    p.params[i] += eps;
    q.params[i] -= eps;
    double lp = loss_and_param_grad(p, w, tgt, nullptr);
    double lq = loss_and_param_grad(q, w, tgt, nullptr);
    double fd = (lp - lq) / (2 * eps);
    if (std::abs(fd) > 1e-7) {
      CHECK(std::abs(grad[i] - fd) / std::abs(fd) < 1e-3);
      ++checked;
    } else {
      CHECK(std::abs(grad[i] - fd) < 1e-7);
    }
  }
  CHECK(checked >= 10);
}

TEST_CASE("sliding_window_apply: frame counts and alignment") {
  Model m = init_model(tiny_cfg(), 15);
  RealArray series = random_window(12, 16, 16, 16);
  RealArray out = sliding_window_apply(m, series);
  CHECK(out.dim(0) == 8);  // T=12 -> 8 frames

  RealArray five = random_window(5, 16, 16, 17);
  RealArray one = sliding_window_apply(m, five);
  CHECK(one.dim(0) == 1);
  RealArray direct = forward(m, five);
  for (int i = 0; i < 256; ++i)
    CHECK(one.data[static_cast<std::size_t>(i)] == direct.data[static_cast<std::size_t>(i)]);

  RealArray first_window = random_window(5, 16, 16, 0);
  for (int f = 0; f < 5; ++f)
    for (int i = 0; i < 256; ++i)
      first_window.data[static_cast<std::size_t>(f * 256 + i)] =
          series.data[static_cast<std::size_t>(f * 256 + i)];
  RealArray w1 = forward(m, first_window);
  for (int i = 0; i < 256; ++i)
    CHECK(out.data[static_cast<std::size_t>(i)] == w1.data[static_cast<std::size_t>(i)]);

  RealArray shorty = random_window(4, 16, 16, 18);
  CHECK_THROWS_AS(sliding_window_apply(m, shorty), Error);
}

TEST_CASE("translation consistency of the convolutional structure") {
  Model m = init_model(tiny_cfg(), 19);
  int h = 16, w = 16, shift = 4;
  RealArray win = random_window(5, h, w, 20);
  RealArray shifted({5, h, w});
  for (int f = 0; f < 5; ++f)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        shifted(f, (y + shift) % h, (x + shift) % w) = win(f, y, x);
  RealArray out = forward(m, win);
  RealArray out_s = forward(m, shifted);
  // Compare away from a generous border margin (receptive field / 2).
  int margin = 6;
  for (int y = margin; y < h - margin; ++y)
    for (int x = margin; x < w - margin; ++x)
      CHECK(out_s((y + shift) % h, (x + shift) % w) ==
            doctest::Approx(out(y, x)).epsilon(1e-9));
}

TEST_CASE("single-pair overfit reaches SSIM > 0.95 within 200 epochs") {
  int h = 16;
  phantom::PhantomSpec spec;
  spec.seed = 3;
  RealArray gt = phantom::generate_cine(spec, 5, h, h);
  RealArray window({5, h, h});
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 0.15);
  for (std::int64_t i = 0; i < window.numel(); ++i)
    window(i) = std::max(0.0, gt(i) + g(rng));
  RealArray target({h, h});
  for (int i = 0; i < h * h; ++i) target(i) = gt.data[static_cast<std::size_t>(4 * h * h + i)];

  TrainState st = init_train_state(tiny_cfg(), 1);
  Dataset train(1);
  train[0].gridded = window;
  train[0].gt = gt;
  TrainHyper hy;
  hy.lr = 3e-3;
  hy.batch = 1;
  double best = 0.0;
  while (st.epoch < 200) {
    train_epochs(st, train, train, 10, hy);
    RealArray pred = forward(st.model, window);
    best = std::max(best, metrics::ssim(pred, target));
    if (best > 0.95) break;
  }
  CHECK(best > 0.95);
}

TEST_CASE("checkpoint resume is bit-identical to uninterrupted training") {
  int h = 16;
  phantom::PhantomSpec spec;
  spec.seed = 21;
  RealArray gt = phantom::generate_cine(spec, 6, h, h);
  Dataset train(1), val(1);
  train[0].gridded = gt;
  train[0].gt = gt;
  val[0] = train[0];
  TrainHyper hy;
  hy.lr = 1e-3;
  hy.batch = 2;

  TrainState a = init_train_state(tiny_cfg(), 7);
  train_epochs(a, train, val, 10, hy);

  TrainState b = init_train_state(tiny_cfg(), 7);
  train_epochs(b, train, val, 5, hy);
  std::string path = "resume_test.ckpt";
  save_checkpoint(b, path);
  TrainState c = load_checkpoint(path);
  std::remove(path.c_str());

  // Restored state is bitwise equal to the saved one.
  CHECK(c.model.params == b.model.params);
  CHECK(c.adam_m == b.adam_m);
  CHECK(c.adam_v == b.adam_v);
  CHECK(c.epoch == b.epoch);
  CHECK(c.rng == b.rng);

  train_epochs(c, train, val, 5, hy);
  CHECK(c.model.params == a.model.params);
  CHECK(c.adam_m == a.adam_m);
  CHECK(c.adam_v == a.adam_v);
  CHECK(c.latest_val_ssim == a.latest_val_ssim);
  CHECK(c.loss_history == a.loss_history);
}

TEST_CASE("validation SSIM improves from epoch 0 over multiple seeds") {
  int h = 16;
  phantom::PhantomSpec spec;
  spec.seed = 30;
  RealArray gt = phantom::generate_cine(spec, 6, h, h);
  RealArray noisy({6, h, h});
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g(0.0, 0.1);
  for (std::int64_t i = 0; i < gt.numel(); ++i) noisy(i) = std::max(0.0, gt(i) + g(rng));
  Dataset data(1);
  data[0].gridded = noisy;
  data[0].gt = gt;

  int improved = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    TrainState st = init_train_state(tiny_cfg(), seed);
    double before = evaluate_ssim(st.model, data);
    TrainHyper hy;
    hy.lr = 3e-3;
    hy.batch = 2;
    train_epochs(st, data, data, 15, hy);
    if (st.latest_val_ssim > before) ++improved;
  }
  CHECK(improved >= 3);  // median over 5 seeds improves
}
