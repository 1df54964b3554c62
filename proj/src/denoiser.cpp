#include "spiralforge/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace sf::denoiser {

namespace {

using json = nlohmann::json;

// ---- layer plumbing --------------------------------------------------------

// 3x3 convolution, zero padding 1, stride 1 or 2.
struct ConvSpec {
  int in_c, out_c, stride;
  std::int64_t w_off, b_off;  // offsets into the owning parameter span

  std::int64_t w_count() const { return static_cast<std::int64_t>(out_c) * in_c * 9; }
  std::int64_t b_count() const { return out_c; }
};

struct BlockSpec {
  ConvSpec conv_in, d1, d2, u1, u2, out;
  std::int64_t size = 0;
};

BlockSpec make_block_spec(const ModelConfig& cfg) {
  BlockSpec b;
  std::int64_t off = 0;
  auto add = [&off](int in_c, int out_c, int stride) {
    ConvSpec c{in_c, out_c, stride, 0, 0};
    c.w_off = off;
    off += c.w_count();
    c.b_off = off;
    off += c.b_count();
    return c;
  };
  b.conv_in = add(3, cfg.c1, 1);
  b.d1 = add(cfg.c1, cfg.c2, 2);
  b.d2 = add(cfg.c2, cfg.c3, 2);
  b.u1 = add(cfg.c3 + cfg.c2, cfg.c2, 1);
  b.u2 = add(cfg.c2 + cfg.c1, cfg.c1, 1);
  b.out = add(cfg.c1, 1, 1);
  b.size = off;
  return b;
}

RealArray conv_forward(const ConvSpec& c, const double* p, const RealArray& in) {
  std::int64_t h = in.dim(1), w = in.dim(2);
  std::int64_t oh = h / c.stride, ow = w / c.stride;
  RealArray out({c.out_c, oh, ow});
  const double* wt = p + c.w_off;
  const double* bias = p + c.b_off;
  for (int oc = 0; oc < c.out_c; ++oc) {
    for (std::int64_t y = 0; y < oh; ++y)
      for (std::int64_t x = 0; x < ow; ++x) out(oc, y, x) = bias[oc];
    for (int ic = 0; ic < c.in_c; ++ic) {
      const double* wk = wt + (static_cast<std::int64_t>(oc) * c.in_c + ic) * 9;
      for (std::int64_t y = 0; y < oh; ++y) {
        for (int dy = 0; dy < 3; ++dy) {
          std::int64_t iy = y * c.stride + dy - 1;
          if (iy < 0 || iy >= h) continue;
          for (int dx = 0; dx < 3; ++dx) {
            double wv = wk[dy * 3 + dx];
            for (std::int64_t x = 0; x < ow; ++x) {
              std::int64_t ix = x * c.stride + dx - 1;
              if (ix < 0 || ix >= w) continue;
              out(oc, y, x) += wv * in(ic, iy, ix);
            }
          }
        }
      }
    }
  }
  return out;
}

// Accumulates parameter gradients; returns the input gradient.
RealArray conv_backward(const ConvSpec& c, const double* p, const RealArray& in,
                        const RealArray& dout, double* dp) {
  std::int64_t h = in.dim(1), w = in.dim(2);
  std::int64_t oh = dout.dim(1), ow = dout.dim(2);
  RealArray din({c.in_c, h, w});
  const double* wt = p + c.w_off;
  double* dw = dp + c.w_off;
  double* db = dp + c.b_off;
  for (int oc = 0; oc < c.out_c; ++oc) {
    for (std::int64_t y = 0; y < oh; ++y)
      for (std::int64_t x = 0; x < ow; ++x) db[oc] += dout(oc, y, x);
    for (int ic = 0; ic < c.in_c; ++ic) {
      const double* wk = wt + (static_cast<std::int64_t>(oc) * c.in_c + ic) * 9;
      double* dwk = dw + (static_cast<std::int64_t>(oc) * c.in_c + ic) * 9;
      for (std::int64_t y = 0; y < oh; ++y) {
        for (int dy = 0; dy < 3; ++dy) {
          std::int64_t iy = y * c.stride + dy - 1;
          if (iy < 0 || iy >= h) continue;
          for (int dx = 0; dx < 3; ++dx) {
            double wv = wk[dy * 3 + dx];
            double acc = 0.0;
            for (std::int64_t x = 0; x < ow; ++x) {
              std::int64_t ix = x * c.stride + dx - 1;
              if (ix < 0 || ix >= w) continue;
              double g = dout(oc, y, x);
              acc += g * in(ic, iy, ix);
              din(ic, iy, ix) += wv * g;
            }
            dwk[dy * 3 + dx] += acc;
          }
        }
      }
    }
  }
  return din;
}

void relu_inplace(RealArray& a) {
  for (auto& v : a.data) v = std::max(0.0, v);
}

// d(post-relu activation) -> d(pre-activation), using act > 0 as the mask.
void relu_backward_inplace(const RealArray& act, RealArray& d) {
  for (std::size_t i = 0; i < d.data.size(); ++i)
    if (act.data[i] <= 0.0) d.data[i] = 0.0;
}

RealArray upsample2(const RealArray& in) {
  std::int64_t c = in.dim(0), h = in.dim(1), w = in.dim(2);
  RealArray out({c, h * 2, w * 2});
  for (std::int64_t ch = 0; ch < c; ++ch)
    for (std::int64_t y = 0; y < 2 * h; ++y)
      for (std::int64_t x = 0; x < 2 * w; ++x)
        out(ch, y, x) = in(ch, y / 2, x / 2);
  return out;
}

RealArray upsample2_backward(const RealArray& dout) {
  std::int64_t c = dout.dim(0), h = dout.dim(1) / 2, w = dout.dim(2) / 2;
  RealArray din({c, h, w});
  for (std::int64_t ch = 0; ch < c; ++ch)
    for (std::int64_t y = 0; y < 2 * h; ++y)
      for (std::int64_t x = 0; x < 2 * w; ++x)
        din(ch, y / 2, x / 2) += dout(ch, y, x);
  return din;
}

RealArray concat_channels(const RealArray& a, const RealArray& b) {
  RealArray out({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)});
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.data.size());
  return out;
}

// ---- denoising block -------------------------------------------------------

struct BlockTape {
  RealArray in;      // [3, H, W]
  RealArray a_in;    // post-relu [c1, H, W]
  RealArray a_d1;    // post-relu [c2, H/2, W/2]
  RealArray a_d2;    // post-relu [c3, H/4, W/4]
  RealArray cat1;    // [c3+c2, H/2, W/2]
  RealArray a_u1;    // post-relu [c2, H/2, W/2]
  RealArray cat2;    // [c2+c1, H, W]
  RealArray a_u2;    // post-relu [c1, H, W]
  RealArray pre_out; // [1, H, W]
};

RealArray block_forward(const BlockSpec& b, const double* p, const RealArray& in,
                        BlockTape* tape) {
  BlockTape local;
  BlockTape& t = tape ? *tape : local;
  t.in = in;
  t.a_in = conv_forward(b.conv_in, p, in);
  relu_inplace(t.a_in);
  t.a_d1 = conv_forward(b.d1, p, t.a_in);
  relu_inplace(t.a_d1);
  t.a_d2 = conv_forward(b.d2, p, t.a_d1);
  relu_inplace(t.a_d2);
  t.cat1 = concat_channels(upsample2(t.a_d2), t.a_d1);
  t.a_u1 = conv_forward(b.u1, p, t.cat1);
  relu_inplace(t.a_u1);
  t.cat2 = concat_channels(upsample2(t.a_u1), t.a_in);
  t.a_u2 = conv_forward(b.u2, p, t.cat2);
  relu_inplace(t.a_u2);
  t.pre_out = conv_forward(b.out, p, t.a_u2);
  return t.pre_out;
}

// dout is [1, H, W]; returns d(input) [3, H, W], accumulating into dp.
RealArray block_backward(const BlockSpec& b, const double* p, const BlockTape& t,
                         const RealArray& dout, double* dp) {
  RealArray d_a_u2 = conv_backward(b.out, p, t.a_u2, dout, dp);
  relu_backward_inplace(t.a_u2, d_a_u2);
  RealArray d_cat2 = conv_backward(b.u2, p, t.cat2, d_a_u2, dp);

  std::int64_t c2 = t.a_u1.dim(0), c1 = t.a_in.dim(0);
  std::int64_t h = t.in.dim(1), w = t.in.dim(2);
  RealArray d_up_u1({c2, h, w});
  std::copy_n(d_cat2.data.begin(), d_up_u1.data.size(), d_up_u1.data.begin());
  RealArray d_a_in({c1, h, w});
  std::copy_n(d_cat2.data.begin() + d_up_u1.data.size(), d_a_in.data.size(),
              d_a_in.data.begin());

  RealArray d_a_u1 = upsample2_backward(d_up_u1);
  relu_backward_inplace(t.a_u1, d_a_u1);
  RealArray d_cat1 = conv_backward(b.u1, p, t.cat1, d_a_u1, dp);

  std::int64_t c3 = t.a_d2.dim(0);
  RealArray d_up_d2({c3, h / 2, w / 2});
  std::copy_n(d_cat1.data.begin(), d_up_d2.data.size(), d_up_d2.data.begin());
  RealArray d_a_d1({c2, h / 2, w / 2});
  std::copy_n(d_cat1.data.begin() + d_up_d2.data.size(), d_a_d1.data.size(),
              d_a_d1.data.begin());

  RealArray d_a_d2 = upsample2_backward(d_up_d2);
  relu_backward_inplace(t.a_d2, d_a_d2);
  RealArray d_a_d1_low = conv_backward(b.d2, p, t.a_d1, d_a_d2, dp);
  for (std::size_t i = 0; i < d_a_d1.data.size(); ++i)
    d_a_d1.data[i] += d_a_d1_low.data[i];
  relu_backward_inplace(t.a_d1, d_a_d1);

  RealArray d_a_in2 = conv_backward(b.d1, p, t.a_in, d_a_d1, dp);
  for (std::size_t i = 0; i < d_a_in.data.size(); ++i)
    d_a_in.data[i] += d_a_in2.data[i];
  relu_backward_inplace(t.a_in, d_a_in);

  return conv_backward(b.conv_in, p, t.in, d_a_in, dp);
}

RealArray frame_triplet(const RealArray& window, int first) {
  std::int64_t h = window.dim(1), w = window.dim(2);
  RealArray out({3, h, w});
  std::copy_n(window.data.begin() + first * h * w, 3 * h * w, out.data.begin());
  return out;
}

struct ModelTape {
  BlockTape b1[3];
  BlockTape b2;
  RealArray pre_clamp;  // [H, W]
};

RealArray model_forward(const Model& m, const RealArray& window, ModelTape* tape) {
  if (window.shape.size() != 3 || window.dim(0) != 5)
    throw Error(ErrorCode::BadWindowLength, "expected a [5, H, W] window");
  std::int64_t h = window.dim(1), w = window.dim(2);
  if (h % 4 != 0 || w % 4 != 0)
    throw Error(ErrorCode::IndivisibleDims, "H and W must be divisible by 4");
  for (double v : window.data)
    if (!std::isfinite(v))
      throw Error(ErrorCode::NonFiniteLoss, "non-finite input frame");

  BlockSpec spec = make_block_spec(m.cfg);
  const double* p1 = m.params.data();
  const double* p2 = m.params.data() + m.block1_size;

  RealArray inter({3, h, w});
  for (int k = 0; k < 3; ++k) {
    RealArray trip = frame_triplet(window, k);
    RealArray out = block_forward(spec, p1, trip, tape ? &tape->b1[k] : nullptr);
    std::copy(out.data.begin(), out.data.end(),
              inter.data.begin() + static_cast<std::int64_t>(k) * h * w);
  }
  RealArray pre = block_forward(spec, p2, inter, tape ? &tape->b2 : nullptr);
  RealArray result({h, w});
  for (std::int64_t i = 0; i < h * w; ++i)
    result.data[static_cast<std::size_t>(i)] =
        std::max(0.0, pre.data[static_cast<std::size_t>(i)]);
  if (tape) {
    tape->pre_clamp = RealArray({h, w});
    std::copy(pre.data.begin(), pre.data.end(), tape->pre_clamp.data.begin());
  }
  return result;
}

}  // namespace

std::int64_t block_param_count(const ModelConfig& cfg) {
  return make_block_spec(cfg).size;
}

Model init_model(const ModelConfig& cfg, std::uint64_t seed) {
  Model m;
  m.cfg = cfg;
  BlockSpec spec = make_block_spec(cfg);
  m.block1_size = spec.size;
  m.block2_size = spec.size;
  m.params.assign(static_cast<std::size_t>(2 * spec.size), 0.0);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto init_conv = [&](const ConvSpec& c, double* p) {
    double scale = std::sqrt(2.0 / (9.0 * c.in_c));
    for (std::int64_t i = 0; i < c.w_count(); ++i)
      p[c.w_off + i] = scale * gauss(rng);
    for (std::int64_t i = 0; i < c.b_count(); ++i) p[c.b_off + i] = 0.0;
  };
  for (double* base : {m.params.data(), m.params.data() + spec.size}) {
    init_conv(spec.conv_in, base);
    init_conv(spec.d1, base);
    init_conv(spec.d2, base);
    init_conv(spec.u1, base);
    init_conv(spec.u2, base);
    init_conv(spec.out, base);
  }
  return m;
}

RealArray forward(const Model& model, const RealArray& window) {
  return model_forward(model, window, nullptr);
}

RealArray sliding_window_apply(const Model& model, const RealArray& series) {
  if (series.shape.size() != 3 || series.dim(0) < 5)
    throw Error(ErrorCode::SeriesTooShort, "need at least 5 frames");
  std::int64_t t = series.dim(0), h = series.dim(1), w = series.dim(2);
  RealArray out({t - 4, h, w});
  for (std::int64_t k = 0; k + 5 <= t; ++k) {
    RealArray window({5, h, w});
    std::copy_n(series.data.begin() + k * h * w, 5 * h * w, window.data.begin());
    RealArray frame = forward(model, window);
    std::copy(frame.data.begin(), frame.data.end(), out.data.begin() + k * h * w);
  }
  return out;
}

double ssim_loss(const RealArray& pred, const RealArray& target, RealArray* grad,
                 const metrics::SsimParams& p) {
  if (pred.shape != target.shape || pred.shape.size() != 2)
    throw Error(ErrorCode::ShapeMismatch, "pred/target shape mismatch");
  std::int64_t h = pred.dim(0), w = pred.dim(1);
  int n = p.window;
  if (h < n || w < n)
    throw Error(ErrorCode::ImageSmallerThanWindow, "image smaller than SSIM window");

  // Gaussian window, normalized to sum 1 (identical to metrics::ssim).
  std::vector<double> win(static_cast<std::size_t>(n) * n);
  double ctr = (n - 1) / 2.0, wsum = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      double d2 = (a - ctr) * (a - ctr) + (b - ctr) * (b - ctr);
      win[static_cast<std::size_t>(a) * n + b] =
          std::exp(-d2 / (2 * p.sigma * p.sigma));
      wsum += win[static_cast<std::size_t>(a) * n + b];
    }
  for (auto& v : win) v /= wsum;

  double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
  double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);

  if (grad) {
    *grad = RealArray({h, w});
  }
  double total = 0.0;
  std::int64_t count = (h - n + 1) * (w - n + 1);
  for (std::int64_t i = 0; i + n <= h; ++i) {
    for (std::int64_t j = 0; j + n <= w; ++j) {
      double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          double g = win[static_cast<std::size_t>(a) * n + b];
          double xv = pred(i + a, j + b);
          double yv = target(i + a, j + b);
          mx += g * xv;
          my += g * yv;
          sxx += g * xv * xv;
          syy += g * yv * yv;
          sxy += g * xv * yv;
        }
      double n1 = 2 * mx * my + c1;
      double n2 = 2 * (sxy - mx * my) + c2;
      double d1 = mx * mx + my * my + c1;
      double d2 = (sxx - mx * mx) + (syy - my * my) + c2;
      double s = n1 * n2 / (d1 * d2);
      total += s;
      if (grad) {
        // Partials of s wrt the weighted moments (mx, sxx, sxy).
        double ds_dmx = (2 * my * (n2 - n1)) / (d1 * d2) -
                        2 * mx * s * (1.0 / d1 - 1.0 / d2);
        double ds_dsxx = -s / d2;
        double ds_dsxy = 2 * n1 / (d1 * d2);
        double coef = -1.0 / static_cast<double>(count);  // loss = 1 - mean s
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) {
            double g = win[static_cast<std::size_t>(a) * n + b];
            double xv = pred(i + a, j + b);
            double yv = target(i + a, j + b);
            (*grad)(i + a, j + b) +=
                coef * g * (ds_dmx + 2 * xv * ds_dsxx + yv * ds_dsxy);
          }
      }
    }
  }
  return 1.0 - total / static_cast<double>(count);
}

double loss_and_param_grad(const Model& model, const RealArray& window,
                           const RealArray& target, std::vector<double>* grad,
                           const metrics::SsimParams& p) {
  ModelTape tape;
  RealArray pred = model_forward(model, window, &tape);
  RealArray dpred;
  double loss = ssim_loss(pred, target, grad ? &dpred : nullptr, p);
  if (!grad) return loss;

  grad->assign(model.params.size(), 0.0);
  std::int64_t h = window.dim(1), w = window.dim(2);

  // Clamp backward: zero where the pre-clamp output was negative.
  RealArray dout({1, h, w});
  for (std::int64_t i = 0; i < h * w; ++i)
    dout.data[static_cast<std::size_t>(i)] =
        tape.pre_clamp.data[static_cast<std::size_t>(i)] > 0.0
            ? dpred.data[static_cast<std::size_t>(i)]
            : 0.0;

  BlockSpec spec = make_block_spec(model.cfg);
  const double* p1 = model.params.data();
  const double* p2 = model.params.data() + model.block1_size;
  double* g1 = grad->data();
  double* g2 = grad->data() + model.block1_size;

  RealArray d_inter = block_backward(spec, p2, tape.b2, dout, g2);
  for (int k = 0; k < 3; ++k) {
    RealArray dk({1, h, w});
    std::copy_n(d_inter.data.begin() + static_cast<std::int64_t>(k) * h * w, h * w,
                dk.data.begin());
    block_backward(spec, p1, tape.b1[k], dk, g1);  // shared weights accumulate
  }
  return loss;
}

TrainState init_train_state(const ModelConfig& cfg, std::uint64_t seed) {
  TrainState st;
  st.model = init_model(cfg, seed);
  st.adam_m.assign(st.model.params.size(), 0.0);
  st.adam_v.assign(st.model.params.size(), 0.0);
  st.rng.seed(seed ^ 0x5DEECE66DULL);
  return st;
}

double evaluate_ssim(const Model& model, const Dataset& data) {
  std::vector<double> vals;
  for (const auto& pair : data) {
    RealArray recon = sliding_window_apply(model, pair.gridded);
    std::int64_t h = pair.gt.dim(1), w = pair.gt.dim(2);
    for (std::int64_t k = 0; k < recon.dim(0); ++k) {
      RealArray r({h, w}), g({h, w});
      std::copy_n(recon.data.begin() + k * h * w, h * w, r.data.begin());
      std::copy_n(pair.gt.data.begin() + (k + 4) * h * w, h * w, g.data.begin());
      vals.push_back(metrics::ssim(r, g));
    }
  }
  return metrics::aggregate(vals).mean;
}

void train_epochs(TrainState& state, const Dataset& train, const Dataset& val,
                  int n_epochs, const TrainHyper& hyper) {
  if (train.empty()) throw Error(ErrorCode::EmptySplit, "empty training set");
  if (n_epochs < 1) throw Error(ErrorCode::InvalidDims, "n_epochs must be >= 1");

  // Enumerate all (series, start) windows once.
  std::vector<std::pair<int, int>> windows;
  for (std::size_t s = 0; s < train.size(); ++s) {
    std::int64_t t = train[s].gridded.dim(0);
    if (t < 5) throw Error(ErrorCode::SeriesTooShort, "training series too short");
    for (int k = 0; k + 5 <= t; ++k) windows.emplace_back(static_cast<int>(s), k);
  }

  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::size_t np = state.model.params.size();
  std::vector<double> gsum(np), g(np);

  for (int e = 0; e < n_epochs; ++e) {
    std::shuffle(windows.begin(), windows.end(), state.rng);
    double epoch_loss = 0.0;
    std::size_t idx = 0;
    while (idx < windows.size()) {
      std::size_t bsz = std::min<std::size_t>(hyper.batch, windows.size() - idx);
      std::fill(gsum.begin(), gsum.end(), 0.0);
      for (std::size_t b = 0; b < bsz; ++b) {
        auto [s, k] = windows[idx + b];
        const auto& pair = train[static_cast<std::size_t>(s)];
        std::int64_t h = pair.gridded.dim(1), w = pair.gridded.dim(2);
        RealArray window({5, h, w});
        std::copy_n(pair.gridded.data.begin() + static_cast<std::int64_t>(k) * h * w,
                    5 * h * w, window.data.begin());
        RealArray target({h, w});
        std::copy_n(pair.gt.data.begin() + static_cast<std::int64_t>(k + 4) * h * w,
                    h * w, target.data.begin());
        double loss = loss_and_param_grad(state.model, window, target, &g);
        if (!std::isfinite(loss))
          throw Error(ErrorCode::NonFiniteLoss, "training loss diverged");
        epoch_loss += loss;
        for (std::size_t i = 0; i < np; ++i) gsum[i] += g[i] / static_cast<double>(bsz);
      }
      ++state.adam_t;
      double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.adam_t));
      double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.adam_t));
      for (std::size_t i = 0; i < np; ++i) {
        state.adam_m[i] = beta1 * state.adam_m[i] + (1 - beta1) * gsum[i];
        state.adam_v[i] = beta2 * state.adam_v[i] + (1 - beta2) * gsum[i] * gsum[i];
        double mhat = state.adam_m[i] / bc1;
        double vhat = state.adam_v[i] / bc2;
        state.model.params[i] -= hyper.lr * mhat / (std::sqrt(vhat) + eps);
        if (!std::isfinite(state.model.params[i]))
          throw Error(ErrorCode::NonFiniteLoss, "non-finite parameter");
      }
      idx += bsz;
    }
    state.loss_history.push_back(epoch_loss / static_cast<double>(windows.size()));
    ++state.epoch;
  }

  if (!val.empty()) {
    state.latest_val_ssim = evaluate_ssim(state.model, val);
    state.best_val_ssim = std::max(state.best_val_ssim, state.latest_val_ssim);
  }
}

void save_checkpoint(const TrainState& state, const std::string& path) {
  json header;
  header["format"] = "spiralforge-checkpoint";
  header["version"] = 1;
  header["c1"] = state.model.cfg.c1;
  header["c2"] = state.model.cfg.c2;
  header["c3"] = state.model.cfg.c3;
  header["epoch"] = state.epoch;
  header["adam_t"] = state.adam_t;
  header["latest_val_ssim"] = state.latest_val_ssim;
  header["best_val_ssim"] = state.best_val_ssim;
  header["loss_history"] = state.loss_history;
  std::ostringstream rng_ss;
  rng_ss << state.rng;
  header["rng"] = rng_ss.str();

  std::string hs = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write checkpoint: " + path);
  out.write("SFCK", 4);
  std::uint32_t len = static_cast<std::uint32_t>(hs.size());
  out.write(reinterpret_cast<const char*>(&len), 4);
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  auto dump = [&](const std::vector<double>& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
  };
  dump(state.model.params);
  dump(state.adam_m);
  dump(state.adam_v);
  if (!out) throw Error(ErrorCode::IoError, "checkpoint write failed: " + path);
}

TrainState load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "SFCK")
    throw Error(ErrorCode::FormatError, "not a checkpoint file: " + path);
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), 4);
  std::string hs(len, '\0');
  in.read(hs.data(), len);
  if (!in) throw Error(ErrorCode::FormatError, "truncated checkpoint header");
  json header = json::parse(hs);

  TrainState st;
  st.model.cfg.c1 = header.at("c1");
  st.model.cfg.c2 = header.at("c2");
  st.model.cfg.c3 = header.at("c3");
  std::int64_t bs = block_param_count(st.model.cfg);
  st.model.block1_size = bs;
  st.model.block2_size = bs;
  st.model.params.resize(static_cast<std::size_t>(2 * bs));
  st.adam_m.resize(st.model.params.size());
  st.adam_v.resize(st.model.params.size());
  st.epoch = header.at("epoch");
  st.adam_t = header.at("adam_t");
  st.latest_val_ssim = header.at("latest_val_ssim");
  st.best_val_ssim = header.at("best_val_ssim");
  st.loss_history = header.at("loss_history").get<std::vector<double>>();
  std::istringstream rng_ss(header.at("rng").get<std::string>());
  rng_ss >> st.rng;

  auto slurp = [&](std::vector<double>& v) {
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
  };
  slurp(st.model.params);
  slurp(st.adam_m);
  slurp(st.adam_v);
  if (!in) throw Error(ErrorCode::FormatError, "truncated checkpoint payload");
  return st;
}

}  // namespace sf::denoiser
