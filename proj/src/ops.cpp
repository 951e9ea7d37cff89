// Copyright 2026 The mnerv contributors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mnerv/ops.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "mnerv/error.h"

namespace mnerv::inline MNERV_PRECISION_NS::ops {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ConfigError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                      shape_str(b.shape()));
  }
}

void require_chw(const Tensor& t, const char* op) {
  if (t.rank() != 3) {
    throw ConfigError(std::string(op) + ": expected (C,H,W) input, got " + shape_str(t.shape()));
  }
}

// Elementwise unary op given value and derivative functions of (x, y).
template <typename F, typename D>
Tensor unary(const char* name, const Tensor& a, F f, D df) {
  auto x = a.data();
  std::vector<Real> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  Tensor result = make_result(name, a.shape(), std::move(out), {a}, nullptr);
  if (result.requires_grad()) {
    // The closure needs the output values; capture a copy of the data only.
    std::vector<Real> y(result.data().begin(), result.data().end());
    result.node()->backward = [a, y = std::move(y), df](std::span<const Real> g) {
      Real* ga = grad_target(a);
      auto x = a.data();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * df(x[i], y[i]);
    };
  }
  return result;
}

struct ConvGeometry {
  int c_in, h, w, c_out, k, stride, pad, h_out, w_out;
};

// Output index range [lo, hi) along one axis for kernel tap `tap`.
inline void valid_range(int tap, int pad, int stride, int in_len, int out_len, int& lo,
                        int& hi) {
  // Need 0 <= o*stride + tap - pad < in_len.
  int off = pad - tap;
  lo = off > 0 ? (off + stride - 1) / stride : 0;
  int last = in_len - 1 + pad - tap;
  hi = last < 0 ? 0 : std::min(out_len, last / stride + 1);
  if (lo > hi) lo = hi;
}

ConvGeometry conv_geometry(const Tensor& input, const Tensor& weight, int stride, int padding,
                           bool depthwise) {
  require_chw(input, "conv2d");
  if (stride <= 0) throw ConfigError("conv2d: stride must be positive");
  if (padding < 0) throw ConfigError("conv2d: padding must be non-negative");
  if (weight.rank() != 4 || weight.dim(2) != weight.dim(3)) {
    throw ConfigError("conv2d: weight must be (C_out,C_in,k,k), got " + shape_str(weight.shape()));
  }
  ConvGeometry g{};
  g.c_in = input.dim(0);
  g.h = input.dim(1);
  g.w = input.dim(2);
  g.c_out = weight.dim(0);
  g.k = weight.dim(2);
  g.stride = stride;
  g.pad = padding;
  if (depthwise) {
    if (weight.dim(1) != 1 || g.c_out != g.c_in) {
      throw ConfigError("depthwise_conv2d: weight " + shape_str(weight.shape()) +
                        " incompatible with input " + shape_str(input.shape()));
    }
  } else if (weight.dim(1) != g.c_in) {
    throw ConfigError("conv2d: weight expects " + std::to_string(weight.dim(1)) +
                      " input channels, input has " + std::to_string(g.c_in));
  }
  if (g.h + 2 * padding < g.k || g.w + 2 * padding < g.k) {
    throw ConfigError("conv2d: kernel " + std::to_string(g.k) + " larger than padded input " +
                      shape_str(input.shape()));
  }
  g.h_out = (g.h + 2 * padding - g.k) / stride + 1;
  g.w_out = (g.w + 2 * padding - g.k) / stride + 1;
  return g;
}

void check_bias(const Tensor& bias, int channels, const char* op) {
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != channels)) {
    throw ConfigError(std::string(op) + ": bias shape " + shape_str(bias.shape()) +
                      " does not match " + std::to_string(channels) + " output channels");
  }
}

// Accumulates one (input channel, output channel) plane pair. The three
// kernels below share the same loop order so results are reproducible.
void conv_plane_forward(const ConvGeometry& g, const Real* in, const Real* wk, Real* out) {
  for (int i = 0; i < g.k; ++i) {
    int ylo, yhi;
    valid_range(i, g.pad, g.stride, g.h, g.h_out, ylo, yhi);
    for (int j = 0; j < g.k; ++j) {
      int xlo, xhi;
      valid_range(j, g.pad, g.stride, g.w, g.w_out, xlo, xhi);
      const Real wv = wk[i * g.k + j];
      for (int y = ylo; y < yhi; ++y) {
        const Real* in_row = in + (y * g.stride + i - g.pad) * g.w;
        Real* out_row = out + y * g.w_out;
        const int shift = j - g.pad;
        if (g.stride == 1) {
          for (int x = xlo; x < xhi; ++x) out_row[x] += wv * in_row[x + shift];
        } else {
          for (int x = xlo; x < xhi; ++x) out_row[x] += wv * in_row[x * g.stride + shift];
        }
      }
    }
  }
}

void conv_plane_backward(const ConvGeometry& g, const Real* in, const Real* wk, const Real* gout,
                         Real* gin, Real* gw) {
  for (int i = 0; i < g.k; ++i) {
    int ylo, yhi;
    valid_range(i, g.pad, g.stride, g.h, g.h_out, ylo, yhi);
    for (int j = 0; j < g.k; ++j) {
      int xlo, xhi;
      valid_range(j, g.pad, g.stride, g.w, g.w_out, xlo, xhi);
      const Real wv = wk[i * g.k + j];
      Real acc = 0;
      for (int y = ylo; y < yhi; ++y) {
        const int row = (y * g.stride + i - g.pad) * g.w;
        const int shift = j - g.pad;
        const Real* go_row = gout + y * g.w_out;
        if (gin) {
          Real* gi_row = gin + row;
          for (int x = xlo; x < xhi; ++x) gi_row[x * g.stride + shift] += wv * go_row[x];
        }
        if (gw) {
          const Real* in_row = in + row;
          for (int x = xlo; x < xhi; ++x) acc += go_row[x] * in_row[x * g.stride + shift];
        }
      }
      if (gw) gw[i * g.k + j] += acc;
    }
  }
}

void bias_backward(const Tensor& bias, std::span<const Real> g, int channels, int plane) {
  Real* gb = grad_target(bias);
  if (!gb) return;
  for (int o = 0; o < channels; ++o) {
    Real acc = 0;
    const Real* go = g.data() + static_cast<std::size_t>(o) * plane;
    for (int p = 0; p < plane; ++p) acc += go[p];
    gb[o] += acc;
  }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  auto x = a.data(), y = b.data();
  std::vector<Real> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
  return make_result("add", a.shape(), std::move(out), {a, b},
                     [a, b](std::span<const Real> g) {
                       if (Real* ga = grad_target(a))
                         for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                       if (Real* gb = grad_target(b))
                         for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
                     });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  auto x = a.data(), y = b.data();
  std::vector<Real> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - y[i];
  return make_result("sub", a.shape(), std::move(out), {a, b},
                     [a, b](std::span<const Real> g) {
                       if (Real* ga = grad_target(a))
                         for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                       if (Real* gb = grad_target(b))
                         for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
                     });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  auto x = a.data(), y = b.data();
  std::vector<Real> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
  return make_result("mul", a.shape(), std::move(out), {a, b},
                     [a, b](std::span<const Real> g) {
                       auto x = a.data(), y = b.data();
                       if (Real* ga = grad_target(a))
                         for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
                       if (Real* gb = grad_target(b))
                         for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * x[i];
                     });
}

Tensor div(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "div");
  auto x = a.data(), y = b.data();
  std::vector<Real> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] / y[i];
  return make_result("div", a.shape(), std::move(out), {a, b},
                     [a, b](std::span<const Real> g) {
                       auto x = a.data(), y = b.data();
                       if (Real* ga = grad_target(a))
                         for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / y[i];
                       if (Real* gb = grad_target(b))
                         for (std::size_t i = 0; i < g.size(); ++i)
                           gb[i] -= g[i] * x[i] / (y[i] * y[i]);
                     });
}

Tensor add_scalar(const Tensor& a, Real s) {
  return unary("add_scalar", a, [s](Real x) { return x + s; },
               [](Real, Real) { return Real(1); });
}

Tensor mul_scalar(const Tensor& a, Real s) {
  return unary("mul_scalar", a, [s](Real x) { return x * s; },
               [s](Real, Real) { return s; });
}

Tensor pow_scalar(const Tensor& a, Real p) {
  return unary(
      "pow_scalar", a, [p](Real x) { return std::pow(x, p); },
      [p](Real x, Real) { return x == Real(0) ? Real(0) : p * std::pow(x, p - 1); });
}

Tensor square(const Tensor& a) {
  return unary("square", a, [](Real x) { return x * x; },
               [](Real x, Real) { return 2 * x; });
}

Tensor abs(const Tensor& a) {
  return unary("abs", a, [](Real x) { return std::abs(x); },
               [](Real x, Real) { return x > 0 ? Real(1) : (x < 0 ? Real(-1) : Real(0)); });
}

Tensor relu(const Tensor& a) {
  return unary("relu", a, [](Real x) { return x > 0 ? x : Real(0); },
               [](Real x, Real) { return x > 0 ? Real(1) : Real(0); });
}

Tensor sigmoid(const Tensor& a) {
  return unary("sigmoid", a, [](Real x) { return Real(1) / (Real(1) + std::exp(-x)); },
               [](Real, Real y) { return y * (Real(1) - y); });
}

Tensor gelu(const Tensor& a) {
  constexpr Real kC = static_cast<Real>(0.7978845608028654);  // sqrt(2/pi)
  constexpr Real kA = static_cast<Real>(0.044715);
  return unary(
      "gelu", a,
      [](Real x) { return Real(0.5) * x * (Real(1) + std::tanh(kC * (x + kA * x * x * x))); },
      [](Real x, Real) {
        const Real t = std::tanh(kC * (x + kA * x * x * x));
        return Real(0.5) * (Real(1) + t) +
               Real(0.5) * x * (Real(1) - t * t) * kC * (Real(1) + 3 * kA * x * x);
      });
}

Tensor sum(const Tensor& a) {
  Real acc = 0;
  for (Real v : a.data()) acc += v;
  return make_result("sum", {1}, {acc}, {a}, [a](std::span<const Real> g) {
    Real* ga = grad_target(a);
    for (std::size_t i = 0; i < a.numel(); ++i) ga[i] += g[0];
  });
}

Tensor mean(const Tensor& a) {
  const Real n = static_cast<Real>(a.numel());
  Real acc = 0;
  for (Real v : a.data()) acc += v;
  return make_result("mean", {1}, {acc / n}, {a}, [a, n](std::span<const Real> g) {
    Real* ga = grad_target(a);
    const Real d = g[0] / n;
    for (std::size_t i = 0; i < a.numel(); ++i) ga[i] += d;
  });
}

Tensor channel_mean(const Tensor& a) {
  require_chw(a, "channel_mean");
  const int c = a.dim(0);
  const int plane = a.dim(1) * a.dim(2);
  std::vector<Real> out(c);
  auto x = a.data();
  for (int ch = 0; ch < c; ++ch) {
    Real acc = 0;
    for (int p = 0; p < plane; ++p) acc += x[static_cast<std::size_t>(ch) * plane + p];
    out[ch] = acc / static_cast<Real>(plane);
  }
  return make_result("channel_mean", {c}, std::move(out), {a},
                     [a, c, plane](std::span<const Real> g) {
                       Real* ga = grad_target(a);
                       for (int ch = 0; ch < c; ++ch) {
                         const Real d = g[ch] / static_cast<Real>(plane);
                         Real* row = ga + static_cast<std::size_t>(ch) * plane;
                         for (int p = 0; p < plane; ++p) row[p] += d;
                       }
                     });
}

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride,
              int padding) {
  const ConvGeometry g = conv_geometry(input, weight, stride, padding, false);
  check_bias(bias, g.c_out, "conv2d");
  const int in_plane = g.h * g.w;
  const int out_plane = g.h_out * g.w_out;
  const int wk_size = g.k * g.k;
  std::vector<Real> out(static_cast<std::size_t>(g.c_out) * out_plane, Real(0));
  auto x = input.data();
  auto wt = weight.data();
  for (int o = 0; o < g.c_out; ++o) {
    Real* out_o = out.data() + static_cast<std::size_t>(o) * out_plane;
    if (bias.defined()) std::fill(out_o, out_o + out_plane, bias.data()[o]);
    for (int c = 0; c < g.c_in; ++c) {
      conv_plane_forward(g, x.data() + static_cast<std::size_t>(c) * in_plane,
                         wt.data() + (static_cast<std::size_t>(o) * g.c_in + c) * wk_size, out_o);
    }
  }
  std::vector<Tensor> inputs{input, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_result(
      "conv2d", {g.c_out, g.h_out, g.w_out}, std::move(out), std::move(inputs),
      [input, weight, bias, g, in_plane, out_plane, wk_size](std::span<const Real> gout) {
        Real* gin = grad_target(input);
        Real* gw = grad_target(weight);
        auto x = input.data();
        auto wt = weight.data();
        for (int o = 0; o < g.c_out; ++o) {
          const Real* go = gout.data() + static_cast<std::size_t>(o) * out_plane;
          for (int c = 0; c < g.c_in; ++c) {
            const std::size_t widx = (static_cast<std::size_t>(o) * g.c_in + c) * wk_size;
            conv_plane_backward(g, x.data() + static_cast<std::size_t>(c) * in_plane,
                                wt.data() + widx, go,
                                gin ? gin + static_cast<std::size_t>(c) * in_plane : nullptr,
                                gw ? gw + widx : nullptr);
          }
        }
        if (bias.defined()) bias_backward(bias, gout, g.c_out, out_plane);
      });
}

Tensor depthwise_conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
                        int stride, int padding) {
  const ConvGeometry g = conv_geometry(input, weight, stride, padding, true);
  check_bias(bias, g.c_out, "depthwise_conv2d");
  const int in_plane = g.h * g.w;
  const int out_plane = g.h_out * g.w_out;
  const int wk_size = g.k * g.k;
  std::vector<Real> out(static_cast<std::size_t>(g.c_out) * out_plane, Real(0));
  auto x = input.data();
  auto wt = weight.data();
  for (int c = 0; c < g.c_in; ++c) {
    Real* out_c = out.data() + static_cast<std::size_t>(c) * out_plane;
    if (bias.defined()) std::fill(out_c, out_c + out_plane, bias.data()[c]);
    conv_plane_forward(g, x.data() + static_cast<std::size_t>(c) * in_plane,
                       wt.data() + static_cast<std::size_t>(c) * wk_size, out_c);
  }
  std::vector<Tensor> inputs{input, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_result(
      "depthwise_conv2d", {g.c_out, g.h_out, g.w_out}, std::move(out), std::move(inputs),
      [input, weight, bias, g, in_plane, out_plane, wk_size](std::span<const Real> gout) {
        Real* gin = grad_target(input);
        Real* gw = grad_target(weight);
        auto x = input.data();
        auto wt = weight.data();
        for (int c = 0; c < g.c_in; ++c) {
          const std::size_t widx = static_cast<std::size_t>(c) * wk_size;
          conv_plane_backward(g, x.data() + static_cast<std::size_t>(c) * in_plane,
                              wt.data() + widx,
                              gout.data() + static_cast<std::size_t>(c) * out_plane,
                              gin ? gin + static_cast<std::size_t>(c) * in_plane : nullptr,
                              gw ? gw + widx : nullptr);
        }
        if (bias.defined()) bias_backward(bias, gout, g.c_out, out_plane);
      });
}

namespace {

// Index map shared by pixel_shuffle and its inverse: for each element of the
// shuffled (C, H*s, W*s) layout, the flat index in the (C*s*s, H, W) layout.
std::vector<std::size_t> shuffle_index(int c, int h, int w, int s) {
  const int hs = h * s, ws = w * s;
  std::vector<std::size_t> idx(static_cast<std::size_t>(c) * hs * ws);
  std::size_t k = 0;
  for (int ch = 0; ch < c; ++ch) {
    for (int oy = 0; oy < hs; ++oy) {
      const int y = oy / s, a = oy % s;
      for (int ox = 0; ox < ws; ++ox) {
        const int x = ox / s, b = ox % s;
        const int src_c = ch * s * s + a * s + b;
        idx[k++] = (static_cast<std::size_t>(src_c) * h + y) * w + x;
      }
    }
  }
  return idx;
}

}  // namespace

Tensor pixel_shuffle(const Tensor& input, int s) {
  require_chw(input, "pixel_shuffle");
  if (s <= 0) throw ConfigError("pixel_shuffle: factor must be positive");
  const int cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  if (cin % (s * s) != 0) {
    throw ConfigError("pixel_shuffle: " + std::to_string(cin) + " channels not divisible by " +
                      std::to_string(s * s));
  }
  const int c = cin / (s * s);
  auto idx = shuffle_index(c, h, w, s);
  auto x = input.data();
  std::vector<Real> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = x[idx[i]];
  return make_result("pixel_shuffle", {c, h * s, w * s}, std::move(out), {input},
                     [input, idx = std::move(idx)](std::span<const Real> g) {
                       Real* gi = grad_target(input);
                       for (std::size_t i = 0; i < idx.size(); ++i) gi[idx[i]] += g[i];
                     });
}

Tensor pixel_unshuffle(const Tensor& input, int s) {
  require_chw(input, "pixel_unshuffle");
  if (s <= 0) throw ConfigError("pixel_unshuffle: factor must be positive");
  const int c = input.dim(0), hs = input.dim(1), ws = input.dim(2);
  if (hs % s != 0 || ws % s != 0) {
    throw ConfigError("pixel_unshuffle: spatial size " + shape_str(input.shape()) +
                      " not divisible by " + std::to_string(s));
  }
  auto idx = shuffle_index(c, hs / s, ws / s, s);
  auto x = input.data();
  std::vector<Real> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[idx[i]] = x[i];
  return make_result("pixel_unshuffle", {c * s * s, hs / s, ws / s}, std::move(out), {input},
                     [input, idx = std::move(idx)](std::span<const Real> g) {
                       Real* gi = grad_target(input);
                       for (std::size_t i = 0; i < idx.size(); ++i) gi[i] += g[idx[i]];
                     });
}

Tensor layer_norm_channels(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                           Real eps) {
  require_chw(input, "layer_norm_channels");
  const int c = input.dim(0);
  const int plane = input.dim(1) * input.dim(2);
  if (gamma.numel() != static_cast<std::size_t>(c) || beta.numel() != static_cast<std::size_t>(c)) {
    throw ConfigError("layer_norm_channels: gamma/beta must have " + std::to_string(c) +
                      " elements");
  }
  auto x = input.data();
  auto ga = gamma.data();
  auto be = beta.data();
  std::vector<Real> xhat(x.size());
  std::vector<Real> inv_std(plane);
  std::vector<Real> out(x.size());
  for (int p = 0; p < plane; ++p) {
    Real mu = 0;
    for (int ch = 0; ch < c; ++ch) mu += x[static_cast<std::size_t>(ch) * plane + p];
    mu /= static_cast<Real>(c);
    Real var = 0;
    for (int ch = 0; ch < c; ++ch) {
      const Real d = x[static_cast<std::size_t>(ch) * plane + p] - mu;
      var += d * d;
    }
    var /= static_cast<Real>(c);
    const Real is = Real(1) / std::sqrt(var + eps);
    inv_std[p] = is;
    for (int ch = 0; ch < c; ++ch) {
      const std::size_t i = static_cast<std::size_t>(ch) * plane + p;
      xhat[i] = (x[i] - mu) * is;
      out[i] = ga[ch] * xhat[i] + be[ch];
    }
  }
  return make_result(
      "layer_norm_channels", input.shape(), std::move(out), {input, gamma, beta},
      [input, gamma, beta, c, plane, xhat = std::move(xhat),
       inv_std = std::move(inv_std)](std::span<const Real> g) {
        auto ga = gamma.data();
        Real* gx = grad_target(input);
        Real* gg = grad_target(gamma);
        Real* gb = grad_target(beta);
        const Real inv_c = Real(1) / static_cast<Real>(c);
        for (int p = 0; p < plane; ++p) {
          Real mean_g = 0, mean_gx = 0;
          for (int ch = 0; ch < c; ++ch) {
            const std::size_t i = static_cast<std::size_t>(ch) * plane + p;
            const Real gh = g[i] * ga[ch];
            mean_g += gh;
            mean_gx += gh * xhat[i];
          }
          mean_g *= inv_c;
          mean_gx *= inv_c;
          for (int ch = 0; ch < c; ++ch) {
            const std::size_t i = static_cast<std::size_t>(ch) * plane + p;
            if (gx) gx[i] += inv_std[p] * (g[i] * ga[ch] - mean_g - xhat[i] * mean_gx);
          }
        }
        if (gg || gb) {
          for (int ch = 0; ch < c; ++ch) {
            Real acc_g = 0, acc_b = 0;
            for (int p = 0; p < plane; ++p) {
              const std::size_t i = static_cast<std::size_t>(ch) * plane + p;
              acc_g += g[i] * xhat[i];
              acc_b += g[i];
            }
            if (gg) gg[ch] += acc_g;
            if (gb) gb[ch] += acc_b;
          }
        }
      });
}

Tensor avg_pool2(const Tensor& input) {
  require_chw(input, "avg_pool2");
  const int c = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int ho = h / 2, wo = w / 2;
  if (ho == 0 || wo == 0) throw ConfigError("avg_pool2: input " + shape_str(input.shape()) + " too small");
  auto x = input.data();
  std::vector<Real> out(static_cast<std::size_t>(c) * ho * wo);
  for (int ch = 0; ch < c; ++ch) {
    const Real* src = x.data() + static_cast<std::size_t>(ch) * h * w;
    Real* dst = out.data() + static_cast<std::size_t>(ch) * ho * wo;
    for (int y = 0; y < ho; ++y) {
      for (int xx = 0; xx < wo; ++xx) {
        const Real* p = src + (2 * y) * w + 2 * xx;
        dst[y * wo + xx] = Real(0.25) * (p[0] + p[1] + p[w] + p[w + 1]);
      }
    }
  }
  return make_result("avg_pool2", {c, ho, wo}, std::move(out), {input},
                     [input, c, h, w, ho, wo](std::span<const Real> g) {
                       Real* gi = grad_target(input);
                       for (int ch = 0; ch < c; ++ch) {
                         Real* dst = gi + static_cast<std::size_t>(ch) * h * w;
                         const Real* src = g.data() + static_cast<std::size_t>(ch) * ho * wo;
                         for (int y = 0; y < ho; ++y) {
                           for (int xx = 0; xx < wo; ++xx) {
                             const Real d = Real(0.25) * src[y * wo + xx];
                             Real* p = dst + (2 * y) * w + 2 * xx;
                             p[0] += d;
                             p[1] += d;
                             p[w] += d;
                             p[w + 1] += d;
                           }
                         }
                       }
                     });
}

Tensor separable_filter_valid(const Tensor& input, std::span<const double> taps) {
  require_chw(input, "separable_filter_valid");
  const int c = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int k = static_cast<int>(taps.size());
  if (k == 0 || h < k || w < k) {
    throw ConfigError("separable_filter_valid: input " + shape_str(input.shape()) +
                      " smaller than window " + std::to_string(k));
  }
  const int ho = h - k + 1, wo = w - k + 1;
  std::vector<Real> t(taps.begin(), taps.end());
  auto x = input.data();
  std::vector<Real> out(static_cast<std::size_t>(c) * ho * wo, Real(0));
  std::vector<Real> tmp(static_cast<std::size_t>(h) * wo);
  for (int ch = 0; ch < c; ++ch) {
    const Real* src = x.data() + static_cast<std::size_t>(ch) * h * w;
    std::fill(tmp.begin(), tmp.end(), Real(0));
    for (int y = 0; y < h; ++y)
      for (int j = 0; j < k; ++j)
        for (int xx = 0; xx < wo; ++xx) tmp[y * wo + xx] += t[j] * src[y * w + xx + j];
    Real* dst = out.data() + static_cast<std::size_t>(ch) * ho * wo;
    for (int y = 0; y < ho; ++y)
      for (int i = 0; i < k; ++i)
        for (int xx = 0; xx < wo; ++xx) dst[y * wo + xx] += t[i] * tmp[(y + i) * wo + xx];
  }
  return make_result(
      "separable_filter_valid", {c, ho, wo}, std::move(out), {input},
      [input, t = std::move(t), c, h, w, k, ho, wo](std::span<const Real> g) {
        Real* gi = grad_target(input);
        std::vector<Real> gtmp(static_cast<std::size_t>(h) * wo);
        for (int ch = 0; ch < c; ++ch) {
          const Real* go = g.data() + static_cast<std::size_t>(ch) * ho * wo;
          std::fill(gtmp.begin(), gtmp.end(), Real(0));
          for (int y = 0; y < ho; ++y)
            for (int i = 0; i < k; ++i)
              for (int xx = 0; xx < wo; ++xx) gtmp[(y + i) * wo + xx] += t[i] * go[y * wo + xx];
          Real* dst = gi + static_cast<std::size_t>(ch) * h * w;
          for (int y = 0; y < h; ++y)
            for (int j = 0; j < k; ++j)
              for (int xx = 0; xx < wo; ++xx) dst[y * w + xx + j] += t[j] * gtmp[y * wo + xx];
        }
      });
}

}  // namespace mnerv::inline MNERV_PRECISION_NS::ops
