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

#include "mnerv/blocks.h"

#include <cmath>

#include "mnerv/error.h"
#include "mnerv/ops.h"

namespace mnerv::inline MNERV_PRECISION_NS {

long long conv_param_count(long long c_in, long long c_out, long long k) {
  return c_in * c_out * k * k + c_out;
}

Tensor init_conv_weight(int c_out, int c_in, int k, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(c_in) * k * k);
  std::vector<Real> w(static_cast<std::size_t>(c_out) * c_in * k * k);
  for (Real& v : w) v = static_cast<Real>(uniform(rng, -bound, bound));
  return Tensor({c_out, c_in, k, k}, std::move(w), true);
}

namespace {

Tensor zeros_param(int n) { return Tensor::zeros({n}, true); }

void push(std::vector<NamedParam>& out, const std::string& prefix, const char* name,
          const Tensor& t) {
  out.push_back({prefix + "." + name, t});
}

}  // namespace

GrnParams GrnParams::identity(int channels) {
  return GrnParams{zeros_param(channels), zeros_param(channels)};
}

Tensor grn(const Tensor& input, const GrnParams& params) {
  if (input.rank() != 3) throw ConfigError("grn: expected (C,H,W), got " + shape_str(input.shape()));
  const int c = input.dim(0);
  const int plane = input.dim(1) * input.dim(2);
  if (params.gamma.numel() != static_cast<std::size_t>(c) ||
      params.beta.numel() != static_cast<std::size_t>(c)) {
    throw ConfigError("grn: gamma/beta length must equal channel count " + std::to_string(c));
  }
  const Real eps = params.eps;
  auto x = input.data();
  auto ga = params.gamma.data();
  auto be = params.beta.data();

  std::vector<Real> norm(c);
  Real norm_mean = 0;
  for (int ch = 0; ch < c; ++ch) {
    Real ss = 0;
    const Real* row = x.data() + static_cast<std::size_t>(ch) * plane;
    for (int p = 0; p < plane; ++p) ss += row[p] * row[p];
    norm[ch] = std::sqrt(ss + eps);
    norm_mean += norm[ch];
  }
  norm_mean /= static_cast<Real>(c);
  const Real denom = norm_mean + eps;
  std::vector<Real> scale(c);
  for (int ch = 0; ch < c; ++ch) scale[ch] = norm[ch] / denom;

  std::vector<Real> out(x.size());
  for (int ch = 0; ch < c; ++ch) {
    const std::size_t base = static_cast<std::size_t>(ch) * plane;
    for (int p = 0; p < plane; ++p) {
      const Real v = x[base + p];
      out[base + p] = ga[ch] * (v * scale[ch]) + be[ch] + v;
    }
  }

  const Tensor gamma = params.gamma, beta = params.beta;
  return make_result(
      "grn", input.shape(), std::move(out), {input, gamma, beta},
      [input, gamma, beta, c, plane, denom, norm = std::move(norm),
       scale = std::move(scale)](std::span<const Real> g) {
        auto x = input.data();
        auto ga = gamma.data();
        Real* gx = grad_target(input);
        Real* gg = grad_target(gamma);
        Real* gb = grad_target(beta);
        // a[c] = dL/dN[c]
        std::vector<Real> a(c);
        for (int ch = 0; ch < c; ++ch) {
          const std::size_t base = static_cast<std::size_t>(ch) * plane;
          Real gxs = 0, gs = 0;
          for (int p = 0; p < plane; ++p) {
            gxs += g[base + p] * x[base + p];
            gs += g[base + p];
          }
          a[ch] = ga[ch] * gxs;
          if (gg) gg[ch] += gxs * scale[ch];
          if (gb) gb[ch] += gs;
        }
        if (!gx) return;
        Real cross = 0;
        for (int ch = 0; ch < c; ++ch) cross += a[ch] * norm[ch];
        const Real inv_c = Real(1) / static_cast<Real>(c);
        for (int ch = 0; ch < c; ++ch) {
          const Real d_norm = a[ch] / denom - cross * inv_c / (denom * denom);
          const Real k = d_norm / norm[ch];
          const Real direct = ga[ch] * scale[ch] + Real(1);
          const std::size_t base = static_cast<std::size_t>(ch) * plane;
          for (int p = 0; p < plane; ++p) gx[base + p] += g[base + p] * direct + k * x[base + p];
        }
      });
}

MNeRVBlockParams MNeRVBlockParams::init(int c_in, int c_out, int kernel, int upscale, Rng& rng) {
  if (kernel < 1 || kernel % 2 == 0) {
    throw ConfigError("mnerv block kernel must be odd and positive, got " + std::to_string(kernel));
  }
  if (upscale < 1) throw ConfigError("mnerv block upscale must be positive");
  const int eff = c_out * upscale * upscale;
  return MNeRVBlockParams{init_conv_weight(eff, c_in, kernel, rng), zeros_param(eff), upscale,
                          kernel};
}

long long MNeRVBlockParams::param_count() const {
  return static_cast<long long>(weight.numel() + bias.numel());
}

void MNeRVBlockParams::collect(const std::string& prefix, std::vector<NamedParam>& out) const {
  push(out, prefix, "weight", weight);
  push(out, prefix, "bias", bias);
}

Tensor mnerv_block(const Tensor& input, const MNeRVBlockParams& params) {
  Tensor y = ops::conv2d(input, params.weight, params.bias, 1, params.kernel / 2);
  return ops::gelu(ops::pixel_shuffle(y, params.upscale));
}

ConvNeXtBlockParams ConvNeXtBlockParams::init(int channels, bool with_grn, Rng& rng) {
  ConvNeXtBlockParams p;
  const int k = kDepthwiseKernel;
  const int hidden = kExpansion * channels;
  p.dw_weight = init_conv_weight(channels, 1, k, rng);
  p.dw_bias = zeros_param(channels);
  p.ln_gamma = Tensor::full({channels}, Real(1), true);
  p.ln_beta = zeros_param(channels);
  p.expand_weight = init_conv_weight(hidden, channels, 1, rng);
  p.expand_bias = zeros_param(hidden);
  if (with_grn) p.grn = GrnParams::identity(hidden);
  p.project_weight = init_conv_weight(channels, hidden, 1, rng);
  p.project_bias = zeros_param(channels);
  return p;
}

long long ConvNeXtBlockParams::param_count() const {
  std::vector<NamedParam> all;
  collect("", all);
  long long n = 0;
  for (const auto& p : all) n += static_cast<long long>(p.tensor.numel());
  return n;
}

void ConvNeXtBlockParams::collect(const std::string& prefix, std::vector<NamedParam>& out) const {
  push(out, prefix, "dw.weight", dw_weight);
  push(out, prefix, "dw.bias", dw_bias);
  push(out, prefix, "ln.gamma", ln_gamma);
  push(out, prefix, "ln.beta", ln_beta);
  push(out, prefix, "expand.weight", expand_weight);
  push(out, prefix, "expand.bias", expand_bias);
  if (grn) {
    push(out, prefix, "grn.gamma", grn->gamma);
    push(out, prefix, "grn.beta", grn->beta);
  }
  push(out, prefix, "project.weight", project_weight);
  push(out, prefix, "project.bias", project_bias);
}

Tensor convnext_block(const Tensor& input, const ConvNeXtBlockParams& p) {
  const int k = p.dw_weight.dim(2);
  Tensor h = ops::depthwise_conv2d(input, p.dw_weight, p.dw_bias, 1, k / 2);
  h = ops::layer_norm_channels(h, p.ln_gamma, p.ln_beta, static_cast<Real>(1e-6));
  h = ops::gelu(ops::conv2d(h, p.expand_weight, p.expand_bias, 1, 0));
  if (p.grn) h = grn(h, *p.grn);
  h = ops::conv2d(h, p.project_weight, p.project_bias, 1, 0);
  return ops::add(input, h);
}

OutputHeadParams OutputHeadParams::init(int channels, Rng& rng) {
  return OutputHeadParams{init_conv_weight(3, channels, 1, rng), zeros_param(3)};
}

long long OutputHeadParams::param_count() const {
  return static_cast<long long>(weight.numel() + bias.numel());
}

void OutputHeadParams::collect(const std::string& prefix, std::vector<NamedParam>& out) const {
  push(out, prefix, "weight", weight);
  push(out, prefix, "bias", bias);
}

Tensor output_head(const Tensor& input, const OutputHeadParams& params) {
  return ops::sigmoid(ops::conv2d(input, params.weight, params.bias, 1, 0));
}

}  // namespace mnerv::inline MNERV_PRECISION_NS
