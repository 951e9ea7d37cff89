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

#include "mnerv/model.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "mnerv/error.h"
#include "mnerv/ops.h"

namespace mnerv::inline MNERV_PRECISION_NS {

namespace {

long long product(const std::vector<int>& v) {
  long long p = 1;
  for (int s : v) p *= s;
  return p;
}

int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

long long stem_param_count(const ArchConfig& c) {
  return c.toggles.header_layer ? 0 : conv_param_count(c.embed_channels, c.embed_channels, 3);
}

long long convnext_param_count(long long ch, bool grn) {
  const long long hidden = ConvNeXtBlockParams::kExpansion * ch;
  const long long k = ConvNeXtBlockParams::kDepthwiseKernel;
  return (ch * k * k + ch) + 2 * ch + conv_param_count(ch, hidden, 1) + (grn ? 2 * hidden : 0) +
         conv_param_count(hidden, ch, 1);
}

long long encoder_param_count(const ArchConfig& c, const LayerPlan& layers) {
  long long n = 0;
  long long prev = 3;
  for (auto it = layers.strides.rbegin(); it != layers.strides.rend(); ++it) {
    n += conv_param_count(prev, c.encoder_width, *it);
    n += convnext_param_count(c.encoder_width, c.toggles.grn);
    prev = c.encoder_width;
  }
  return n + conv_param_count(c.encoder_width, c.embed_channels, 1);
}

std::string decoder_label(std::size_t i) { return "dec" + std::to_string(i + 1); }

std::vector<LayerParams> with_fractions(std::vector<LayerParams> rows) {
  long long total = 0;
  for (const auto& r : rows) total += r.params;
  for (auto& r : rows) r.fraction = static_cast<double>(r.params) / static_cast<double>(total);
  return rows;
}

long long count(const std::vector<NamedParam>& params) {
  long long n = 0;
  for (const auto& p : params) n += static_cast<long long>(p.tensor.numel());
  return n;
}

}  // namespace

void ArchConfig::validate() const {
  if (strides.empty()) throw ConfigError("strides must not be empty");
  if (strides.size() != kernels.size()) {
    throw ConfigError("strides and kernels must have equal length (" +
                      std::to_string(strides.size()) + " vs " + std::to_string(kernels.size()) +
                      ")");
  }
  for (int s : strides) {
    if (s < 1) throw ConfigError("strides must be positive");
  }
  for (int k : kernels) {
    if (k < 1 || k % 2 == 0) throw ConfigError("kernels must be odd and positive");
  }
  if (!(attenuation > 1.0)) throw ConfigError("attenuation factor must exceed 1");
  if (min_width < 3) throw ConfigError("min_width must be at least 3");
  if (embed_channels < 1 || embed_height < 1 || embed_width < 1) {
    throw ConfigError("embedding shape must be positive");
  }
  if (target_size < 1) throw ConfigError("target_size must be positive");
  if (encoder_width < 1) throw ConfigError("encoder_width must be positive");
}

long long ArchConfig::scale() const { return product(strides); }

int ArchConfig::frame_height() const { return static_cast<int>(embed_height * scale()); }

int ArchConfig::frame_width() const { return static_cast<int>(embed_width * scale()); }

ArchConfig ArchConfig::tiny() {
  ArchConfig c;
  c.strides = {5, 2, 2};
  c.kernels = {1, 3, 3};
  c.target_size = 80'000;
  return c;
}

std::vector<int> fit_strides(const std::vector<int>& strides, long long total_scale) {
  if (strides.empty() || total_scale < 1) throw ConfigError("fit_strides: invalid arguments");
  std::vector<int> out(strides.size());
  long long remaining = total_scale;
  for (std::size_t i = 0; i < strides.size(); ++i) {
    const long long g = std::gcd(static_cast<long long>(strides[i]), remaining);
    out[i] = static_cast<int>(g);
    remaining /= g;
  }
  while (remaining > 1) {
    long long p = 2;
    while (remaining % p != 0) ++p;
    const std::size_t first = strides.size() > 1 ? 1 : 0;
    std::size_t best = first;
    for (std::size_t i = first; i < out.size(); ++i) {
      const bool best_unit = out[best] == 1;
      if (out[i] > 1 && (best_unit || out[i] < out[best])) best = i;
    }
    out[best] = static_cast<int>(out[best] * p);
    remaining /= p;
  }
  return out;
}

LayerPlan effective_layers(const ArchConfig& config) {
  if (config.toggles.multilayer) return {config.strides, config.kernels};
  return {fit_strides(kHNeRVStrides, config.scale()), kHNeRVKernels};
}

std::vector<int> attenuated_widths(const ArchConfig& config, int c0) {
  const std::size_t n = effective_layers(config).strides.size();
  std::vector<int> w(n);
  w[0] = c0;
  for (std::size_t i = 1; i < n; ++i) {
    const double v = c0 / std::pow(config.attenuation, static_cast<double>(i));
    w[i] = std::max(round_half_up(v), config.min_width);
  }
  return w;
}

long long decoder_param_count(const ArchConfig& config, const std::vector<int>& widths) {
  const LayerPlan layers = effective_layers(config);
  if (widths.size() != layers.strides.size()) {
    throw ConfigError("channel plan has " + std::to_string(widths.size()) + " widths, decoder has " +
                      std::to_string(layers.strides.size()) + " layers");
  }
  long long n = stem_param_count(config);
  long long in = config.embed_channels;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const long long s = layers.strides[i];
    n += conv_param_count(in, widths[i] * s * s, layers.kernels[i]);
    in = widths[i];
  }
  return n + conv_param_count(in, 3, 1);
}

ChannelPlan plan_channels(const ArchConfig& config) {
  config.validate();
  auto size_at = [&](int c0) { return decoder_param_count(config, attenuated_widths(config, c0)); };

  const long long minimum = size_at(config.min_width);
  if (minimum > config.target_size) {
    throw PlanningError("parameter budget " + std::to_string(config.target_size) +
                            " is below the minimum achievable decoder size " +
                            std::to_string(minimum),
                        minimum);
  }
  // Largest C0 that fits: exponential probe, then bisection.
  int lo = config.min_width;
  int hi = lo;
  while (size_at(hi) <= config.target_size) {
    lo = hi;
    hi *= 2;
  }
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    (size_at(mid) <= config.target_size ? lo : hi) = mid;
  }

  std::vector<int> widths = attenuated_widths(config, lo);
  long long size = decoder_param_count(config, widths);
  for (bool grew = true; grew;) {
    grew = false;
    for (std::size_t i = widths.size(); i-- > 0;) {
      if (i > 0 && widths[i] + 1 > widths[i - 1]) continue;
      ++widths[i];
      const long long next = decoder_param_count(config, widths);
      if (next <= config.target_size) {
        size = next;
        grew = true;
        break;
      }
      --widths[i];
    }
  }
  return ChannelPlan{std::move(widths), size};
}

std::vector<NamedParam> Model::encoder_parameters() const {
  std::vector<NamedParam> out;
  for (std::size_t i = 0; i < encoder.size(); ++i) {
    const std::string prefix = "enc" + std::to_string(i + 1);
    out.push_back({prefix + ".down.weight", encoder[i].down_weight});
    out.push_back({prefix + ".down.bias", encoder[i].down_bias});
    encoder[i].block.collect(prefix + ".block", out);
  }
  out.push_back({"enc.embed.weight", embed_weight});
  out.push_back({"enc.embed.bias", embed_bias});
  return out;
}

std::vector<NamedParam> Model::decoder_parameters() const {
  std::vector<NamedParam> out;
  if (stem) {
    out.push_back({"stem.weight", stem->weight});
    out.push_back({"stem.bias", stem->bias});
  }
  for (std::size_t i = 0; i < decoder.size(); ++i) decoder[i].collect(decoder_label(i), out);
  head.collect("head", out);
  return out;
}

std::vector<NamedParam> Model::parameters() const {
  std::vector<NamedParam> out = encoder_parameters();
  for (auto& p : decoder_parameters()) out.push_back(std::move(p));
  return out;
}

long long Model::encoder_size() const { return count(encoder_parameters()); }

long long Model::decoder_size() const { return count(decoder_parameters()); }

Shape Model::embedding_shape() const {
  return {config.embed_channels, config.embed_height, config.embed_width};
}

Model build_model(const ArchConfig& config, const ChannelPlan& plan, std::uint64_t seed) {
  config.validate();
  Model m;
  m.config = config;
  m.plan = plan;
  m.layers = effective_layers(config);
  const std::size_t n = m.layers.strides.size();
  if (plan.widths.size() != n) {
    throw ConfigError("channel plan has " + std::to_string(plan.widths.size()) +
                      " widths but the decoder has " + std::to_string(n) + " layers");
  }
  for (int w : plan.widths) {
    if (w < 1) throw ConfigError("channel plan widths must be positive");
  }
  Rng rng(seed);

  // Encoder mirrors the decoder strides in reverse: kernel == stride.
  int prev = 3;
  for (std::size_t i = 0; i < n; ++i) {
    EncoderStage stage;
    stage.stride = m.layers.strides[n - 1 - i];
    stage.down_weight = init_conv_weight(config.encoder_width, prev, stage.stride, rng);
    stage.down_bias = Tensor::zeros({config.encoder_width}, true);
    stage.block = ConvNeXtBlockParams::init(config.encoder_width, config.toggles.grn, rng);
    m.encoder.push_back(std::move(stage));
    prev = config.encoder_width;
  }
  m.embed_weight = init_conv_weight(config.embed_channels, config.encoder_width, 1, rng);
  m.embed_bias = Tensor::zeros({config.embed_channels}, true);

  if (!config.toggles.header_layer) {
    m.stem = StemParams{init_conv_weight(config.embed_channels, config.embed_channels, 3, rng),
                        Tensor::zeros({config.embed_channels}, true)};
  }
  int in = config.embed_channels;
  for (std::size_t i = 0; i < n; ++i) {
    m.decoder.push_back(MNeRVBlockParams::init(in, plan.widths[i], m.layers.kernels[i],
                                               m.layers.strides[i], rng));
    in = plan.widths[i];
  }
  m.head = OutputHeadParams::init(in, rng);

  if (m.decoder_size() != plan.realized_size) {
    throw ConfigError("channel plan realized size " + std::to_string(plan.realized_size) +
                      " does not match the built decoder (" + std::to_string(m.decoder_size()) +
                      ")");
  }
  return m;
}

Tensor encode(const Model& model, const Tensor& frame) {
  if (frame.rank() != 3 || frame.dim(0) != 3) {
    throw ConfigError("encode: expected a (3,H,W) frame, got " + shape_str(frame.shape()));
  }
  const long long scale = model.config.scale();
  if (frame.dim(1) % scale != 0 || frame.dim(2) % scale != 0) {
    throw ConfigError("encode: frame " + shape_str(frame.shape()) +
                      " is not divisible by the decoder scale " + std::to_string(scale));
  }
  Tensor h = frame;
  for (const EncoderStage& stage : model.encoder) {
    h = ops::conv2d(h, stage.down_weight, stage.down_bias, stage.stride, 0);
    h = convnext_block(h, stage.block);
  }
  return ops::conv2d(h, model.embed_weight, model.embed_bias, 1, 0);
}

Tensor decode(const Model& model, const Tensor& embedding) {
  if (embedding.rank() != 3 || embedding.dim(0) != model.config.embed_channels) {
    throw ConfigError("decode: embedding " + shape_str(embedding.shape()) + " does not have " +
                      std::to_string(model.config.embed_channels) + " channels");
  }
  Tensor h = embedding;
  if (model.stem) h = ops::gelu(ops::conv2d(h, model.stem->weight, model.stem->bias, 1, 1));
  for (const MNeRVBlockParams& block : model.decoder) h = mnerv_block(h, block);
  return output_head(h, model.head);
}

std::vector<LayerParams> analyze_params(const Model& model) {
  std::vector<LayerParams> rows;
  rows.push_back({"encoder", model.encoder_size(), 0});
  if (model.stem) {
    rows.push_back({"stem", static_cast<long long>(model.stem->weight.numel() +
                                                   model.stem->bias.numel()),
                    0});
  }
  for (std::size_t i = 0; i < model.decoder.size(); ++i) {
    rows.push_back({decoder_label(i), model.decoder[i].param_count(), 0});
  }
  rows.push_back({"head", model.head.param_count(), 0});
  return with_fractions(std::move(rows));
}

std::vector<LayerParams> analyze_plan(const ArchConfig& config, const ChannelPlan& plan) {
  const LayerPlan layers = effective_layers(config);
  std::vector<LayerParams> rows;
  rows.push_back({"encoder", encoder_param_count(config, layers), 0});
  if (!config.toggles.header_layer) rows.push_back({"stem", stem_param_count(config), 0});
  long long in = config.embed_channels;
  for (std::size_t i = 0; i < plan.widths.size(); ++i) {
    const long long s = layers.strides[i];
    rows.push_back(
        {decoder_label(i), conv_param_count(in, plan.widths[i] * s * s, layers.kernels[i]), 0});
    in = plan.widths[i];
  }
  rows.push_back({"head", conv_param_count(in, 3, 1), 0});
  return with_fractions(std::move(rows));
}

std::string params_csv(const std::vector<LayerParams>& rows) {
  std::ostringstream os;
  os << "layer,params,fraction\n";
  os << std::setprecision(9);
  for (const auto& r : rows) os << r.label << ',' << r.params << ',' << r.fraction << '\n';
  return os.str();
}

double decoder_layer_cv(const std::vector<LayerParams>& rows) {
  std::vector<double> counts;
  for (const auto& r : rows) {
    if (r.label.rfind("dec", 0) == 0) counts.push_back(static_cast<double>(r.params));
  }
  if (counts.empty()) return 0.0;
  const double mean = std::accumulate(counts.begin(), counts.end(), 0.0) / counts.size();
  double var = 0;
  for (double c : counts) var += (c - mean) * (c - mean);
  var /= counts.size();
  return std::sqrt(var) / mean;
}

}  // namespace mnerv::inline MNERV_PRECISION_NS
