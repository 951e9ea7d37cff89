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

#include "mnerv/losses.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "mnerv/error.h"
#include "mnerv/ops.h"

namespace mnerv::inline MNERV_PRECISION_NS {

namespace {

const std::vector<double>& gaussian_taps() {
  static const std::vector<double> taps = [] {
    std::vector<double> t(kSsimWindow);
    double total = 0;
    for (int i = 0; i < kSsimWindow; ++i) {
      const double d = i - kSsimWindow / 2;
      t[i] = std::exp(-d * d / (2 * kSsimSigma * kSsimSigma));
      total += t[i];
    }
    for (double& v : t) v /= total;
    return t;
  }();
  return taps;
}

struct SsimMaps {
  Tensor ssim;  // (C, H-10, W-10)
  Tensor cs;
};

SsimMaps ssim_maps(const Tensor& x, const Tensor& y) {
  const auto& taps = gaussian_taps();
  const Real c1 = static_cast<Real>(kSsimK1 * kSsimK1);
  const Real c2 = static_cast<Real>(kSsimK2 * kSsimK2);
  auto filt = [&](const Tensor& t) { return ops::separable_filter_valid(t, taps); };
  Tensor mu_x = filt(x), mu_y = filt(y);
  Tensor mu_xx = ops::mul(mu_x, mu_x), mu_yy = ops::mul(mu_y, mu_y), mu_xy = ops::mul(mu_x, mu_y);
  Tensor s_xx = ops::sub(filt(ops::mul(x, x)), mu_xx);
  Tensor s_yy = ops::sub(filt(ops::mul(y, y)), mu_yy);
  Tensor s_xy = ops::sub(filt(ops::mul(x, y)), mu_xy);
  Tensor cs = ops::div(ops::add_scalar(ops::mul_scalar(s_xy, 2), c2),
                       ops::add_scalar(ops::add(s_xx, s_yy), c2));
  Tensor lum = ops::div(ops::add_scalar(ops::mul_scalar(mu_xy, 2), c1),
                        ops::add_scalar(ops::add(mu_xx, mu_yy), c1));
  return {ops::mul(lum, cs), cs};
}

void require_same(const Tensor& pred, const Tensor& target, const char* what) {
  if (pred.shape() != target.shape()) {
    throw UsageError(std::string(what) + ": shape mismatch " + shape_str(pred.shape()) + " vs " +
                     shape_str(target.shape()));
  }
  if (pred.rank() != 3) {
    throw UsageError(std::string(what) + ": expected (C,H,W) tensors, got " +
                     shape_str(pred.shape()));
  }
}

Tensor smooth_l1_elementwise(const Tensor& d, Real beta) {
  auto x = d.data();
  std::vector<Real> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Real a = std::abs(x[i]);
    out[i] = a < beta ? Real(0.5) * x[i] * x[i] / beta : a - Real(0.5) * beta;
  }
  return make_result("smooth_l1", d.shape(), std::move(out), {d},
                     [d, beta](std::span<const Real> g) {
                       Real* gd = grad_target(d);
                       auto x = d.data();
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         const Real dv = std::abs(x[i]) < beta
                                             ? x[i] / beta
                                             : (x[i] > 0 ? Real(1) : Real(-1));
                         gd[i] += g[i] * dv;
                       }
                     });
}

// Mean of an elementwise term, over all entries or over mask == 1 entries.
Tensor reduce_term(const Tensor& elementwise, double mask_count) {
  if (mask_count <= 0) return ops::mean(elementwise);
  return ops::mul_scalar(ops::sum(elementwise), static_cast<Real>(1.0 / mask_count));
}

Tensor term(LossKind kind, const Tensor& pred, const Tensor& target, double mask_count) {
  switch (kind) {
    case LossKind::kL1:
      return reduce_term(ops::abs(ops::sub(pred, target)), mask_count);
    case LossKind::kL2:
      return reduce_term(ops::square(ops::sub(pred, target)), mask_count);
    case LossKind::kSmoothL1:
      return reduce_term(smooth_l1_elementwise(ops::sub(pred, target), Real(1)), mask_count);
    case LossKind::kSsim:
      return ops::add_scalar(ops::mul_scalar(ssim(pred, target), Real(-1)), Real(1));
    case LossKind::kMsSsim: {
      const int scales = std::min(5, max_ms_ssim_scales(pred.dim(1), pred.dim(2)));
      return ops::add_scalar(ops::mul_scalar(ms_ssim(pred, target, scales), Real(-1)), Real(1));
    }
    case LossKind::kWeightedPair:
      break;
  }
  throw UsageError("weighted pair cannot be nested");
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

LossKind parse_kind(const std::string& raw) {
  const std::string s = lower(raw);
  if (s == "l1") return LossKind::kL1;
  if (s == "l2" || s == "mse") return LossKind::kL2;
  if (s == "sml1" || s == "smooth_l1") return LossKind::kSmoothL1;
  if (s == "ssim" || s == "s") return LossKind::kSsim;
  if (s == "ms_ssim" || s == "ms" || s == "msssim") return LossKind::kMsSsim;
  throw UsageError("unknown loss term '" + raw + "'");
}

std::string short_name(LossKind k) {
  switch (k) {
    case LossKind::kL1: return "L1";
    case LossKind::kL2: return "L2";
    case LossKind::kSmoothL1: return "SML1";
    case LossKind::kSsim: return "S";
    case LossKind::kMsSsim: return "MS";
    case LossKind::kWeightedPair: return "pair";
  }
  return "?";
}

}  // namespace

std::string loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::kL1: return "l1";
    case LossKind::kL2: return "l2";
    case LossKind::kSmoothL1: return "sml1";
    case LossKind::kSsim: return "ssim";
    case LossKind::kMsSsim: return "ms_ssim";
    case LossKind::kWeightedPair: return "pair";
  }
  return "?";
}

LossConfig LossConfig::single(LossKind kind) {
  LossConfig c;
  c.kind = kind;
  c.alpha = 1.0;
  c.first = kind;
  return c;
}

LossConfig LossConfig::pair(LossKind first, LossKind second, double alpha) {
  LossConfig c;
  c.kind = LossKind::kWeightedPair;
  c.first = first;
  c.second = second;
  c.alpha = alpha;
  c.validate();
  return c;
}

void LossConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("loss alpha must lie in [0,1]");
  if (kind == LossKind::kWeightedPair) {
    if (first == second) throw UsageError("weighted pair members must differ");
    if (first == LossKind::kWeightedPair || second == LossKind::kWeightedPair) {
      throw UsageError("weighted pair members must be single terms");
    }
  }
}

std::string LossConfig::label() const {
  if (kind != LossKind::kWeightedPair) return short_name(kind);
  std::ostringstream os;
  os << alpha << '*' << short_name(first) << '+' << (1.0 - alpha) << '*' << short_name(second);
  return os.str();
}

LossConfig parse_loss(const std::string& text, double alpha) {
  const auto plus = text.find('+');
  if (plus == std::string::npos) return LossConfig::single(parse_kind(text));
  std::string a = text.substr(0, plus), b = text.substr(plus + 1);
  auto split_weight = [](std::string& s, double& w) {
    const auto star = s.find('*');
    if (star == std::string::npos) return false;
    try {
      w = std::stod(s.substr(0, star));
    } catch (const std::exception&) {
      throw UsageError("bad loss weight in '" + s + "'");
    }
    s = s.substr(star + 1);
    return true;
  };
  double wa = alpha, wb = 1.0 - alpha;
  const bool ha = split_weight(a, wa);
  const bool hb = split_weight(b, wb);
  if (ha != hb) throw UsageError("loss '" + text + "': weight both terms or neither");
  if (ha && std::abs(wa + wb - 1.0) > 1e-9) {
    throw UsageError("loss '" + text + "': weights must sum to 1");
  }
  return LossConfig::pair(parse_kind(a), parse_kind(b), wa);
}

std::vector<std::pair<std::string, LossConfig>> loss_ablation_grid() {
  using K = LossKind;
  auto p = [](K a, K b, double w) { return LossConfig::pair(a, b, w); };
  return {
      {"0.7*L1+0.3*SSIM", p(K::kL1, K::kSsim, 0.7)}, {"SML1", LossConfig::single(K::kSmoothL1)},
      {"L1", LossConfig::single(K::kL1)},            {"0.5*L1+0.5*S", p(K::kL1, K::kSsim, 0.5)},
      {"0.7*L2+0.3*S", p(K::kL2, K::kSsim, 0.7)},    {"0.7*L2+0.3*L1", p(K::kL2, K::kL1, 0.7)},
      {"0.5*L2+0.5*L1", p(K::kL2, K::kL1, 0.5)},     {"0.9*L1+0.1*S", p(K::kL1, K::kSsim, 0.9)},
      {"0.5*L2+0.5*S", p(K::kL2, K::kSsim, 0.5)},    {"0.3*L1+0.7*S", p(K::kL1, K::kSsim, 0.3)},
      {"0.3*L2+0.7*S", p(K::kL2, K::kSsim, 0.3)},    {"0.6*L2+0.4*MS", p(K::kL2, K::kMsSsim, 0.6)},
      {"0.9*L1+0.1*MS", p(K::kL1, K::kMsSsim, 0.9)}, {"0.8*L1+0.2*MS", p(K::kL1, K::kMsSsim, 0.8)},
      {"0.4*L2+0.6*MS", p(K::kL2, K::kMsSsim, 0.4)}, {"0.7*L1+0.3*MS", p(K::kL1, K::kMsSsim, 0.7)},
  };
}

Tensor loss(const Tensor& pred, const Tensor& target, const LossConfig& config,
            const Tensor* mask) {
  require_same(pred, target, "loss");
  config.validate();
  Tensor p = pred, t = target;
  double mask_count = 0;
  if (mask) {
    if (mask->shape() != pred.shape()) {
      throw UsageError("loss: mask shape " + shape_str(mask->shape()) + " does not match " +
                       shape_str(pred.shape()));
    }
    for (Real v : mask->data()) mask_count += v;
    if (mask_count <= 0) throw UsageError("loss: mask selects no pixels");
    p = ops::mul(pred, *mask);
    t = ops::mul(target, *mask);
  }
  if (config.kind != LossKind::kWeightedPair) return term(config.kind, p, t, mask_count);
  const Real a = static_cast<Real>(config.alpha);
  return ops::add(ops::mul_scalar(term(config.first, p, t, mask_count), a),
                  ops::mul_scalar(term(config.second, p, t, mask_count), Real(1) - a));
}

Tensor l1_loss(const Tensor& pred, const Tensor& target) {
  require_same(pred, target, "l1_loss");
  return term(LossKind::kL1, pred, target, 0);
}

Tensor l2_loss(const Tensor& pred, const Tensor& target) {
  require_same(pred, target, "l2_loss");
  return term(LossKind::kL2, pred, target, 0);
}

Tensor smooth_l1(const Tensor& pred, const Tensor& target, Real beta) {
  require_same(pred, target, "smooth_l1");
  return ops::mean(smooth_l1_elementwise(ops::sub(pred, target), beta));
}

int max_ms_ssim_scales(int height, int width) {
  const int m = std::min(height, width);
  int scales = 0;
  while (scales < 5 && m >= kSsimWindow * (1 << scales)) ++scales;
  return scales;
}

Tensor ssim(const Tensor& pred, const Tensor& target) {
  require_same(pred, target, "ssim");
  if (max_ms_ssim_scales(pred.dim(1), pred.dim(2)) < 1) {
    throw UsageError("ssim: image " + shape_str(pred.shape()) + " smaller than the " +
                     std::to_string(kSsimWindow) + "x" + std::to_string(kSsimWindow) + " window");
  }
  return ops::mean(ssim_maps(pred, target).ssim);
}

Tensor ms_ssim(const Tensor& pred, const Tensor& target, int scales) {
  require_same(pred, target, "ms_ssim");
  const int feasible = max_ms_ssim_scales(pred.dim(1), pred.dim(2));
  if (scales < 1 || scales > 5 || scales > feasible) {
    throw UsageError("ms_ssim: " + std::to_string(scales) + " scales requested for image " +
                     shape_str(pred.shape()) + "; at most " + std::to_string(feasible) +
                     " scales are feasible");
  }
  double wsum = 0;
  for (int i = 0; i < scales; ++i) wsum += kMsSsimWeights[i];

  Tensor x = pred, y = target;
  Tensor combined;
  for (int s = 0; s < scales; ++s) {
    SsimMaps maps = ssim_maps(x, y);
    const bool last = s == scales - 1;
    Tensor v = ops::relu(ops::channel_mean(last ? maps.ssim : maps.cs));
    Tensor weighted = ops::pow_scalar(v, static_cast<Real>(kMsSsimWeights[s] / wsum));
    combined = combined.defined() ? ops::mul(combined, weighted) : weighted;
    if (!last) {
      x = ops::avg_pool2(x);
      y = ops::avg_pool2(y);
    }
  }
  return ops::mean(combined);
}

double ms_ssim_value(const Tensor& pred, const Tensor& target) {
  NoGradGuard no_grad;
  const int scales = std::min(5, max_ms_ssim_scales(pred.dim(1), pred.dim(2)));
  const double v = ms_ssim(pred, target, scales).item();
  return std::clamp(v, 0.0, 1.0);
}

double psnr_from_mse(double mse) {
  if (mse <= 0) return kPsnrCap;
  return -10.0 * std::log10(mse);
}

double psnr(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape()) throw UsageError("psnr: shape mismatch");
  auto a = pred.data(), b = target.data();
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return psnr_from_mse(acc / static_cast<double>(a.size()));
}

namespace {

// Mask value for element (c, y, x) given a (3,H,W) or (1,H,W) mask.
Real mask_at(const Tensor& mask, int c, int y, int x) {
  const int mc = mask.dim(0) == 1 ? 0 : c;
  return mask.data()[(static_cast<std::size_t>(mc) * mask.dim(1) + y) * mask.dim(2) + x];
}

void require_mask(const Tensor& pred, const Tensor& mask) {
  if (mask.rank() != 3 || (mask.dim(0) != 1 && mask.dim(0) != pred.dim(0)) ||
      mask.dim(1) != pred.dim(1) || mask.dim(2) != pred.dim(2)) {
    throw UsageError("mask shape " + shape_str(mask.shape()) + " incompatible with " +
                     shape_str(pred.shape()));
  }
}

}  // namespace

double masked_psnr(const Tensor& pred, const Tensor& target, const Tensor& mask, Real select) {
  require_same(pred, target, "masked_psnr");
  require_mask(pred, mask);
  const int c = pred.dim(0), h = pred.dim(1), w = pred.dim(2);
  auto a = pred.data(), b = target.data();
  double acc = 0;
  std::size_t n = 0;
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (mask_at(mask, ch, y, x) != select) continue;
        const std::size_t i = (static_cast<std::size_t>(ch) * h + y) * w + x;
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
        ++n;
      }
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  return psnr_from_mse(acc / static_cast<double>(n));
}

double masked_ssim(const Tensor& pred, const Tensor& target, const Tensor& mask, Real select) {
  require_same(pred, target, "masked_ssim");
  require_mask(pred, mask);
  NoGradGuard no_grad;
  const Tensor map = ssim_maps(pred, target).ssim;
  const int c = map.dim(0), h = map.dim(1), w = map.dim(2);
  const int half = kSsimWindow / 2;
  double acc = 0;
  std::size_t n = 0;
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (mask_at(mask, ch, y + half, x + half) != select) continue;
        acc += map.data()[(static_cast<std::size_t>(ch) * h + y) * w + x];
        ++n;
      }
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  return acc / static_cast<double>(n);
}

void MetricReport::add(double frame_psnr, double frame_ms_ssim) {
  psnr.push_back(frame_psnr);
  ms_ssim.push_back(std::clamp(frame_ms_ssim, 0.0, 1.0));
  double sp = 0, sm = 0;
  for (std::size_t i = 0; i < psnr.size(); ++i) {
    sp += psnr[i];
    sm += ms_ssim[i];
  }
  mean_psnr = sp / static_cast<double>(psnr.size());
  mean_ms_ssim = sm / static_cast<double>(ms_ssim.size());
}

std::string MetricReport::csv() const {
  std::ostringstream os;
  os << "frame,psnr,ms_ssim\n" << std::setprecision(10);
  for (std::size_t i = 0; i < psnr.size(); ++i) os << i << ',' << psnr[i] << ',' << ms_ssim[i] << '\n';
  os << "mean," << mean_psnr << ',' << mean_ms_ssim << '\n';
  return os.str();
}

MetricReport evaluate_frames(const std::vector<Tensor>& pred, const std::vector<Tensor>& target) {
  if (pred.size() != target.size()) throw UsageError("evaluate_frames: frame count mismatch");
  MetricReport report;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    report.add(psnr(pred[i], target[i]), ms_ssim_value(pred[i], target[i]));
  }
  return report;
}

}  // namespace mnerv::inline MNERV_PRECISION_NS
