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

#include "mnerv/grad_check.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mnerv/ops.h"
#include "mnerv/random.h"

namespace mnerv::inline MNERV_PRECISION_NS {

GradCheckReport grad_check(const GradCheckFn& fn, std::vector<Tensor> inputs,
                           const GradCheckOptions& options) {
  Rng rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  for (auto& t : inputs) {
    t = Tensor(t.shape(), std::vector<Real>(t.data().begin(), t.data().end()), true);
  }

  Tensor projection;
  auto reduce = [&](const Tensor& out) {
    if (out.numel() == 1) return ops::sum(out);
    if (!projection.defined()) {
      std::vector<Real> w(out.numel());
      for (auto& v : w) v = static_cast<Real>(uniform(rng, -1.0, 1.0));
      projection = Tensor(out.shape(), std::move(w));
    }
    return ops::sum(ops::mul(out, projection));
  };
  auto evaluate = [&] {
    NoGradGuard guard;
    return static_cast<double>(reduce(fn(inputs)).item());
  };

  backward(reduce(fn(inputs)));

  GradCheckReport report;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto& x = inputs[k];
    std::vector<Real> analytic(x.numel(), Real(0));
    if (x.has_grad()) std::copy(x.grad().begin(), x.grad().end(), analytic.begin());
    auto values = x.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const Real saved = values[i];
      values[i] = static_cast<Real>(saved + options.step);
      const double plus = evaluate();
      values[i] = static_cast<Real>(saved - options.step);
      const double minus = evaluate();
      values[i] = saved;
      const double numeric = (plus - minus) / (2 * options.step);
      const double a = analytic[i];
      const double err =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), options.floor});
      const double score = std::isnan(err) ? INFINITY : err;
      if (report.checked++ == 0 || score > report.max_error) {
        report.max_error = score;
        std::ostringstream os;
        os << "input " << k << " [" << i << "]: analytic=" << a << " numeric=" << numeric;
        report.worst = os.str();
      }
    }
  }
  report.passed = report.max_error <= options.tolerance;
  return report;
}

GradCheckReport grad_check(const GradCheckFn& fn, const std::vector<Shape>& shapes,
                           const GradCheckOptions& options) {
  Rng rng(options.seed);
  std::vector<Tensor> inputs;
  for (const auto& s : shapes) {
    std::vector<Real> v(shape_numel(s));
    for (auto& x : v) x = static_cast<Real>(uniform(rng, options.low, options.high));
    inputs.emplace_back(s, std::move(v));
  }
  return grad_check(fn, std::move(inputs), options);
}

}  // namespace mnerv::inline MNERV_PRECISION_NS
