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

#include "mnerv/optim.h"

#include <cmath>
#include <string>

#include "mnerv/error.h"

namespace mnerv::inline MNERV_PRECISION_NS {

void AdamConfig::validate() const {
  if (!(beta1 > 0 && beta1 < 1)) throw ConfigError("beta1 must lie in (0,1), got " + std::to_string(beta1));
  if (!(beta2 > 0 && beta2 < 1)) throw ConfigError("beta2 must lie in (0,1), got " + std::to_string(beta2));
  if (!(eps > 0)) throw ConfigError("eps must be positive");
}

void adam_step(const std::vector<Tensor>& params, AdamState& state, double lr,
               const AdamConfig& config) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.numel(), Real(0));
      state.v.emplace_back(p.numel(), Real(0));
    }
  }
  if (state.m.size() != params.size()) {
    throw UsageError("adam_step: state holds " + std::to_string(state.m.size()) +
                     " tensors but " + std::to_string(params.size()) + " were given");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  const Real b1 = static_cast<Real>(config.beta1), b2 = static_cast<Real>(config.beta2);

  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor p = params[k];
    auto& m = state.m[k];
    auto& v = state.v[k];
    if (m.size() != p.numel()) throw UsageError("adam_step: moment size mismatch");
    auto w = p.mutable_data();
    const bool has_grad = p.has_grad();
    std::span<const Real> g = has_grad ? p.grad() : std::span<const Real>{};
    for (std::size_t i = 0; i < w.size(); ++i) {
      const Real gi = has_grad ? g[i] : Real(0);
      m[i] = b1 * m[i] + (Real(1) - b1) * gi;
      v[i] = b2 * v[i] + (Real(1) - b2) * gi * gi;
      const double m_hat = static_cast<double>(m[i]) / correction1;
      const double v_hat = static_cast<double>(v[i]) / correction2;
      w[i] = static_cast<Real>(static_cast<double>(w[i]) - lr * m_hat / (std::sqrt(v_hat) + config.eps));
    }
  }
}

}  // namespace mnerv::inline MNERV_PRECISION_NS
