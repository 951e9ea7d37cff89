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

#pragma once

#include <vector>

#include "mnerv/tensor.h"

namespace mnerv::inline MNERV_PRECISION_NS {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

// First/second moments per parameter tensor plus the update count.
struct AdamState {
  long long step = 0;
  std::vector<std::vector<Real>> m;
  std::vector<std::vector<Real>> v;
};

/// One bias-corrected Adam update, in place, on every tensor in `params`
/// from its accumulated gradient (a tensor without a gradient counts as a
/// zero gradient). Moments are allocated on first use.
void adam_step(const std::vector<Tensor>& params, AdamState& state, double lr,
               const AdamConfig& config);

}  // namespace mnerv::inline MNERV_PRECISION_NS
