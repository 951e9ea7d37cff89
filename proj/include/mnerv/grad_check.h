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

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mnerv/tensor.h"

namespace mnerv::inline MNERV_PRECISION_NS {

struct GradCheckOptions {
  // Central-difference step. The default suits the double build; single
  // precision needs something near 1e-2 and a loose tolerance.
  double step = sizeof(Real) == 8 ? 1e-5 : 1e-2;
  double tolerance = 1e-6;
  // Errors are |analytic - numeric| / max(|analytic|, |numeric|, floor).
  double floor = 1e-3;
  // Range of the random inputs generated from shapes.
  double low = -1.0;
  double high = 1.0;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_error = 0;
  std::size_t checked = 0;
  bool passed = true;
  // "input 1 [17]: analytic=... numeric=..." for the worst entry.
  std::string worst;
};

using GradCheckFn = std::function<Tensor(const std::vector<Tensor>&)>;

/// Compares reverse-mode gradients of `fn` with central differences at every
/// input element. Non-scalar outputs are reduced with a fixed random
/// projection sum(out * w) first.
GradCheckReport grad_check(const GradCheckFn& fn, std::vector<Tensor> inputs,
                           const GradCheckOptions& options = {});

// Same, on inputs drawn uniformly from [low, high] with the given shapes.
GradCheckReport grad_check(const GradCheckFn& fn, const std::vector<Shape>& shapes,
                           const GradCheckOptions& options = {});

}  // namespace mnerv::inline MNERV_PRECISION_NS
