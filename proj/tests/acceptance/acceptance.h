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

#include <string>

// Criteria are split by precision: numerical checks run against the double
// build, training-based gates against the single-precision build.
namespace mnerv::acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
};

// double build
Outcome gradient_suite();
Outcome oracle_equivalence();
Outcome structure_gates();
Outcome parameter_spread();
Outcome loss_algebra();

// single-precision build
Outcome overfit_gate();
Outcome codec_gates();
Outcome task_gates();
Outcome ablation_harness();

}  // namespace mnerv::acceptance
