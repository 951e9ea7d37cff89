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

// Numeric precision of the autodiff stack. Training builds use 32-bit floats;
// the gradient-check build defines MNERV_DOUBLE. Each precision lives in its
// own inline namespace so both libraries can be linked into one binary.

#ifdef MNERV_DOUBLE
#define MNERV_PRECISION_NS f64
#else
#define MNERV_PRECISION_NS f32
#endif

namespace mnerv::inline MNERV_PRECISION_NS {

#ifdef MNERV_DOUBLE
using Real = double;
#else
using Real = float;
#endif

inline constexpr const char* kPrecisionName = sizeof(Real) == 8 ? "f64" : "f32";

}  // namespace mnerv::inline MNERV_PRECISION_NS
