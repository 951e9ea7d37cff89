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

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mnerv/model.h"
#include "mnerv/tasks.h"
#include "mnerv/trainer.h"

namespace mnerv::inline MNERV_PRECISION_NS {

inline constexpr const char* kVersion = "0.1.0";

/// Everything one CLI run needs, as a flat set of keys. The text form is
/// one `key = value` per line; `#` starts a comment, lists are
/// comma-separated and booleans are true/false.
struct RunConfig {
  ArchConfig arch;
  TrainConfig train;
  std::string loss = "l1+ms_ssim";  // combined with train.loss.alpha
  InpaintSpec mask;
  double interp_weight = 0.5;

  std::string input;      // frame directory or raw video
  std::string reference;  // frames to score against (eval)
  std::string output = "mnerv_out";  // output directory
  std::string fixture;    // "tiny" or empty
  std::string format = "raw";  // decoded frame dumps: raw | ppm
  int bits = 8;
  std::vector<int> rd_bits{4, 6, 8, 12, 16};
  std::string ablate_grid = "components";  // kernels | components | all
  int ablate_epochs = 0;  // 0 keeps `epochs`
  int threads = 1;
  std::string resume;  // checkpoint to continue training from

  /// Assigns one key from its text form. Throws RunConfigError naming the
  /// key when it is unknown or the value does not parse.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static const std::vector<std::string>& keys();

  // `train` with the loss text resolved.
  TrainConfig train_config() const;

  // Cross-field checks; failures raise RunConfigError with the key at fault.
  void validate() const;

  // Every key in keys() order, re-parsable by parse_run_config_text.
  std::string to_text() const;
};

// `name` = "tiny" switches to the fixture architecture; "" leaves defaults.
void apply_fixture_preset(RunConfig& config, const std::string& name);

// key/value pairs in file order. Malformed lines raise RunConfigError.
std::vector<std::pair<std::string, std::string>> parse_run_config_text(const std::string& text);

/// Layers defaults, the fixture preset, the config file text and then the
/// overrides. The fixture named last among `fixture`, the file and the
/// overrides picks the preset, which is applied before any explicit key.
RunConfig resolve_run_config(const std::optional<std::string>& fixture, const std::string& file_text,
                             const std::vector<std::pair<std::string, std::string>>& overrides);

// Resolved config plus version, as written next to every run's outputs.
std::string manifest_text(const RunConfig& config, const std::string& command);

// Video named by `input`, or the fixture video when `fixture` is set.
VideoDataset load_run_video(const RunConfig& config);

}  // namespace mnerv::inline MNERV_PRECISION_NS
