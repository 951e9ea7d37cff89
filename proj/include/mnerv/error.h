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

#include <stdexcept>
#include <string>

namespace mnerv {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid architecture, shape or tensor configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// API misuse by the caller (wrong shapes for a loss, backward on non-scalar).
class UsageError : public Error {
 public:
  using Error::Error;
};

class PlanningError : public Error {
 public:
  PlanningError(const std::string& what, long long minimum_size)
      : Error(what), minimum_size_(minimum_size) {}
  long long minimum_size() const { return minimum_size_; }

 private:
  long long minimum_size_;
};

class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, long long step)
      : Error(what), step_(step) {}
  long long step() const { return step_; }

 private:
  long long step_;
};

enum class LoadErrorKind { kBadMagic, kUnknownVersion, kTruncated, kChecksum, kMalformed };

class LoadError : public Error {
 public:
  LoadError(LoadErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
  LoadErrorKind kind() const { return kind_; }

 private:
  LoadErrorKind kind_;
};

// Rejected task specification (e.g. degenerate inpainting mask).
class SpecError : public Error {
 public:
  using Error::Error;
};

// Bad key or value in a run configuration file.
class RunConfigError : public Error {
 public:
  RunConfigError(const std::string& key, const std::string& what)
      : Error("config key '" + key + "': " + what), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

}  // namespace mnerv
