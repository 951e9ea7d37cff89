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

#include "mnerv/run_config.h"

#include <algorithm>
#include <charconv>
#include <functional>
#include <sstream>

#include "mnerv/error.h"
#include "mnerv/frames.h"

namespace mnerv::inline MNERV_PRECISION_NS {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  const std::string v = trim(text);
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    throw RunConfigError(key, "cannot parse '" + text + "' as a number");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string v = trim(text);
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw RunConfigError(key, "expected true or false, got '" + text + "'");
}

std::vector<int> parse_ints(const std::string& key, const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<int>(key, item));
  if (out.empty()) throw RunConfigError(key, "empty list");
  return out;
}

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::string fmt(bool v) { return v ? "true" : "false"; }

std::string fmt(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

struct Entry {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

Entry int_entry(std::string key, int RunConfig::*outer) {
  return {key, [key, outer](RunConfig& c, const std::string& v) { c.*outer = parse_number<int>(key, v); },
          [outer](const RunConfig& c) { return std::to_string(c.*outer); }};
}

Entry text_entry(std::string key, std::string RunConfig::*field) {
  return {key, [field](RunConfig& c, const std::string& v) { c.*field = trim(v); },
          [field](const RunConfig& c) { return c.*field; }};
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = [] {
    std::vector<Entry> t;
    // architecture
    t.push_back({"strides", [](RunConfig& c, const std::string& v) { c.arch.strides = parse_ints("strides", v); },
                 [](const RunConfig& c) { return fmt(c.arch.strides); }});
    t.push_back({"kernels", [](RunConfig& c, const std::string& v) { c.arch.kernels = parse_ints("kernels", v); },
                 [](const RunConfig& c) { return fmt(c.arch.kernels); }});
    t.push_back({"attenuation",
                 [](RunConfig& c, const std::string& v) { c.arch.attenuation = parse_number<double>("attenuation", v); },
                 [](const RunConfig& c) { return fmt(c.arch.attenuation); }});
    t.push_back({"embed_channels",
                 [](RunConfig& c, const std::string& v) { c.arch.embed_channels = parse_number<int>("embed_channels", v); },
                 [](const RunConfig& c) { return std::to_string(c.arch.embed_channels); }});
    t.push_back({"embed_height",
                 [](RunConfig& c, const std::string& v) { c.arch.embed_height = parse_number<int>("embed_height", v); },
                 [](const RunConfig& c) { return std::to_string(c.arch.embed_height); }});
    t.push_back({"embed_width",
                 [](RunConfig& c, const std::string& v) { c.arch.embed_width = parse_number<int>("embed_width", v); },
                 [](const RunConfig& c) { return std::to_string(c.arch.embed_width); }});
    t.push_back({"target_size",
                 [](RunConfig& c, const std::string& v) { c.arch.target_size = parse_number<long long>("target_size", v); },
                 [](const RunConfig& c) { return std::to_string(c.arch.target_size); }});
    t.push_back({"min_width",
                 [](RunConfig& c, const std::string& v) { c.arch.min_width = parse_number<int>("min_width", v); },
                 [](const RunConfig& c) { return std::to_string(c.arch.min_width); }});
    t.push_back({"encoder_width",
                 [](RunConfig& c, const std::string& v) { c.arch.encoder_width = parse_number<int>("encoder_width", v); },
                 [](const RunConfig& c) { return std::to_string(c.arch.encoder_width); }});
    t.push_back({"grn", [](RunConfig& c, const std::string& v) { c.arch.toggles.grn = parse_bool("grn", v); },
                 [](const RunConfig& c) { return fmt(c.arch.toggles.grn); }});
    t.push_back({"multilayer",
                 [](RunConfig& c, const std::string& v) { c.arch.toggles.multilayer = parse_bool("multilayer", v); },
                 [](const RunConfig& c) { return fmt(c.arch.toggles.multilayer); }});
    t.push_back({"header_layer",
                 [](RunConfig& c, const std::string& v) { c.arch.toggles.header_layer = parse_bool("header_layer", v); },
                 [](const RunConfig& c) { return fmt(c.arch.toggles.header_layer); }});
    // training
    t.push_back({"epochs", [](RunConfig& c, const std::string& v) { c.train.epochs = parse_number<int>("epochs", v); },
                 [](const RunConfig& c) { return std::to_string(c.train.epochs); }});
    t.push_back({"batch_size",
                 [](RunConfig& c, const std::string& v) { c.train.batch_size = parse_number<int>("batch_size", v); },
                 [](const RunConfig& c) { return std::to_string(c.train.batch_size); }});
    t.push_back({"lr", [](RunConfig& c, const std::string& v) { c.train.lr = parse_number<double>("lr", v); },
                 [](const RunConfig& c) { return fmt(c.train.lr); }});
    t.push_back({"beta1", [](RunConfig& c, const std::string& v) { c.train.adam.beta1 = parse_number<double>("beta1", v); },
                 [](const RunConfig& c) { return fmt(c.train.adam.beta1); }});
    t.push_back({"beta2", [](RunConfig& c, const std::string& v) { c.train.adam.beta2 = parse_number<double>("beta2", v); },
                 [](const RunConfig& c) { return fmt(c.train.adam.beta2); }});
    t.push_back({"eps", [](RunConfig& c, const std::string& v) { c.train.adam.eps = parse_number<double>("eps", v); },
                 [](const RunConfig& c) { return fmt(c.train.adam.eps); }});
    t.push_back({"alpha", [](RunConfig& c, const std::string& v) { c.train.loss.alpha = parse_number<double>("alpha", v); },
                 [](const RunConfig& c) { return fmt(c.train.loss.alpha); }});
    t.push_back(text_entry("loss", &RunConfig::loss));
    t.push_back({"seed", [](RunConfig& c, const std::string& v) { c.train.seed = parse_number<std::uint64_t>("seed", v); },
                 [](const RunConfig& c) { return std::to_string(c.train.seed); }});
    t.push_back({"warmup", [](RunConfig& c, const std::string& v) { c.train.warmup = parse_number<double>("warmup", v); },
                 [](const RunConfig& c) { return fmt(c.train.warmup); }});
    t.push_back({"cosine", [](RunConfig& c, const std::string& v) { c.train.cosine = parse_bool("cosine", v); },
                 [](const RunConfig& c) { return fmt(c.train.cosine); }});
    // tasks
    t.push_back({"mask_kind",
                 [](RunConfig& c, const std::string& v) {
                   const std::string s = trim(v);
                   if (s == "central") {
                     c.mask.kind = MaskKind::kCentralBox;
                   } else if (s == "random") {
                     c.mask.kind = MaskKind::kRandomBoxes;
                   } else {
                     throw RunConfigError("mask_kind", "expected central or random, got '" + v + "'");
                   }
                 },
                 [](const RunConfig& c) { return std::string(c.mask.kind == MaskKind::kCentralBox ? "central" : "random"); }});
    t.push_back({"mask_fraction",
                 [](RunConfig& c, const std::string& v) { c.mask.fraction = parse_number<double>("mask_fraction", v); },
                 [](const RunConfig& c) { return fmt(c.mask.fraction); }});
    t.push_back({"mask_boxes",
                 [](RunConfig& c, const std::string& v) { c.mask.boxes = parse_number<int>("mask_boxes", v); },
                 [](const RunConfig& c) { return std::to_string(c.mask.boxes); }});
    t.push_back({"interp_weight",
                 [](RunConfig& c, const std::string& v) { c.interp_weight = parse_number<double>("interp_weight", v); },
                 [](const RunConfig& c) { return fmt(c.interp_weight); }});
    // files and harness
    t.push_back(text_entry("input", &RunConfig::input));
    t.push_back(text_entry("reference", &RunConfig::reference));
    t.push_back(text_entry("output", &RunConfig::output));
    t.push_back(text_entry("fixture", &RunConfig::fixture));
    t.push_back(text_entry("format", &RunConfig::format));
    t.push_back(int_entry("bits", &RunConfig::bits));
    t.push_back({"rd_bits", [](RunConfig& c, const std::string& v) { c.rd_bits = parse_ints("rd_bits", v); },
                 [](const RunConfig& c) { return fmt(c.rd_bits); }});
    t.push_back(text_entry("ablate_grid", &RunConfig::ablate_grid));
    t.push_back(int_entry("ablate_epochs", &RunConfig::ablate_epochs));
    t.push_back(int_entry("threads", &RunConfig::threads));
    t.push_back(text_entry("resume", &RunConfig::resume));
    return t;
  }();
  return table;
}

const Entry& find_entry(const std::string& key) {
  for (const auto& e : entries())
    if (e.key == key) return e;
  throw RunConfigError(key, "unknown key");
}

void check_bits(const std::string& key, int b) {
  if (b < 2 || b > 16) throw RunConfigError(key, "bit widths must lie in [2,16], got " + std::to_string(b));
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) { find_entry(key).set(*this, value); }

std::string RunConfig::get(const std::string& key) const { return find_entry(key).get(*this); }

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& e : entries()) out.push_back(e.key);
    return out;
  }();
  return names;
}

void RunConfig::validate() const {
  if (arch.strides.size() != arch.kernels.size()) {
    throw RunConfigError("kernels", "has " + std::to_string(arch.kernels.size()) + " entries but strides has " +
                                        std::to_string(arch.strides.size()));
  }
  for (int s : arch.strides)
    if (s < 1) throw RunConfigError("strides", "entries must be positive");
  for (int k : arch.kernels)
    if (k < 1 || k % 2 == 0) throw RunConfigError("kernels", "entries must be odd and positive");
  if (!(arch.attenuation > 1)) throw RunConfigError("attenuation", "must exceed 1");
  if (arch.target_size <= 0) throw RunConfigError("target_size", "must be positive");
  if (arch.min_width < 3) throw RunConfigError("min_width", "must be at least 3");
  if (arch.encoder_width < 1) throw RunConfigError("encoder_width", "must be positive");
  if (arch.embed_channels < 1) throw RunConfigError("embed_channels", "must be positive");
  if (arch.embed_height < 1) throw RunConfigError("embed_height", "must be positive");
  if (arch.embed_width < 1) throw RunConfigError("embed_width", "must be positive");
  try {
    arch.validate();
  } catch (const ConfigError& e) {
    throw RunConfigError("strides", e.what());
  }
  if (train.epochs < 1) throw RunConfigError("epochs", "must be positive");
  if (train.batch_size < 1) throw RunConfigError("batch_size", "must be positive");
  if (!(train.lr > 0)) throw RunConfigError("lr", "must be positive");
  if (!(train.adam.beta1 >= 0 && train.adam.beta1 < 1)) throw RunConfigError("beta1", "must lie in [0,1)");
  if (!(train.adam.beta2 >= 0 && train.adam.beta2 < 1)) throw RunConfigError("beta2", "must lie in [0,1)");
  if (!(train.adam.eps > 0)) throw RunConfigError("eps", "must be positive");
  if (!(train.warmup >= 0 && train.warmup < 1)) throw RunConfigError("warmup", "must lie in [0,1)");
  if (!(train.loss.alpha >= 0 && train.loss.alpha <= 1)) throw RunConfigError("alpha", "must lie in [0,1]");
  try {
    parse_loss(loss, train.loss.alpha).validate();
  } catch (const Error& e) {
    throw RunConfigError("loss", e.what());
  }
  if (!(mask.fraction > 0 && mask.fraction < 1)) throw RunConfigError("mask_fraction", "must lie in (0,1)");
  if (mask.boxes < 1) throw RunConfigError("mask_boxes", "must be positive");
  if (!(interp_weight >= 0 && interp_weight <= 1)) throw RunConfigError("interp_weight", "must lie in [0,1]");
  if (!fixture.empty() && fixture != "tiny") throw RunConfigError("fixture", "only 'tiny' is built in");
  if (format != "raw" && format != "ppm") throw RunConfigError("format", "expected raw or ppm");
  check_bits("bits", bits);
  for (int b : rd_bits) check_bits("rd_bits", b);
  if (ablate_grid != "kernels" && ablate_grid != "components" && ablate_grid != "all") {
    throw RunConfigError("ablate_grid", "expected kernels, components or all");
  }
  if (ablate_epochs < 0) throw RunConfigError("ablate_epochs", "must not be negative");
  if (threads < 1) throw RunConfigError("threads", "must be positive");
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t = train;
  try {
    t.loss = parse_loss(loss, train.loss.alpha);
  } catch (const Error& e) {
    throw RunConfigError("loss", e.what());
  }
  return t;
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& e : entries()) out += e.key + " = " + e.get(*this) + "\n";
  return out;
}

void apply_fixture_preset(RunConfig& config, const std::string& name) {
  const std::string n = trim(name);
  if (n.empty()) return;
  if (n != "tiny") throw RunConfigError("fixture", "unknown fixture '" + name + "'");
  config.arch = ArchConfig::tiny();
  config.fixture = n;
}

std::vector<std::pair<std::string, std::string>> parse_run_config_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::stringstream ss(text);
  std::string line;
  int number = 0;
  while (std::getline(ss, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw RunConfigError(body, "line " + std::to_string(number) + " is not of the form key = value");
    }
    const std::string key = trim(body.substr(0, eq));
    if (key.empty()) throw RunConfigError("", "line " + std::to_string(number) + " has no key");
    out.emplace_back(key, trim(body.substr(eq + 1)));
  }
  return out;
}

RunConfig resolve_run_config(const std::optional<std::string>& fixture, const std::string& file_text,
                             const std::vector<std::pair<std::string, std::string>>& overrides) {
  auto pairs = parse_run_config_text(file_text);
  pairs.insert(pairs.end(), overrides.begin(), overrides.end());
  std::string preset = fixture.value_or("");
  for (const auto& [k, v] : pairs)
    if (k == "fixture") preset = v;

  RunConfig config;
  apply_fixture_preset(config, preset);
  for (const auto& [k, v] : pairs) config.set(k, v);
  config.validate();
  return config;
}

std::string manifest_text(const RunConfig& config, const std::string& command) {
  std::string out = "# mnerv " + std::string(kVersion) + "\n";
  out += "# command: " + command + "\n";
  out += std::string("# precision: ") + (sizeof(Real) == 8 ? "f64" : "f32") + "\n";
  return out + config.to_text();
}

VideoDataset load_run_video(const RunConfig& config) {
  if (!config.input.empty()) return load_frames(config.input);
  if (config.fixture == "tiny") return make_fixture();
  throw RunConfigError("input", "no input frames given and no fixture selected");
}

}  // namespace mnerv::inline MNERV_PRECISION_NS
