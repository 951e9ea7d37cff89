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

#include "mnerv/cli.h"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mnerv/ablation.h"
#include "mnerv/codec.h"
#include "mnerv/error.h"
#include "mnerv/frames.h"
#include "mnerv/run_config.h"
#include "mnerv/tasks.h"

namespace mnerv {
namespace {

namespace fs = std::filesystem;

struct Invocation {
  std::string command;
  std::string config_file;
  std::string fixture;
  std::vector<std::string> sets;
  std::string input;
  std::string output;
  std::string line;  // the command line, for the manifest
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw RunConfigError("--config", "cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

RunConfig resolve(const Invocation& inv) {
  std::vector<std::pair<std::string, std::string>> overrides;
  if (!inv.input.empty()) overrides.emplace_back("input", inv.input);
  if (!inv.output.empty()) overrides.emplace_back("output", inv.output);
  for (const auto& s : inv.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw RunConfigError(s, "--set expects key=value");
    overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  const std::string text = inv.config_file.empty() ? std::string() : read_text(inv.config_file);
  std::optional<std::string> fixture;
  if (!inv.fixture.empty()) fixture = inv.fixture;
  return resolve_run_config(fixture, text, overrides);
}

FrameFormat frame_format(const RunConfig& c) { return c.format == "ppm" ? FrameFormat::kPpm : FrameFormat::kRaw; }

fs::path frames_path(const RunConfig& c, const std::string& stem) {
  return fs::path(c.output) / (c.format == "ppm" ? stem : stem + ".raw");
}

void check_frame_size(const ArchConfig& arch, const VideoDataset& data) {
  if (data.height() != arch.frame_height() || data.width() != arch.frame_width()) {
    throw RunConfigError("strides", "architecture decodes " + std::to_string(arch.frame_height()) + "x" +
                                        std::to_string(arch.frame_width()) + " frames but the video is " +
                                        std::to_string(data.height()) + "x" + std::to_string(data.width()));
  }
}

std::string summary(const char* what, const MetricReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%s: psnr %.4f dB, ms-ssim %.6f over %zu frames\n", what, r.mean_psnr,
                r.mean_ms_ssim, r.psnr.size());
  return buf;
}

void cmd_plan(const RunConfig& c, std::ostream& out) {
  const ChannelPlan plan = plan_channels(c.arch);
  const LayerPlan layers = effective_layers(c.arch);
  std::string widths;
  for (std::size_t i = 0; i < plan.widths.size(); ++i) widths += (i ? "," : "") + std::to_string(plan.widths[i]);
  std::string strides;
  for (std::size_t i = 0; i < layers.strides.size(); ++i) strides += (i ? "," : "") + std::to_string(layers.strides[i]);
  const std::string csv = params_csv(analyze_plan(c.arch, plan));
  out << "# widths " << widths << "\n# strides " << strides << "\n# realized " << plan.realized_size << " of "
      << c.arch.target_size << "\n"
      << csv;
  write_text(fs::path(c.output) / "plan.csv", csv);
}

void cmd_train(const RunConfig& c, std::ostream& out) {
  const VideoDataset data = load_run_video(c);
  check_frame_size(c.arch, data);
  Model model = build_model(c.arch, plan_channels(c.arch), c.train.seed);
  Trainer trainer(model, data, c.train_config());
  if (!c.resume.empty()) trainer.load_checkpoint(c.resume);
  trainer.run();
  const MetricReport report = trainer.evaluate();
  fs::create_directories(c.output);
  trainer.save_checkpoint(fs::path(c.output) / "checkpoint.mnrv");
  write_text(fs::path(c.output) / "history.csv", history_csv(trainer.history()));
  write_text(fs::path(c.output) / "metrics.csv", report.csv());
  out << summary("train", report);
}

void cmd_compress(const RunConfig& c, std::ostream& out) {
  const VideoDataset data = load_run_video(c);
  CompressResult r = compress_pipeline(data, c.arch, c.train_config(), c.bits, c.train.seed);
  fs::create_directories(c.output);
  write_file(fs::path(c.output) / "video.mnrv", r.container);
  write_text(fs::path(c.output) / "history.csv", history_csv(r.training.history));
  const auto rd = rate_distortion(r.model, data, c.rd_bits);
  write_text(fs::path(c.output) / "rate.csv", rate_csv({r.rate}));
  write_text(fs::path(c.output) / "rd.csv", rate_csv(rd));
  save_frames(r.decoded, frames_path(c, "decoded"), frame_format(c));
  char buf[200];
  std::snprintf(buf, sizeof(buf), "compress: %zu bytes, %.6f bpp, psnr %.4f dB, ms-ssim %.6f at %d bits\n",
                r.container.size(), r.rate.bpp, r.rate.psnr, r.rate.ms_ssim, c.bits);
  out << buf << rate_csv(rd);
}

void cmd_decode(const RunConfig& c, std::ostream& out) {
  if (c.input.empty()) throw RunConfigError("input", "decode needs a container file");
  const auto bytes = read_file(c.input);
  const LoadedContainer loaded = load_container(bytes);
  const auto frames = decode_all(loaded.model, loaded.embeddings);
  const fs::path dest = frames_path(c, "decoded");
  save_frames(frames, dest, frame_format(c));
  out << "decode: " << frames.size() << " frames to " << dest.string() << "\n";
}

void cmd_eval(const RunConfig& c, std::ostream& out) {
  if (c.input.empty()) throw RunConfigError("input", "eval needs decoded frames");
  const VideoDataset pred = load_frames(c.input);
  if (c.reference.empty() && c.fixture.empty()) throw RunConfigError("reference", "eval needs reference frames");
  const VideoDataset truth = c.reference.empty() ? make_fixture() : load_frames(c.reference);
  if (pred.size() != truth.size() || pred.frame_shape() != truth.frame_shape()) {
    throw Error("decoded video " + std::to_string(pred.size()) + "x" + shape_str(pred.frame_shape()) +
                " does not match the reference " + std::to_string(truth.size()) + "x" + shape_str(truth.frame_shape()));
  }
  const MetricReport report = evaluate_frames(dataset_frames(pred), dataset_frames(truth));
  write_text(fs::path(c.output) / "metrics.csv", report.csv());
  out << report.csv();
}

void cmd_interpolate(const RunConfig& c, std::ostream& out) {
  const VideoDataset data = load_run_video(c);
  check_frame_size(c.arch, data);
  Model model = build_model(c.arch, plan_channels(c.arch), c.train.seed);
  const auto split = InterpolationSplit::every_other(data.size());
  const InterpolationResult r = eval_interpolation(model, data, split, c.train_config());

  std::vector<Tensor> frames;
  for (const auto& [mid, around] : split.evaluated) {
    NoGradGuard no_grad;
    frames.push_back(interpolate_frame(model, encode(model, data.frame(around.first)),
                                       encode(model, data.frame(around.second)), c.interp_weight));
  }
  char buf[160];
  std::string csv = "method,psnr,ms_ssim\n";
  std::snprintf(buf, sizeof(buf), "interpolated,%.4f,%.6f\nrepeated,%.4f,%.6f\n", r.interpolated.mean_psnr,
                r.interpolated.mean_ms_ssim, r.repeated.mean_psnr, r.repeated.mean_ms_ssim);
  csv += buf;
  write_text(fs::path(c.output) / "interpolation.csv", csv);
  write_text(fs::path(c.output) / "history.csv", history_csv(r.training.history));
  if (!frames.empty()) save_frames(frames, frames_path(c, "interpolated"), frame_format(c));
  out << csv;
}

void cmd_inpaint(const RunConfig& c, std::ostream& out) {
  const VideoDataset data = load_run_video(c);
  check_frame_size(c.arch, data);
  Model model = build_model(c.arch, plan_channels(c.arch), c.train.seed);
  InpaintSpec spec = c.mask;
  spec.seed = c.train.seed;
  const InpaintResult r = eval_inpainting(model, data, spec, c.train_config());
  char buf[256];
  std::snprintf(buf, sizeof(buf), "region,psnr,ssim\nrestored,%.4f,%.6f\nkept,%.4f,%.6f\nfull,%.4f,%.6f\n",
                r.restored_psnr, r.restored_ssim, r.kept_psnr, r.kept_ssim, r.full.mean_psnr, r.full.mean_ms_ssim);
  write_text(fs::path(c.output) / "inpainting.csv", buf);
  write_text(fs::path(c.output) / "history.csv", history_csv(r.training.history));
  save_frames(r.reconstructions, frames_path(c, "inpainted"), frame_format(c));
  out << buf;
}

void cmd_ablate(const RunConfig& c, std::ostream& out) {
  const VideoDataset data = load_run_video(c);
  std::vector<AblationCell> cells;
  if (c.ablate_grid != "components") cells = stride_kernel_grid(c.arch);
  if (c.ablate_grid != "kernels") {
    const auto more = component_grid(c.arch);
    cells.insert(cells.end(), more.begin(), more.end());
  }
  TrainConfig tc = c.train_config();
  if (c.ablate_epochs > 0) tc.epochs = c.ablate_epochs;
  const std::string csv = ablation_csv(run_ablation(cells, data, tc, c.threads));
  write_text(fs::path(c.output) / "ablation.csv", csv);
  out << csv;
}

void dispatch(const Invocation& inv, std::ostream& out) {
  const RunConfig config = resolve(inv);
  fs::create_directories(config.output);
  write_text(fs::path(config.output) / "manifest.txt", manifest_text(config, inv.line));
  if (inv.command == "plan") return cmd_plan(config, out);
  if (inv.command == "train") return cmd_train(config, out);
  if (inv.command == "compress") return cmd_compress(config, out);
  if (inv.command == "decode") return cmd_decode(config, out);
  if (inv.command == "eval") return cmd_eval(config, out);
  if (inv.command == "interpolate") return cmd_interpolate(config, out);
  if (inv.command == "inpaint") return cmd_inpaint(config, out);
  if (inv.command == "ablate") return cmd_ablate(config, out);
  throw RunConfigError("command", "unknown command " + inv.command);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Invocation inv;
  for (int i = 0; i < argc; ++i) inv.line += (i ? " " : "") + std::string(argv[i]);

  CLI::App app{"Fit videos into multilayer neural representations, then compress, interpolate or inpaint them."};
  app.name("mnerv");
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.add_option("-c,--config", inv.config_file, "key=value run configuration file");
  app.add_option("-s,--set", inv.sets, "override one key, e.g. --set epochs=50 (repeatable)");
  app.add_option("--fixture", inv.fixture, "use the built-in synthetic video and its architecture (tiny)");
  app.add_option("-i,--input", inv.input, "input frames, video or container (same as --set input=...)");
  app.add_option("-o,--output", inv.output, "output directory (same as --set output=...)");
  const std::pair<const char*, const char*> commands[] = {
      {"plan", "print the channel plan and per-layer parameter distribution"},
      {"train", "fit a model to a video and write a checkpoint"},
      {"compress", "train, quantize and entropy-code a video, then score the decoded result"},
      {"decode", "decode every frame stored in a container"},
      {"eval", "score decoded frames against a reference"},
      {"interpolate", "train on even frames and synthesize the odd ones"},
      {"inpaint", "train with a hidden region and score its restoration"},
      {"ablate", "train and score every cell of the stride/kernel and component grids"},
  };
  for (const auto& [name, help] : commands) {
    app.add_subcommand(name, help)->callback([&inv, n = std::string(name)] { inv.command = n; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  }

  try {
    dispatch(inv, out);
    return kExitOk;
  } catch (const RunConfigError& e) {
    err << "mnerv: invalid configuration: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "mnerv: invalid configuration: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "mnerv: " << inv.command << " failed: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace mnerv
