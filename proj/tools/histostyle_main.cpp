// Copyright 2026 The HistoStyle Authors. All Rights Reserved.
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

#include <map>
#include <string>

#include <CLI11.hpp>

#include "histostyle/commands.hpp"

namespace cli = histostyle::cli;
using histostyle::ColorMode;
using histostyle::InitMode;
using histostyle::kernels::PoolMode;

int main(int argc, char** argv) {
  CLI::App app{"Neural style transfer for fluorescence micrographs, plus color coding, "
               "cropping, score reporting and a rater review service"};
  app.require_subcommand(1);

  // stylize
  cli::StylizeOptions stylize;
  std::string init = "content", pooling = "max";
  bool no_norm = false;
  auto* st = app.add_subcommand("stylize", "Stylize content images toward a style image");
  st->add_option("--content", stylize.content, "Content image or directory")->required();
  st->add_option("--style", stylize.style, "Style image")->required()->check(CLI::ExistingFile);
  st->add_option("--weights", stylize.weights, "Binary weight file")->required();
  st->add_option("--out", stylize.out, "Output directory")->required();
  st->add_option("--alpha", stylize.config.alpha, "Style loss weight")->capture_default_str();
  st->add_option("--iterations", stylize.config.iterations, "L-BFGS iterations")
      ->capture_default_str();
  st->add_option("--init", init, "Target initialization")
      ->check(CLI::IsMember({"content", "noise"}))->capture_default_str();
  st->add_option("--pooling", pooling, "Pooling mode")
      ->check(CLI::IsMember({"max", "average"}))->capture_default_str();
  st->add_flag("--no-style-normalization", no_norm, "Use the unnormalized style loss");
  st->add_option("--seed", stylize.config.seed, "Seed for noise initialization");
  st->add_option("--jobs", stylize.jobs, "Images processed concurrently")->capture_default_str();
  st->add_option("--channel-divisor", stylize.channel_divisor,
                 "Divide VGG conv widths (for narrowed desk-run weights)")
      ->capture_default_str();

  // colorize
  cli::ColorizeOptions colorize;
  std::string mode;
  std::size_t partition = 0;
  auto* co = app.add_subcommand("colorize", "Gray/green/red/intact color coding");
  co->add_option("--input", colorize.input, "Image or directory")->required();
  co->add_option("--out", colorize.out, "Output directory")->required();
  auto* mode_opt = co->add_option("--mode", mode, "Color mode")
                       ->check(CLI::IsMember({"gray", "green", "red", "intact"}));
  auto* part_opt = co->add_option("--partition", partition,
                                  "Split inputs into 4 groups, one mode each");
  mode_opt->excludes(part_opt);
  co->add_option("--seed", colorize.seed, "Partition shuffle seed")->capture_default_str();

  // crop
  cli::CropOptions crop;
  bool center = true;
  auto* cr = app.add_subcommand("crop", "Center-crop images");
  cr->add_option("--input", crop.input, "Image or directory")->required();
  cr->add_option("--out", crop.out, "Output directory")->required();
  cr->add_flag("--center", center, "Center crop (the only mode)");
  cr->add_option("--size", crop.size, "Crop side in pixels")->capture_default_str();

  // report
  cli::ReportOptions report;
  auto* rp = app.add_subcommand("report", "Aggregate statistics from a scores CSV");
  rp->add_option("--scores", report.scores, "Scores CSV")->required();
  rp->add_option("--out", report.out, "Report JSON path")->required();
  rp->add_flag("--welch", report.welch, "Use Welch's unpaired t-test");

  // review serve
  cli::ServeOptions serve;
  auto* rv = app.add_subcommand("review", "Rater review service");
  rv->require_subcommand(1);
  auto* sv = rv->add_subcommand("serve", "Serve image pairs and collect scores");
  sv->add_option("--manifest", serve.manifest, "Manifest JSON")->required();
  sv->add_option("--scores", serve.scores, "Scores CSV (created if absent)")->required();
  sv->add_option("--port", serve.port, "TCP port")->capture_default_str();
  sv->add_option("--host", serve.host, "Bind address")->capture_default_str();

  // init-weights
  cli::InitWeightsOptions initw;
  auto* iw = app.add_subcommand("init-weights", "Write random weights in the weight format");
  iw->add_option("--out", initw.out, "Weight file path")->required();
  iw->add_option("--channel-divisor", initw.channel_divisor, "Divide VGG conv widths")
      ->capture_default_str();
  iw->add_option("--seed", initw.seed, "Random seed")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  if (st->parsed()) {
    stylize.config.init_mode = init == "noise" ? InitMode::kNoise : InitMode::kContent;
    stylize.config.pooling = pooling == "average" ? PoolMode::kAverage : PoolMode::kMax;
    stylize.config.style_normalization = !no_norm;
    return cli::cmd_stylize(stylize);
  }
  if (co->parsed()) {
    if (!mode.empty()) colorize.mode = histostyle::parse_color_mode(mode);
    if (part_opt->count() > 0) colorize.partition = partition;
    return cli::cmd_colorize(colorize);
  }
  if (cr->parsed()) return cli::cmd_crop(crop);
  if (rp->parsed()) return cli::cmd_report(report);
  if (sv->parsed()) return cli::cmd_review_serve(serve);
  if (iw->parsed()) return cli::cmd_init_weights(initw);
  return 1;
}
