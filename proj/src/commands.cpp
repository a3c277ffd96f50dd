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

#include "histostyle/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <iterator>
#include <thread>

#include <spdlog/spdlog.h>

#include "histostyle/errors.hpp"
#include "histostyle/evaluation.hpp"
#include "histostyle/review_service.hpp"
#include "histostyle/shuffle.hpp"

namespace histostyle::cli {
namespace fs = std::filesystem;

namespace {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool is_image(const fs::path& p) {
  const std::string ext = lower(p.extension().string());
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("short write to " + path.string());
}

// Runs `work(i)` for i in [0, count) on up to `jobs` threads.
template <typename Work>
void run_parallel(std::size_t count, std::size_t jobs, Work&& work) {
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(count, 1));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) work(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  for (std::size_t t = 0; t < jobs; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) work(i);
    });
  }
}

int report_outcome(const char* command, std::size_t total, std::size_t failed) {
  if (total == 0) {
    spdlog::error("{}: no input images found", command);
    return 1;
  }
  if (failed == total) {
    spdlog::error("{}: all {} images failed", command, total);
    return 1;
  }
  if (failed > 0) spdlog::warn("{}: {} of {} images failed", command, failed, total);
  return 0;
}

}  // namespace

std::vector<fs::path> list_images(const fs::path& input) {
  if (fs::is_regular_file(input)) return {input};
  if (!fs::is_directory(input)) throw IoError("no such file or directory: " + input.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(input)) {
    if (entry.is_regular_file() && is_image(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

int cmd_stylize(const StylizeOptions& options) {
  NetworkWeights weights;
  RgbImage style;
  std::vector<fs::path> inputs;
  try {
    options.config.validate();
    weights = load_weights(options.weights, vgg19_layers(options.channel_divisor));
    style = load_image(options.style);
    inputs = list_images(options.content);
    fs::create_directories(options.out);
  } catch (const std::exception& e) {
    spdlog::error("stylize: {}", e.what());
    return 2;
  }
  spdlog::info("stylize: {} images, weights crc32 {:08x}, {} iterations", inputs.size(),
               weights.checksum, options.config.iterations);

  std::atomic<std::size_t> failed{0};
  run_parallel(inputs.size(), options.jobs, [&](std::size_t i) {
    const fs::path& input = inputs[i];
    try {
      const RgbImage content = load_image(input);
      const auto result = run_style_transfer(content, style, weights, options.config);
      const std::string stem = input.stem().string();
      save_image(result.image, options.out / (stem + ".stylized.png"));
      auto meta = run_metadata(options.config, weights, result);
      meta["content"] = input.string();
      meta["style"] = options.style.string();
      write_text(options.out / (stem + ".stylized.json"), meta.dump(2) + "\n");
      if (result.warning) {
        spdlog::warn("{}: line search failed, kept best iterate after {} iterations",
                     input.string(), result.iterations);
      }
      spdlog::info("{}: loss {:.6g} -> {:.6g} in {:.1f}s", input.string(),
                   result.trace.front().total, result.trace.back().total,
                   result.wall_seconds);
    } catch (const std::exception& e) {
      ++failed;
      spdlog::warn("{}: skipped ({})", input.string(), e.what());
    }
  });
  return report_outcome("stylize", inputs.size(), failed);
}

std::vector<std::vector<fs::path>> partition_images(std::vector<fs::path> items,
                                                    std::size_t groups,
                                                    std::uint64_t seed) {
  if (groups == 0) throw InvalidInput("partition count must be >= 1");
  std::sort(items.begin(), items.end());
  seeded_shuffle(items, seed);
  std::vector<std::vector<fs::path>> out(groups);
  const std::size_t base = items.size() / groups, extra = items.size() % groups;
  std::size_t pos = 0;
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t n = base + (g < extra ? 1 : 0);
    out[g].assign(items.begin() + static_cast<std::ptrdiff_t>(pos),
                  items.begin() + static_cast<std::ptrdiff_t>(pos + n));
    pos += n;
  }
  return out;
}

int cmd_colorize(const ColorizeOptions& options) {
  std::vector<fs::path> inputs;
  try {
    if (options.mode.has_value() == options.partition.has_value()) {
      throw InvalidInput("give exactly one of --mode or --partition");
    }
    if (options.partition && *options.partition != 4) {
      throw InvalidInput("--partition supports 4 groups (gray, green, red, intact)");
    }
    inputs = list_images(options.input);
    fs::create_directories(options.out);
  } catch (const std::exception& e) {
    spdlog::error("colorize: {}", e.what());
    return 2;
  }

  std::vector<std::pair<fs::path, ColorMode>> jobs;
  nlohmann::json assignment = nlohmann::json::object();
  if (options.partition) {
    const auto groups = partition_images(inputs, *options.partition, options.seed);
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const ColorMode mode = kAllColorModes[g];
      nlohmann::json names = nlohmann::json::array();
      for (const auto& p : groups[g]) {
        jobs.emplace_back(p, mode);
        names.push_back(p.filename().string());
      }
      assignment[std::string(to_string(mode))] = names;
    }
    std::sort(jobs.begin(), jobs.end());
  } else {
    for (const auto& p : inputs) jobs.emplace_back(p, *options.mode);
  }

  std::size_t failed = 0;
  for (const auto& [input, mode] : jobs) {
    const fs::path target =
        options.out / (input.stem().string() + "." + std::string(to_string(mode)) + ".png");
    try {
      if (mode == ColorMode::kIntact && lower(input.extension().string()) == ".png") {
        load_image(input);  // reject corrupt files rather than copying them
        fs::copy_file(input, target, fs::copy_options::overwrite_existing);
      } else {
        save_image(colorize(load_image(input), mode), target);
      }
    } catch (const std::exception& e) {
      ++failed;
      spdlog::warn("{}: skipped ({})", input.string(), e.what());
    }
  }
  if (options.partition) {
    nlohmann::json doc = {{"seed", options.seed}, {"groups", assignment}};
    write_text(options.out / "partition.json", doc.dump(2) + "\n");
  }
  return report_outcome("colorize", jobs.size(), failed);
}

int cmd_crop(const CropOptions& options) {
  std::vector<fs::path> inputs;
  try {
    inputs = list_images(options.input);
    fs::create_directories(options.out);
  } catch (const std::exception& e) {
    spdlog::error("crop: {}", e.what());
    return 2;
  }
  std::size_t failed = 0;
  for (const auto& input : inputs) {
    try {
      const fs::path target = options.out / (input.stem().string() + ".crop" +
                                             std::to_string(options.size) + ".png");
      save_image(center_crop(load_image(input), options.size), target);
    } catch (const std::exception& e) {
      ++failed;
      spdlog::warn("{}: skipped ({})", input.string(), e.what());
    }
  }
  return report_outcome("crop", inputs.size(), failed);
}

int cmd_report(const ReportOptions& options) {
  try {
    std::ifstream in(options.scores, std::ios::binary);
    if (!in) throw IoError("cannot read " + options.scores.string());
    const std::string csv((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
    auto records = eval::parse_scores(csv);
    const auto report = eval::build_report(std::move(records), {options.welch});
    if (options.out.has_parent_path()) fs::create_directories(options.out.parent_path());
    write_text(options.out, report.dump(2) + "\n");
    spdlog::info("report: {} records -> {}", report["record_count"].get<std::size_t>(),
                 options.out.string());
    return 0;
  } catch (const std::exception& e) {
    spdlog::error("report: {}", e.what());
    return 1;
  }
}

int cmd_review_serve(const ServeOptions& options) {
  try {
    review::ReviewService service(review::load_manifest(options.manifest), options.scores);
    review::serve(service, options.host, options.port);
    return 0;
  } catch (const std::exception& e) {
    spdlog::error("review serve: {}", e.what());
    return 1;
  }
}

int cmd_init_weights(const InitWeightsOptions& options) {
  try {
    const auto weights =
        random_weights(vgg19_layers(options.channel_divisor), options.seed);
    const auto crc = save_weights(weights, options.out);
    spdlog::info("wrote {} (crc32 {:08x})", options.out.string(), crc);
    return 0;
  } catch (const std::exception& e) {
    spdlog::error("init-weights: {}", e.what());
    return 1;
  }
}

}  // namespace histostyle::cli
