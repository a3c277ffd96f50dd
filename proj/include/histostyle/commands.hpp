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

// Batch entry points behind the `histostyle` command-line tool. Each returns
// a process exit code; per-image failures are logged and skipped.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "histostyle/image.hpp"
#include "histostyle/style.hpp"

namespace histostyle::cli {

/// Image files (png/jpg/jpeg) under a directory, sorted by name; a single
/// file path yields itself.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& input);

struct StylizeOptions {
  std::filesystem::path content;
  std::filesystem::path style;
  std::filesystem::path weights;
  std::filesystem::path out;
  StyleTransferConfig config;
  /// 1 = standard VGG-19 widths; larger values expect a narrowed network.
  std::size_t channel_divisor = 1;
  /// Images stylized concurrently.
  std::size_t jobs = 1;
};

/// Writes <stem>.stylized.png and <stem>.stylized.json per content image.
/// Returns 0 when at least one image succeeded, 1 when all failed, 2 on a
/// startup error (weights or style image unusable).
int cmd_stylize(const StylizeOptions& options);

struct ColorizeOptions {
  std::filesystem::path input;
  std::filesystem::path out;
  std::optional<ColorMode> mode;
  /// Split inputs into this many near-equal groups, one color mode each.
  std::optional<std::size_t> partition;
  std::uint64_t seed = 0;
};

/// Writes <stem>.<mode>.png. Intact PNG inputs are copied byte for byte.
/// With a partition, also writes partition.json listing the assignment.
int cmd_colorize(const ColorizeOptions& options);

/// Seeded near-equal split of `items` into `groups` groups (sizes differ by
/// at most one, larger groups first).
std::vector<std::vector<std::filesystem::path>> partition_images(
    std::vector<std::filesystem::path> items, std::size_t groups,
    std::uint64_t seed);

struct CropOptions {
  std::filesystem::path input;
  std::filesystem::path out;
  std::size_t size = 512;
};

/// Writes <stem>.crop<size>.png.
int cmd_crop(const CropOptions& options);

struct ReportOptions {
  std::filesystem::path scores;
  std::filesystem::path out;
  bool welch = false;
};

int cmd_report(const ReportOptions& options);

struct ServeOptions {
  std::filesystem::path manifest;
  std::filesystem::path scores;
  std::string host = "0.0.0.0";
  int port = 8080;
};

int cmd_review_serve(const ServeOptions& options);

struct InitWeightsOptions {
  std::filesystem::path out;
  std::size_t channel_divisor = 1;
  std::uint64_t seed = 0;
};

/// Random He-initialized weights in the binary weight format, for desk runs
/// without a converted pretrained file.
int cmd_init_weights(const InitWeightsOptions& options);

}  // namespace histostyle::cli
