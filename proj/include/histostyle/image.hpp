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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace histostyle {

/// 8-bit RGB image, row-major, interleaved.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(std::size_t width, std::size_t height, std::uint8_t fill = 0);
  RgbImage(std::size_t width, std::size_t height,
           std::vector<std::uint8_t> pixels);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }

  std::uint8_t* pixel(std::size_t x, std::size_t y) {
    return pixels_.data() + 3 * (y * width_ + x);
  }
  const std::uint8_t* pixel(std::size_t x, std::size_t y) const {
    return pixels_.data() + 3 * (y * width_ + x);
  }

  const std::vector<std::uint8_t>& bytes() const noexcept { return pixels_; }
  std::vector<std::uint8_t>& bytes() noexcept { return pixels_; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

enum class ColorMode { kGray, kGreen, kRed, kIntact };

inline constexpr ColorMode kAllColorModes[] = {
    ColorMode::kGray, ColorMode::kGreen, ColorMode::kRed, ColorMode::kIntact};

std::string_view to_string(ColorMode mode);
std::optional<ColorMode> parse_color_mode(std::string_view text);

/// Decodes PNG or JPEG; single-channel inputs are replicated to RGB and alpha
/// is dropped. Throws FormatError for unreadable data, IoError for missing
/// files.
RgbImage load_image(const std::filesystem::path& path);
RgbImage decode_image(const std::vector<std::uint8_t>& encoded);

/// Writes a PNG (lossless).
void save_image(const RgbImage& image, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_png(const RgbImage& image);

/// size x size region with offsets floor((w - size)/2), floor((h - size)/2).
RgbImage center_crop(const RgbImage& image, std::size_t size);

/// gray: v = round((R+G+B)/3) half-up, output (v,v,v); green: (0,v,0);
/// red: (v,0,0); intact: unchanged.
RgbImage colorize(const RgbImage& image, ColorMode mode);

}  // namespace histostyle
