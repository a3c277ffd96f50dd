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

#include "histostyle/image.hpp"

#include <fstream>
#include <iterator>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "histostyle/errors.hpp"

namespace histostyle {

RgbImage::RgbImage(std::size_t width, std::size_t height, std::uint8_t fill)
    : width_(width), height_(height), pixels_(3 * width * height, fill) {
  if (width == 0 || height == 0) {
    throw InvalidInput("image dimensions must be >= 1");
  }
}

RgbImage::RgbImage(std::size_t width, std::size_t height,
                   std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width == 0 || height == 0) {
    throw InvalidInput("image dimensions must be >= 1");
  }
  if (pixels_.size() != 3 * width * height) {
    throw InvalidInput("pixel buffer does not match image dimensions");
  }
}

std::string_view to_string(ColorMode mode) {
  switch (mode) {
    case ColorMode::kGray: return "gray";
    case ColorMode::kGreen: return "green";
    case ColorMode::kRed: return "red";
    case ColorMode::kIntact: return "intact";
  }
  return "intact";
}

std::optional<ColorMode> parse_color_mode(std::string_view text) {
  for (ColorMode m : kAllColorModes) {
    if (to_string(m) == text) return m;
  }
  return std::nullopt;
}

namespace {

RgbImage from_mat(const cv::Mat& decoded) {
  cv::Mat eight;
  if (decoded.depth() == CV_16U) {
    decoded.convertTo(eight, CV_8U, 1.0 / 257.0);
  } else if (decoded.depth() == CV_8U) {
    eight = decoded;
  } else {
    throw FormatError("unsupported image sample depth");
  }
  const auto w = static_cast<std::size_t>(eight.cols);
  const auto h = static_cast<std::size_t>(eight.rows);
  const int ch = eight.channels();
  if (ch != 1 && ch != 3 && ch != 4) {
    throw FormatError("unsupported channel count " + std::to_string(ch));
  }
  RgbImage image(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    const std::uint8_t* row = eight.ptr<std::uint8_t>(static_cast<int>(y));
    for (std::size_t x = 0; x < w; ++x) {
      std::uint8_t* p = image.pixel(x, y);
      if (ch == 1) {
        p[0] = p[1] = p[2] = row[x];
      } else {
        // OpenCV hands back BGR(A).
        const std::uint8_t* s = row + x * static_cast<std::size_t>(ch);
        p[0] = s[2];
        p[1] = s[1];
        p[2] = s[0];
      }
    }
  }
  return image;
}

}  // namespace

RgbImage decode_image(const std::vector<std::uint8_t>& encoded) {
  if (encoded.empty()) throw FormatError("empty image data");
  cv::Mat decoded;
  try {
    decoded = cv::imdecode(encoded, cv::IMREAD_UNCHANGED);
  } catch (const cv::Exception& e) {
    throw FormatError(std::string("image decode failed: ") + e.what());
  }
  if (decoded.empty()) throw FormatError("unsupported or corrupt image data");
  return from_mat(decoded);
}

RgbImage load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_image(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
  cv::Mat bgr(static_cast<int>(image.height()), static_cast<int>(image.width()),
              CV_8UC3);
  for (std::size_t y = 0; y < image.height(); ++y) {
    std::uint8_t* row = bgr.ptr<std::uint8_t>(static_cast<int>(y));
    for (std::size_t x = 0; x < image.width(); ++x) {
      const std::uint8_t* p = image.pixel(x, y);
      row[3 * x + 0] = p[2];
      row[3 * x + 1] = p[1];
      row[3 * x + 2] = p[0];
    }
  }
  std::vector<std::uint8_t> out;
  if (!cv::imencode(".png", bgr, out)) throw IoError("PNG encoding failed");
  return out;
}

void save_image(const RgbImage& image, const std::filesystem::path& path) {
  const auto bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

RgbImage center_crop(const RgbImage& image, std::size_t size) {
  if (size == 0 || size > image.width() || size > image.height()) {
    throw InvalidInput("crop size " + std::to_string(size) +
                       " does not fit a " + std::to_string(image.width()) +
                       "x" + std::to_string(image.height()) + " image");
  }
  const std::size_t x0 = (image.width() - size) / 2;
  const std::size_t y0 = (image.height() - size) / 2;
  RgbImage out(size, size);
  for (std::size_t y = 0; y < size; ++y) {
    const std::uint8_t* src = image.pixel(x0, y0 + y);
    std::copy(src, src + 3 * size, out.pixel(0, y));
  }
  return out;
}

RgbImage colorize(const RgbImage& image, ColorMode mode) {
  if (mode == ColorMode::kIntact) return image;
  RgbImage out = image;
  auto& px = out.bytes();
  for (std::size_t i = 0; i < px.size(); i += 3) {
    const unsigned sum = unsigned{px[i]} + px[i + 1] + px[i + 2];
    // sum/3 never has a fractional part of exactly one half, so this is
    // round-half-up.
    const auto v = static_cast<std::uint8_t>((sum + 1) / 3);
    switch (mode) {
      case ColorMode::kGray: px[i] = px[i + 1] = px[i + 2] = v; break;
      case ColorMode::kGreen: px[i] = 0; px[i + 1] = v; px[i + 2] = 0; break;
      case ColorMode::kRed: px[i] = v; px[i + 1] = 0; px[i + 2] = 0; break;
      case ColorMode::kIntact: break;
    }
  }
  return out;
}

}  // namespace histostyle
