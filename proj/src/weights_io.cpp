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

// Weight file layout (all integers little-endian):
//
//   "VGGW" | u32 version (1) | u32 layer_count
//   per layer: u16 name_len | name (UTF-8) | u32 out, in, kh, kw
//              | out*in*kh*kw f32 kernel (out -> in -> kh -> kw) | out f32 bias
//   u32 CRC32 of every preceding byte

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "histostyle/vgg.hpp"

namespace histostyle {
namespace {

constexpr char kMagic[4] = {'V', 'G', 'G', 'W'};
constexpr std::uint32_t kVersion = 1;

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes, std::size_t limit)
      : bytes_(bytes), limit_(limit) {}

  void need(std::size_t n) const {
    if (pos_ + n > limit_) {
      throw IoError("weight file truncated at byte " + std::to_string(pos_));
    }
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] |
                                                 (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[pos_ + i];
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t limit_;
  std::size_t pos_ = 0;
};

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_f32(std::vector<std::uint8_t>& out, float v) {
  put_u32(out, std::bit_cast<std::uint32_t>(v));
}

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths.
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

NetworkWeights load_weights(const std::filesystem::path& path,
                            const std::vector<LayerSpec>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open weight file " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  if (bytes.size() < 4) throw IoError("weight file truncated: " + path.string());
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("bad magic in weight file " + path.string());
  }

  Reader r(bytes, bytes.size());
  r.str(4);
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw FormatError("unsupported weight file version " +
                      std::to_string(version));
  }
  const std::uint32_t count = r.u32();

  NetworkWeights weights;
  weights.layers = expected;
  for (std::uint32_t l = 0; l < count; ++l) {
    const std::string name = r.str(r.u16());
    std::uint32_t dims[4];
    for (auto& d : dims) d = r.u32();
    const std::uint64_t kernel_count =
        std::uint64_t{dims[0]} * dims[1] * dims[2] * dims[3];
    r.need(static_cast<std::size_t>((kernel_count + dims[0]) * 4));
    ConvWeights<float> w{Tensor(Shape{dims[0], dims[1], dims[2], dims[3]}),
                         std::vector<float>(dims[0])};
    for (float& v : w.kernel.storage()) v = r.f32();
    for (float& v : w.bias) v = r.f32();
    if (!w.kernel.all_finite() ||
        !std::all_of(w.bias.begin(), w.bias.end(),
                     [](float v) { return std::isfinite(v); })) {
      throw FormatError("non-finite values in layer " + name);
    }
    if (!weights.conv.emplace(name, std::move(w)).second) {
      throw FormatError("layer " + name + " appears twice");
    }
  }
  const std::size_t body_end = r.pos();
  const std::uint32_t stored_crc = r.u32();
  if (r.pos() != bytes.size()) {
    throw FormatError("trailing bytes after weight file checksum");
  }
  const std::uint32_t actual_crc = crc32_of(bytes.data(), body_end);
  if (stored_crc != actual_crc) {
    throw FormatError("weight file CRC32 mismatch");
  }
  weights.checksum = stored_crc;

  for (const auto& layer : expected) {
    if (layer.kind != LayerKind::kConv) continue;
    auto it = weights.conv.find(layer.name);
    if (it == weights.conv.end()) {
      throw IncompatibleWeights(layer.name, "missing from weight file");
    }
    const Shape want{layer.channels_out, layer.channels_in, 3, 3};
    if (it->second.kernel.shape() != want) {
      throw IncompatibleWeights(layer.name,
                                "file has kernel " +
                                    it->second.kernel.shape().to_string() +
                                    ", architecture needs " + want.to_string());
    }
  }
  for (const auto& [name, w] : weights.conv) {
    const bool known = std::any_of(
        expected.begin(), expected.end(), [&](const LayerSpec& l) {
          return l.kind == LayerKind::kConv && l.name == name;
        });
    if (!known) throw IncompatibleWeights(name, "not part of the architecture");
  }
  return weights;
}

std::uint32_t save_weights(const NetworkWeights& weights,
                           const std::filesystem::path& path) {
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_u32(out, kVersion);
  std::uint32_t count = 0;
  for (const auto& l : weights.layers) count += l.kind == LayerKind::kConv;
  put_u32(out, count);
  for (const auto& layer : weights.layers) {
    if (layer.kind != LayerKind::kConv) continue;
    const auto& w = weights.conv.at(layer.name);
    put_u16(out, static_cast<std::uint16_t>(layer.name.size()));
    out.insert(out.end(), layer.name.begin(), layer.name.end());
    for (std::size_t d : w.kernel.shape().dims()) {
      put_u32(out, static_cast<std::uint32_t>(d));
    }
    for (float v : w.kernel.storage()) put_f32(out, v);
    for (float v : w.bias) put_f32(out, v);
  }
  const std::uint32_t crc = crc32_of(out.data(), out.size());
  put_u32(out, crc);

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot write weight file " + path.string());
  file.write(reinterpret_cast<const char*>(out.data()),
             static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("short write to " + path.string());
  return crc;
}

}  // namespace histostyle
