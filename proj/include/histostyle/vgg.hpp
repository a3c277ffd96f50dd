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

// Truncated VGG-19 feature network (conv1_1 .. relu5_1) with named taps.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "histostyle/image.hpp"
#include "histostyle/kernels.hpp"
#include "histostyle/tensor.hpp"

namespace histostyle {

enum class LayerKind { kConv, kRelu, kPool };

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::kConv;
  std::size_t channels_in = 0;   // conv only
  std::size_t channels_out = 0;  // conv only

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

inline constexpr const char* kContentTap = "conv4_2";
inline constexpr std::array<const char*, 5> kStyleTaps = {
    "relu1_1", "relu2_1", "relu3_1", "relu4_1", "relu5_1"};

/// The standard VGG-19 prefix through relu5_1. With `channel_divisor` > 1
/// every conv width is divided (rounded up, minimum 1), which gives the small
/// same-topology networks used for desk runs and gradient checks.
const std::vector<LayerSpec>& vgg19_layers();
std::vector<LayerSpec> vgg19_layers(std::size_t channel_divisor);

template <typename T>
struct ConvWeights {
  BasicTensor<T> kernel;  // (out, in, 3, 3)
  std::vector<T> bias;    // out
};

template <typename T>
struct BasicNetworkWeights {
  std::vector<LayerSpec> layers;
  std::map<std::string, ConvWeights<T>> conv;
  /// CRC32 of the source file (0 for weights built in memory).
  std::uint32_t checksum = 0;

  template <typename U>
  BasicNetworkWeights<U> cast() const {
    BasicNetworkWeights<U> out;
    out.layers = layers;
    out.checksum = checksum;
    for (const auto& [name, w] : conv) {
      out.conv[name] = ConvWeights<U>{
          w.kernel.template cast<U>(),
          std::vector<U>(w.bias.begin(), w.bias.end())};
    }
    return out;
  }
};

using NetworkWeights = BasicNetworkWeights<float>;

/// He-normal kernels and small random biases, reproducible from `seed`.
NetworkWeights random_weights(const std::vector<LayerSpec>& layers,
                              std::uint64_t seed, float bias_scale = 0.01f);

/// Reads the binary weight format and validates it against `expected`.
NetworkWeights load_weights(const std::filesystem::path& path,
                            const std::vector<LayerSpec>& expected);

/// Serializes conv layers in architecture order; returns the CRC32 written.
std::uint32_t save_weights(const NetworkWeights& weights,
                           const std::filesystem::path& path);

/// Per-layer state kept by a forward pass: pre-activation conv outputs,
/// input shapes and pooling routings. Nothing else is retained.
template <typename T>
struct ForwardCache {
  const void* owner = nullptr;
  std::uint64_t generation = 0;
  std::size_t depth = 0;  // number of layers executed
  std::set<std::string> taps;
  std::vector<Shape> input_shapes;
  std::vector<BasicTensor<T>> preactivations;  // indexed by layer; conv only
  std::vector<kernels::PoolRouting> routings;  // indexed by layer; pool only
};

template <typename T>
struct ForwardResult {
  std::map<std::string, BasicTensor<T>> taps;
  ForwardCache<T> cache;
};

template <typename T>
class BasicVggNetwork {
 public:
  BasicVggNetwork(BasicNetworkWeights<T> weights,
                  kernels::PoolMode pooling = kernels::PoolMode::kMax);

  const std::vector<LayerSpec>& layers() const noexcept {
    return weights_.layers;
  }
  const BasicNetworkWeights<T>& weights() const noexcept { return weights_; }
  kernels::PoolMode pooling() const noexcept { return pooling_; }

  /// Index of a layer by name; throws InvalidInput for unknown names.
  std::size_t layer_index(const std::string& name) const;

  /// Runs the network up to the deepest requested tap.
  ForwardResult<T> forward_with_taps(const BasicTensor<T>& input,
                                     const std::set<std::string>& taps) const;

  /// Injects each tap gradient at its layer and propagates to the input.
  BasicTensor<T> backward_from_taps(
      const std::map<std::string, BasicTensor<T>>& tap_gradients,
      const ForwardCache<T>& cache) const;

 private:
  BasicNetworkWeights<T> weights_;
  kernels::PoolMode pooling_;
};

using VggNetwork = BasicVggNetwork<float>;

struct PreprocessConfig {
  std::array<float, 3> channel_means = {123.68f, 116.779f, 103.939f};
};

/// RGB u8 image to a (3, H, W) tensor with per-channel means removed.
template <typename T = float>
BasicTensor<T> preprocess(const RgbImage& image,
                          const PreprocessConfig& config = {});

/// Adds the means back, rounds to nearest and clamps to [0, 255].
template <typename T = float>
RgbImage deprocess(const BasicTensor<T>& tensor,
                   const PreprocessConfig& config = {});

}  // namespace histostyle
