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

#include "histostyle/vgg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>

namespace histostyle {

namespace {

std::vector<LayerSpec> build_layers(std::size_t divisor) {
  if (divisor == 0) throw InvalidInput("channel divisor must be >= 1");
  // (block, convs in block, width)
  constexpr std::size_t kBlocks[5][2] = {{2, 64}, {2, 128}, {4, 256},
                                         {4, 512}, {1, 512}};
  std::vector<LayerSpec> layers;
  std::size_t in = 3;
  for (std::size_t b = 0; b < 5; ++b) {
    const std::size_t width = std::max<std::size_t>(
        1, (kBlocks[b][1] + divisor - 1) / divisor);
    for (std::size_t i = 0; i < kBlocks[b][0]; ++i) {
      const std::string suffix =
          std::to_string(b + 1) + "_" + std::to_string(i + 1);
      layers.push_back({"conv" + suffix, LayerKind::kConv, in, width});
      layers.push_back({"relu" + suffix, LayerKind::kRelu, 0, 0});
      in = width;
    }
    if (b < 4) {
      layers.push_back(
          {"pool" + std::to_string(b + 1), LayerKind::kPool, 0, 0});
    }
  }
  return layers;
}

std::atomic<std::uint64_t> next_generation{1};

}  // namespace

const std::vector<LayerSpec>& vgg19_layers() {
  static const std::vector<LayerSpec> layers = build_layers(1);
  return layers;
}

std::vector<LayerSpec> vgg19_layers(std::size_t channel_divisor) {
  return build_layers(channel_divisor);
}

NetworkWeights random_weights(const std::vector<LayerSpec>& layers,
                              std::uint64_t seed, float bias_scale) {
  NetworkWeights weights;
  weights.layers = layers;
  std::mt19937_64 rng(seed);
  for (const auto& layer : layers) {
    if (layer.kind != LayerKind::kConv) continue;
    const double fan_in = static_cast<double>(layer.channels_in) * 9.0;
    std::normal_distribution<float> kernel_dist(
        0.0f, static_cast<float>(std::sqrt(2.0 / fan_in)));
    std::uniform_real_distribution<float> bias_dist(-bias_scale, bias_scale);
    ConvWeights<float> w{
        Tensor(Shape{layer.channels_out, layer.channels_in, 3, 3}),
        std::vector<float>(layer.channels_out)};
    for (float& v : w.kernel.storage()) v = kernel_dist(rng);
    for (float& v : w.bias) v = bias_scale == 0.0f ? 0.0f : bias_dist(rng);
    weights.conv.emplace(layer.name, std::move(w));
  }
  return weights;
}

template <typename T>
BasicVggNetwork<T>::BasicVggNetwork(BasicNetworkWeights<T> weights,
                                    kernels::PoolMode pooling)
    : weights_(std::move(weights)), pooling_(pooling) {
  std::size_t in = 3;
  for (const auto& layer : weights_.layers) {
    if (layer.kind != LayerKind::kConv) continue;
    auto it = weights_.conv.find(layer.name);
    if (it == weights_.conv.end()) {
      throw IncompatibleWeights(layer.name, "no weights supplied");
    }
    const Shape expected{layer.channels_out, layer.channels_in, 3, 3};
    if (it->second.kernel.shape() != expected ||
        it->second.bias.size() != layer.channels_out ||
        layer.channels_in != in) {
      throw IncompatibleWeights(layer.name,
                                "kernel " + it->second.kernel.shape().to_string() +
                                    ", expected " + expected.to_string());
    }
    in = layer.channels_out;
  }
}

template <typename T>
std::size_t BasicVggNetwork<T>::layer_index(const std::string& name) const {
  const auto& ls = weights_.layers;
  auto it = std::find_if(ls.begin(), ls.end(),
                         [&](const LayerSpec& l) { return l.name == name; });
  if (it == ls.end()) throw InvalidInput("unknown tap '" + name + "'");
  return static_cast<std::size_t>(it - ls.begin());
}

template <typename T>
ForwardResult<T> BasicVggNetwork<T>::forward_with_taps(
    const BasicTensor<T>& input, const std::set<std::string>& taps) const {
  if (input.shape().rank() != 3 || input.channels() != 3) {
    throw InvalidInput("network input must be (3, H, W), got " +
                       input.shape().to_string());
  }
  if (input.height() == 0 || input.width() == 0) {
    throw InvalidInput("network input has zero spatial extent");
  }
  std::size_t depth = 0;
  for (const auto& tap : taps) depth = std::max(depth, layer_index(tap) + 1);

  ForwardResult<T> result;
  auto& cache = result.cache;
  cache.owner = this;
  cache.generation = next_generation++;
  cache.depth = depth;
  cache.taps = taps;
  cache.input_shapes.resize(depth);
  cache.preactivations.resize(depth);
  cache.routings.resize(depth);

  BasicTensor<T> current = input;
  for (std::size_t i = 0; i < depth; ++i) {
    const LayerSpec& layer = weights_.layers[i];
    cache.input_shapes[i] = current.shape();
    switch (layer.kind) {
      case LayerKind::kConv: {
        const auto& w = weights_.conv.at(layer.name);
        current = kernels::conv2d_forward(current, w.kernel,
                                          std::span<const T>(w.bias));
        cache.preactivations[i] = current;
        break;
      }
      case LayerKind::kRelu:
        current = kernels::relu_forward(current);
        break;
      case LayerKind::kPool: {
        auto pooled = kernels::pool2d_forward(current, pooling_);
        current = std::move(pooled.output);
        cache.routings[i] = std::move(pooled.routing);
        break;
      }
    }
    if (taps.count(layer.name)) result.taps.emplace(layer.name, current);
  }
  return result;
}

template <typename T>
BasicTensor<T> BasicVggNetwork<T>::backward_from_taps(
    const std::map<std::string, BasicTensor<T>>& tap_gradients,
    const ForwardCache<T>& cache) const {
  if (cache.owner != this || cache.generation == 0) {
    throw InvalidInput("forward cache is missing or belongs to another network");
  }
  std::size_t depth = 0;
  for (const auto& [name, grad] : tap_gradients) {
    if (!cache.taps.count(name)) {
      throw InvalidInput("tap '" + name + "' was not requested in the forward pass");
    }
    depth = std::max(depth, layer_index(name) + 1);
  }
  if (depth == 0) {
    if (cache.input_shapes.empty()) {
      throw InvalidInput("forward cache holds no input shape");
    }
    return BasicTensor<T>(cache.input_shapes.front());
  }

  BasicTensor<T> grad;
  for (std::size_t i = depth; i-- > 0;) {
    const LayerSpec& layer = weights_.layers[i];
    if (auto it = tap_gradients.find(layer.name); it != tap_gradients.end()) {
      if (grad.empty()) {
        grad = it->second;
      } else {
        if (grad.shape() != it->second.shape()) {
          throw InvalidInput("tap gradient shape mismatch at " + layer.name);
        }
        for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += it->second[k];
      }
    }
    if (grad.empty()) continue;
    switch (layer.kind) {
      case LayerKind::kConv:
        grad = kernels::conv2d_backward_input(
            grad, weights_.conv.at(layer.name).kernel, cache.input_shapes[i]);
        break;
      case LayerKind::kRelu:
        grad = kernels::relu_backward(grad, cache.preactivations[i - 1]);
        break;
      case LayerKind::kPool:
        grad = kernels::pool2d_backward(grad, cache.routings[i]);
        break;
    }
  }
  return grad;
}

template <typename T>
BasicTensor<T> preprocess(const RgbImage& image, const PreprocessConfig& config) {
  const std::size_t w = image.width(), h = image.height();
  BasicTensor<T> out(Shape{3, h, w});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::uint8_t* p = image.pixel(x, y);
      for (std::size_t c = 0; c < 3; ++c) {
        out.at(c, y, x) =
            static_cast<T>(p[c]) - static_cast<T>(config.channel_means[c]);
      }
    }
  }
  return out;
}

template <typename T>
RgbImage deprocess(const BasicTensor<T>& tensor, const PreprocessConfig& config) {
  if (tensor.shape().rank() != 3 || tensor.channels() != 3) {
    throw InvalidInput("deprocess expects (3, H, W), got " +
                       tensor.shape().to_string());
  }
  const std::size_t w = tensor.width(), h = tensor.height();
  RgbImage image(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      std::uint8_t* p = image.pixel(x, y);
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = std::round(static_cast<double>(tensor.at(c, y, x)) +
                                    static_cast<double>(static_cast<T>(
                                        config.channel_means[c])));
        p[c] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
      }
    }
  }
  return image;
}

template class BasicVggNetwork<float>;
template class BasicVggNetwork<double>;
template Tensor preprocess<float>(const RgbImage&, const PreprocessConfig&);
template BasicTensor<double> preprocess<double>(const RgbImage&,
                                                const PreprocessConfig&);
template RgbImage deprocess<float>(const Tensor&, const PreprocessConfig&);
template RgbImage deprocess<double>(const BasicTensor<double>&,
                                    const PreprocessConfig&);

}  // namespace histostyle
