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

// Content/style representations, the combined loss and its pixel gradient,
// and the optimization loop that produces a stylized image.
//
//   total = 1/2 sum (C_content - C_target)^2
//         + alpha * sum_i w_i * E_i
//
// with E_i = sum (G_style - G_target)^2 per style tap. When style
// normalization is on, each Gram is divided by its spatial size M and the
// sum by 4 N^2, which is 1/(4 N^2 M^2) scaling for equal-size images.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "histostyle/image.hpp"
#include "histostyle/lbfgs.hpp"
#include "histostyle/vgg.hpp"

namespace histostyle {

enum class InitMode { kContent, kNoise };

struct StyleTransferConfig {
  double alpha = 100.0;
  std::vector<double> layer_weights = {0.2, 0.2, 0.2, 0.2, 0.2};
  std::size_t iterations = 1600;
  std::string content_tap = kContentTap;
  std::vector<std::string> style_taps = {kStyleTaps.begin(), kStyleTaps.end()};
  InitMode init_mode = InitMode::kContent;
  kernels::PoolMode pooling = kernels::PoolMode::kMax;
  bool style_normalization = true;
  std::uint64_t seed = 0;
  /// Keep pixels inside [0, 255] during optimization.
  bool bounded = true;
  std::size_t history_size = 10;

  void validate() const;
};

nlohmann::json to_json(const StyleTransferConfig& config);

template <typename T>
struct ContentRepresentation {
  BasicTensor<T> tensor;
};

template <typename T>
struct StyleRepresentation {
  std::vector<BasicGramMatrix<T>> grams;  // in style_taps order
};

struct LossBreakdown {
  double content_loss = 0.0;
  std::vector<double> style_loss_per_layer;
  double total = 0.0;

  /// content + alpha * sum_i w_i * style_i, recomputed from the parts.
  double recombine(double alpha, const std::vector<double>& weights) const;
};

nlohmann::json to_json(const LossBreakdown& loss);

template <typename T>
class BasicStyleEngine {
 public:
  BasicStyleEngine(const BasicVggNetwork<T>& network,
                   StyleTransferConfig config);

  const StyleTransferConfig& config() const noexcept { return config_; }

  ContentRepresentation<T> content_representation(
      const BasicTensor<T>& image) const;
  StyleRepresentation<T> style_representation(
      const BasicTensor<T>& image) const;

  /// Loss at `target` and its gradient with respect to the (preprocessed)
  /// target pixels.
  std::pair<LossBreakdown, BasicTensor<T>> total_loss_and_gradient(
      const BasicTensor<T>& target, const ContentRepresentation<T>& content,
      const StyleRepresentation<T>& style) const;

 private:
  const BasicVggNetwork<T>& network_;
  StyleTransferConfig config_;
  std::set<std::string> taps_;
};

using StyleEngine = BasicStyleEngine<float>;

struct StyleTransferResult {
  RgbImage image;
  /// Breakdown at the starting point followed by each accepted iteration.
  std::vector<LossBreakdown> trace;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  lbfgs::Termination termination = lbfgs::Termination::kIterationLimit;
  bool warning = false;
  double wall_seconds = 0.0;
};

/// Full optimization: initialize the target, minimize with L-BFGS for
/// config.iterations outer iterations, return the deprocessed target.
StyleTransferResult run_style_transfer(const RgbImage& content,
                                       const RgbImage& style,
                                       const NetworkWeights& weights,
                                       const StyleTransferConfig& config,
                                       const PreprocessConfig& preprocess = {});

/// JSON sidecar written next to each stylized image.
nlohmann::json run_metadata(const StyleTransferConfig& config,
                            const NetworkWeights& weights,
                            const StyleTransferResult& result);

std::string_view to_string(kernels::PoolMode mode);
std::string_view to_string(InitMode mode);
std::string_view to_string(lbfgs::Termination termination);

}  // namespace histostyle
