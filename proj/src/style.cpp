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

#include "histostyle/style.hpp"

#include <chrono>
#include <cmath>
#include <random>

namespace histostyle {

std::string_view to_string(kernels::PoolMode mode) {
  return mode == kernels::PoolMode::kMax ? "max" : "average";
}

std::string_view to_string(InitMode mode) {
  return mode == InitMode::kContent ? "content" : "noise";
}

std::string_view to_string(lbfgs::Termination termination) {
  switch (termination) {
    case lbfgs::Termination::kIterationLimit: return "iteration_limit";
    case lbfgs::Termination::kGradientTolerance: return "gradient_tolerance";
    case lbfgs::Termination::kLineSearchFailure: return "line_search_failure";
  }
  return "unknown";
}

void StyleTransferConfig::validate() const {
  if (!(alpha >= 0)) throw InvalidInput("alpha must be >= 0");
  if (layer_weights.size() != style_taps.size()) {
    throw InvalidInput("layer_weights has " +
                       std::to_string(layer_weights.size()) + " entries for " +
                       std::to_string(style_taps.size()) + " style taps");
  }
  if (history_size < 1) throw InvalidInput("history_size must be >= 1");
}

nlohmann::json to_json(const StyleTransferConfig& c) {
  return {
      {"alpha", c.alpha},
      {"layer_weights", c.layer_weights},
      {"iterations", c.iterations},
      {"content_tap", c.content_tap},
      {"style_taps", c.style_taps},
      {"init_mode", to_string(c.init_mode)},
      {"pooling", to_string(c.pooling)},
      {"style_normalization", c.style_normalization},
      {"seed", c.seed},
      {"bounded", c.bounded},
      {"history_size", c.history_size},
  };
}

double LossBreakdown::recombine(double alpha,
                                const std::vector<double>& weights) const {
  double style = 0.0;
  for (std::size_t i = 0; i < style_loss_per_layer.size(); ++i) {
    style += weights[i] * style_loss_per_layer[i];
  }
  return content_loss + alpha * style;
}

nlohmann::json to_json(const LossBreakdown& loss) {
  return {{"content", loss.content_loss},
          {"style", loss.style_loss_per_layer},
          {"total", loss.total}};
}

template <typename T>
BasicStyleEngine<T>::BasicStyleEngine(const BasicVggNetwork<T>& network,
                                      StyleTransferConfig config)
    : network_(network), config_(std::move(config)) {
  config_.validate();
  taps_.insert(config_.content_tap);
  taps_.insert(config_.style_taps.begin(), config_.style_taps.end());
  for (const auto& tap : taps_) network_.layer_index(tap);
}

template <typename T>
ContentRepresentation<T> BasicStyleEngine<T>::content_representation(
    const BasicTensor<T>& image) const {
  auto fwd = network_.forward_with_taps(image, {config_.content_tap});
  return {std::move(fwd.taps.at(config_.content_tap))};
}

template <typename T>
StyleRepresentation<T> BasicStyleEngine<T>::style_representation(
    const BasicTensor<T>& image) const {
  const std::set<std::string> taps(config_.style_taps.begin(),
                                   config_.style_taps.end());
  auto fwd = network_.forward_with_taps(image, taps);
  StyleRepresentation<T> rep;
  for (const auto& tap : config_.style_taps) {
    rep.grams.push_back(kernels::gram_matrix(fwd.taps.at(tap)));
  }
  return rep;
}

template <typename T>
std::pair<LossBreakdown, BasicTensor<T>>
BasicStyleEngine<T>::total_loss_and_gradient(
    const BasicTensor<T>& target, const ContentRepresentation<T>& content,
    const StyleRepresentation<T>& style) const {
  if (style.grams.size() != config_.style_taps.size()) {
    throw InvalidInput("style representation has the wrong number of layers");
  }
  auto fwd = network_.forward_with_taps(target, taps_);
  std::map<std::string, BasicTensor<T>> tap_grads;
  auto add_grad = [&](const std::string& tap, BasicTensor<T> g) {
    auto [it, inserted] = tap_grads.try_emplace(tap, std::move(g));
    if (!inserted) {
      for (std::size_t k = 0; k < it->second.size(); ++k) it->second[k] += g[k];
    }
  };

  LossBreakdown loss;

  const BasicTensor<T>& c_target = fwd.taps.at(config_.content_tap);
  if (c_target.shape() != content.tensor.shape()) {
    throw InvalidInput("target spatial size does not match the content image: " +
                       c_target.shape().to_string() + " vs " +
                       content.tensor.shape().to_string());
  }
  {
    BasicTensor<T> diff(c_target.shape());
    double sum = 0.0;
    for (std::size_t k = 0; k < diff.size(); ++k) {
      diff[k] = c_target[k] - content.tensor[k];
      sum += static_cast<double>(diff[k]) * diff[k];
    }
    loss.content_loss = 0.5 * sum;
    add_grad(config_.content_tap, std::move(diff));
  }

  double style_total = 0.0;
  for (std::size_t i = 0; i < config_.style_taps.size(); ++i) {
    const std::string& tap = config_.style_taps[i];
    const BasicTensor<T>& features = fwd.taps.at(tap);
    const BasicGramMatrix<T> g_target = kernels::gram_matrix(features);
    const BasicGramMatrix<T>& g_style = style.grams[i];
    if (g_style.n_channels != g_target.n_channels) {
      throw InvalidInput("style Gram at " + tap + " has " +
                         std::to_string(g_style.n_channels) + " channels, expected " +
                         std::to_string(g_target.n_channels));
    }
    const std::size_t n = g_target.n_channels;
    const double weight = config_.alpha * config_.layer_weights[i];

    // E = scale * sum D^2, dE/dG_target = 2 * scale * D / m_target.
    double m_target = 1.0, m_style = 1.0, scale = 1.0;
    if (config_.style_normalization) {
      m_target = static_cast<double>(g_target.m_spatial);
      m_style = static_cast<double>(g_style.m_spatial);
      scale = 1.0 / (4.0 * static_cast<double>(n) * static_cast<double>(n));
    }
    std::vector<T> grad_gram(n * n);
    double sum = 0.0;
    for (std::size_t k = 0; k < n * n; ++k) {
      const double d = static_cast<double>(g_target.values[k]) / m_target -
                       static_cast<double>(g_style.values[k]) / m_style;
      sum += d * d;
      grad_gram[k] = static_cast<T>(weight * 2.0 * scale * d / m_target);
    }
    const double layer_loss = scale * sum;
    loss.style_loss_per_layer.push_back(layer_loss);
    style_total += config_.layer_weights[i] * layer_loss;
    if (weight != 0.0) {
      add_grad(tap, kernels::gram_backward(features,
                                           std::span<const T>(grad_gram)));
    }
  }
  loss.total = loss.content_loss + config_.alpha * style_total;

  BasicTensor<T> grad = network_.backward_from_taps(tap_grads, fwd.cache);
  return {std::move(loss), std::move(grad)};
}

template class BasicStyleEngine<float>;
template class BasicStyleEngine<double>;

StyleTransferResult run_style_transfer(const RgbImage& content,
                                       const RgbImage& style,
                                       const NetworkWeights& weights,
                                       const StyleTransferConfig& config,
                                       const PreprocessConfig& preprocess_config) {
  const auto started = std::chrono::steady_clock::now();
  config.validate();
  const VggNetwork network(weights, config.pooling);
  const StyleEngine engine(network, config);

  const Tensor content_pixels = preprocess(content, preprocess_config);
  const auto content_ref = engine.content_representation(content_pixels);
  const auto style_ref =
      engine.style_representation(preprocess(style, preprocess_config));

  Tensor init = content_pixels;
  if (config.init_mode == InitMode::kNoise) {
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> pixel(0.0, 255.0);
    for (std::size_t c = 0; c < 3; ++c) {
      for (float& v : init.channel(c)) {
        v = static_cast<float>(pixel(rng) - preprocess_config.channel_means[c]);
      }
    }
  }

  const Shape shape = init.shape();
  const std::size_t plane = init.plane();

  lbfgs::Config opt;
  opt.history_size = config.history_size;
  opt.max_iterations = config.iterations;
  opt.gradient_tolerance = 0.0;
  if (config.bounded) {
    lbfgs::Bounds bounds{lbfgs::Vector(init.size()), lbfgs::Vector(init.size())};
    for (std::size_t c = 0; c < 3; ++c) {
      const auto mean = static_cast<double>(
          static_cast<float>(preprocess_config.channel_means[c]));
      for (std::size_t k = 0; k < plane; ++k) {
        bounds.lower[c * plane + k] = -mean;
        bounds.upper[c * plane + k] = 255.0 - mean;
      }
    }
    opt.bounds = std::move(bounds);
  }

  // Breakdowns of recent evaluations, matched to accepted iterates by value.
  std::vector<LossBreakdown> recent;
  const std::size_t keep = opt.line_search_budget + 64;
  auto objective = [&](std::span<const double> x, std::span<double> grad) {
    Tensor target(shape, std::vector<float>(x.begin(), x.end()));
    auto [loss, g] = engine.total_loss_and_gradient(target, content_ref, style_ref);
    std::copy(g.storage().begin(), g.storage().end(), grad.begin());
    const double total = loss.total;
    recent.push_back(std::move(loss));
    if (recent.size() > keep) recent.erase(recent.begin());
    return total;
  };

  StyleTransferResult result;
  auto find_breakdown = [&](double value) {
    for (auto it = recent.rbegin(); it != recent.rend(); ++it) {
      if (it->total == value) return *it;
    }
    LossBreakdown fallback;
    fallback.total = value;
    return fallback;
  };
  auto on_iteration = [&](std::size_t, double value) {
    result.trace.push_back(find_breakdown(value));
  };

  lbfgs::Vector x0(init.storage().begin(), init.storage().end());
  // The starting breakdown is the first evaluation minimize performs.
  auto opt_result = lbfgs::minimize(
      [&](std::span<const double> x, std::span<double> g) {
        const double v = objective(x, g);
        if (result.trace.empty()) result.trace.push_back(recent.back());
        return v;
      },
      std::move(x0), opt, on_iteration);

  Tensor best(shape, std::vector<float>(opt_result.x.begin(), opt_result.x.end()));
  result.image = deprocess(best, preprocess_config);
  result.iterations = opt_result.iterations;
  result.evaluations = opt_result.evaluations;
  result.termination = opt_result.termination;
  result.warning = opt_result.warning;
  result.wall_seconds = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - started)
                            .count();
  return result;
}

nlohmann::json run_metadata(const StyleTransferConfig& config,
                            const NetworkWeights& weights,
                            const StyleTransferResult& result) {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& step : result.trace) trace.push_back(to_json(step));
  return {
      {"config", to_json(config)},
      {"weights_crc32", weights.checksum},
      {"iterations_run", result.iterations},
      {"function_evaluations", result.evaluations},
      {"termination", to_string(result.termination)},
      {"warning", result.warning},
      {"initial_loss",
       result.trace.empty() ? nlohmann::json() : to_json(result.trace.front())},
      {"final_loss",
       result.trace.empty() ? nlohmann::json() : to_json(result.trace.back())},
      {"wall_seconds", result.wall_seconds},
      {"loss_trace", std::move(trace)},
  };
}

}  // namespace histostyle
