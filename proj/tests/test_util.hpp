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

// Shared helpers for the unit and acceptance suites.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "histostyle/image.hpp"
#include "histostyle/tensor.hpp"

namespace histostyle::testing {

template <typename T>
BasicTensor<T> random_tensor(const Shape& shape, std::uint64_t seed,
                             double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  BasicTensor<T> t(shape);
  for (auto& v : t.storage()) v = static_cast<T>(dist(rng));
  return t;
}

inline RgbImage random_image(std::size_t w, std::size_t h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  RgbImage img(w, h);
  for (auto& b : img.bytes()) b = static_cast<std::uint8_t>(rng() & 0xff);
  return img;
}

/// max_i |a_i - b_i| / max(||b||_inf, tiny): error relative to the scale of
/// the reference vector.
template <typename A, typename B>
double max_relative_error(const A& a, const B& b) {
  double scale = 0.0, err = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    scale = std::max(scale, std::abs(static_cast<double>(b[i])));
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    err = std::max(err, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  }
  return err / std::max(scale, 1e-12);
}

/// Central finite differences of a scalar function of a tensor, at every
/// element listed in `indices` (all elements when empty).
template <typename T>
std::vector<double> central_differences(
    const std::function<double(const BasicTensor<T>&)>& f, BasicTensor<T> x,
    double step, const std::vector<std::size_t>& indices = {}) {
  std::vector<std::size_t> idx = indices;
  if (idx.empty()) {
    idx.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) idx[i] = i;
  }
  std::vector<double> grad(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const T saved = x[idx[k]];
    x[idx[k]] = static_cast<T>(saved + step);
    const double up = f(x);
    x[idx[k]] = static_cast<T>(saved - step);
    const double down = f(x);
    x[idx[k]] = saved;
    grad[k] = (up - down) / (2.0 * step);
  }
  return grad;
}

template <typename T>
double inner(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

/// Fresh directory under $HISTOSTYLE_TEST_TMP (or the system temp dir).
inline std::filesystem::path make_temp_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const char* root = std::getenv("HISTOSTYLE_TEST_TMP");
  std::filesystem::path base =
      root ? std::filesystem::path(root) : std::filesystem::temp_directory_path();
  std::random_device rd;
  auto dir = base / (tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace histostyle::testing
