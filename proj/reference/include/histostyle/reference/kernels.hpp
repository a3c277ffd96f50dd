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

// Serial, loop-for-loop reference kernels. Only tests and benchmarks link
// this; the library never calls it.

#pragma once

#include <algorithm>
#include <cstddef>
#include <span>

#include "histostyle/tensor.hpp"

namespace histostyle::reference {

/// Six-nested-loop direct convolution with zero padding.
template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input,
                              const BasicTensor<T>& weights,
                              std::span<const T> bias, std::size_t stride,
                              std::size_t padding) {
  const std::size_t cin = input.channels(), h = input.height(),
                    w = input.width();
  const std::size_t cout = weights.shape()[0], kh = weights.shape()[2],
                    kw = weights.shape()[3];
  const std::size_t oh = (h + 2 * padding - kh) / stride + 1;
  const std::size_t ow = (w + 2 * padding - kw) / stride + 1;
  BasicTensor<T> out(Shape{cout, oh, ow});
  for (std::size_t co = 0; co < cout; ++co) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double acc = bias.empty() ? 0.0 : static_cast<double>(bias[co]);
        for (std::size_t ci = 0; ci < cin; ++ci) {
          for (std::size_t ky = 0; ky < kh; ++ky) {
            for (std::size_t kx = 0; kx < kw; ++kx) {
              const auto iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                              static_cast<std::ptrdiff_t>(padding);
              const auto ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                              static_cast<std::ptrdiff_t>(padding);
              if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(h) ||
                  ix >= static_cast<std::ptrdiff_t>(w)) {
                continue;
              }
              acc += static_cast<double>(input.at(ci, iy, ix)) *
                     weights[((co * cin + ci) * kh + ky) * kw + kx];
            }
          }
        }
        out.at(co, oy, ox) = static_cast<T>(acc);
      }
    }
  }
  return out;
}

/// Scatter form of the input gradient: every output gradient is spread back
/// over the input window that produced it.
template <typename T>
BasicTensor<T> conv2d_backward_input(const BasicTensor<T>& grad_output,
                                     const BasicTensor<T>& weights,
                                     const Shape& input_shape,
                                     std::size_t stride, std::size_t padding) {
  const std::size_t cin = input_shape[0], h = input_shape[1],
                    w = input_shape[2];
  const std::size_t cout = weights.shape()[0], kh = weights.shape()[2],
                    kw = weights.shape()[3];
  const std::size_t oh = grad_output.height(), ow = grad_output.width();
  BasicTensor<double> acc(input_shape);
  for (std::size_t co = 0; co < cout; ++co) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const double g = grad_output.at(co, oy, ox);
        for (std::size_t ci = 0; ci < cin; ++ci) {
          for (std::size_t ky = 0; ky < kh; ++ky) {
            for (std::size_t kx = 0; kx < kw; ++kx) {
              const auto iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                              static_cast<std::ptrdiff_t>(padding);
              const auto ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                              static_cast<std::ptrdiff_t>(padding);
              if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(h) ||
                  ix >= static_cast<std::ptrdiff_t>(w)) {
                continue;
              }
              acc.at(ci, iy, ix) +=
                  g * weights[((co * cin + ci) * kh + ky) * kw + kx];
            }
          }
        }
      }
    }
  }
  return acc.template cast<T>();
}

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& input) {
  BasicTensor<T> out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    out[i] = std::max(input[i], T(0));
  }
  return out;
}

/// Max or average 2x2/stride-2 pooling with edge replication for odd sizes.
template <typename T>
BasicTensor<T> pool2d_forward(const BasicTensor<T>& input, bool max_mode) {
  const std::size_t c = input.channels(), h = input.height(),
                    w = input.width();
  const std::size_t oh = (h + 1) / 2, ow = (w + 1) / 2;
  BasicTensor<T> out(Shape{c, oh, ow});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        T best = input.at(ch, 2 * oy, 2 * ox);
        T sum = 0;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t y = std::min(2 * oy + dy, h - 1);
            const std::size_t x = std::min(2 * ox + dx, w - 1);
            best = std::max(best, input.at(ch, y, x));
            sum += input.at(ch, y, x);
          }
        }
        out.at(ch, oy, ox) = max_mode ? best : sum / T(4);
      }
    }
  }
  return out;
}

/// Brute-force double loop, accumulated in double.
template <typename T>
BasicGramMatrix<T> gram_matrix(const BasicTensor<T>& f) {
  const std::size_t n = f.channels(), m = f.plane();
  BasicGramMatrix<T> g{n, m, std::vector<T>(n * n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0;
      for (std::size_t k = 0; k < m; ++k) {
        acc += static_cast<double>(f[i * m + k]) * f[j * m + k];
      }
      g.values[i * n + j] = static_cast<T>(acc);
    }
  }
  return g;
}

}  // namespace histostyle::reference
