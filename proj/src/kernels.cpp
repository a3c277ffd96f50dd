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

#include "histostyle/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

namespace histostyle {

std::string Shape::to_string() const {
  std::string s = "(";
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(dims_[i]);
  }
  return s + ")";
}

namespace kernels {
namespace {

// Output pixels per im2col tile and input-depth rows per GEMM block. The col
// block (kBlockK x kTilePixels) is sized to stay in L2.
constexpr std::size_t kTilePixels = 512;
constexpr std::size_t kBlockK = 64;

void require_rank(const Shape& s, std::size_t rank, const char* what) {
  if (s.rank() != rank) {
    throw InvalidInput(std::string(what) + " must have rank " +
                       std::to_string(rank) + ", got " + s.to_string());
  }
}

struct ConvGeometry {
  std::size_t in_c, in_h, in_w;
  std::size_t out_c, k_h, k_w;
  std::size_t stride, pad_h, pad_w;
  std::size_t out_h, out_w;
};

ConvGeometry make_geometry(const Shape& input, const Shape& weights,
                           std::size_t stride, std::size_t pad_h,
                           std::size_t pad_w) {
  require_rank(input, 3, "convolution input");
  require_rank(weights, 4, "convolution weights");
  if (stride == 0) throw InvalidInput("convolution stride must be >= 1");
  if (weights[1] != input[0]) {
    throw InvalidInput("convolution weights expect " +
                       std::to_string(weights[1]) + " input channels, got " +
                       std::to_string(input[0]));
  }
  if (input[1] + 2 * pad_h < weights[2] || input[2] + 2 * pad_w < weights[3]) {
    throw InvalidInput("convolution kernel larger than padded input");
  }
  ConvGeometry g{};
  g.in_c = input[0];
  g.in_h = input[1];
  g.in_w = input[2];
  g.out_c = weights[0];
  g.k_h = weights[2];
  g.k_w = weights[3];
  g.stride = stride;
  g.pad_h = pad_h;
  g.pad_w = pad_w;
  g.out_h = (g.in_h + 2 * pad_h - g.k_h) / stride + 1;
  g.out_w = (g.in_w + 2 * pad_w - g.k_w) / stride + 1;
  return g;
}

// Fills col[k][p] for output pixels [p0, p0 + count) where k runs over
// (channel, ky, kx). Out-of-image taps read as zero.
template <typename T>
void im2col_tile(const T* input, const ConvGeometry& g, std::size_t p0,
                 std::size_t count, T* col) {
  const std::size_t kk = g.k_h * g.k_w;
  for (std::size_t c = 0; c < g.in_c; ++c) {
    const T* plane = input + c * g.in_h * g.in_w;
    for (std::size_t ky = 0; ky < g.k_h; ++ky) {
      for (std::size_t kx = 0; kx < g.k_w; ++kx) {
        T* row = col + (c * kk + ky * g.k_w + kx) * count;
        for (std::size_t i = 0; i < count; ++i) {
          const std::size_t p = p0 + i;
          const std::size_t oy = p / g.out_w;
          const std::size_t ox = p % g.out_w;
          const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                          static_cast<std::ptrdiff_t>(g.pad_h);
          const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                          static_cast<std::ptrdiff_t>(g.pad_w);
          const bool inside = iy >= 0 && ix >= 0 &&
                              iy < static_cast<std::ptrdiff_t>(g.in_h) &&
                              ix < static_cast<std::ptrdiff_t>(g.in_w);
          row[i] = inside ? plane[iy * g.in_w + ix] : T(0);
        }
      }
    }
  }
}

// Tiled im2col + GEMM. Every output element accumulates its K products in
// ascending k order starting from zero, then adds the bias, independent of
// tiling and thread count.
template <typename T>
BasicTensor<T> conv_impl(const BasicTensor<T>& input,
                         const BasicTensor<T>& weights, std::span<const T> bias,
                         std::size_t stride, std::size_t pad_h,
                         std::size_t pad_w) {
  const ConvGeometry g =
      make_geometry(input.shape(), weights.shape(), stride, pad_h, pad_w);
  if (!bias.empty() && bias.size() != g.out_c) {
    throw InvalidInput("bias length " + std::to_string(bias.size()) +
                       " does not match " + std::to_string(g.out_c) +
                       " output channels");
  }
  BasicTensor<T> output(Shape{g.out_c, g.out_h, g.out_w});
  const std::size_t pixels = g.out_h * g.out_w;
  const std::size_t depth = g.in_c * g.k_h * g.k_w;
  const auto tiles =
      static_cast<std::int64_t>((pixels + kTilePixels - 1) / kTilePixels);
  const T* in = input.data();
  const T* w = weights.data();
  T* out = output.data();

#pragma omp parallel
  {
    std::vector<T> col(depth * std::min(kTilePixels, pixels));
#pragma omp for schedule(static)
    for (std::int64_t t = 0; t < tiles; ++t) {
      const std::size_t p0 = static_cast<std::size_t>(t) * kTilePixels;
      const std::size_t count = std::min(kTilePixels, pixels - p0);
      im2col_tile(in, g, p0, count, col.data());
      for (std::size_t k0 = 0; k0 < depth; k0 += kBlockK) {
        const std::size_t k1 = std::min(depth, k0 + kBlockK);
        for (std::size_t co = 0; co < g.out_c; ++co) {
          T* o = out + co * pixels + p0;
          const T* wrow = w + co * depth;
          for (std::size_t k = k0; k < k1; ++k) {
            const T wk = wrow[k];
            const T* c = col.data() + k * count;
            for (std::size_t i = 0; i < count; ++i) o[i] += wk * c[i];
          }
        }
      }
      if (!bias.empty()) {
        for (std::size_t co = 0; co < g.out_c; ++co) {
          T* o = out + co * pixels + p0;
          const T b = bias[co];
          for (std::size_t i = 0; i < count; ++i) o[i] += b;
        }
      }
    }
  }
  return output;
}

void check_grad_output_shape(const ConvGeometry& g, const Shape& grad) {
  const Shape expected{g.out_c, g.out_h, g.out_w};
  if (grad != expected) {
    throw InvalidInput("grad_output shape " + grad.to_string() +
                       " does not match convolution output " +
                       expected.to_string());
  }
}

// Direct gather, used when the transpose-convolution identity does not apply
// (stride > 1 or padding >= kernel size).
template <typename T>
BasicTensor<T> conv_backward_gather(const BasicTensor<T>& grad_output,
                                    const BasicTensor<T>& weights,
                                    const ConvGeometry& g) {
  BasicTensor<T> grad_input(Shape{g.in_c, g.in_h, g.in_w});
  const T* go = grad_output.data();
  const T* w = weights.data();
  T* gi = grad_input.data();
  const auto channels = static_cast<std::int64_t>(g.in_c);
#pragma omp parallel for schedule(static)
  for (std::int64_t ci64 = 0; ci64 < channels; ++ci64) {
    const auto ci = static_cast<std::size_t>(ci64);
    for (std::size_t y = 0; y < g.in_h; ++y) {
      for (std::size_t x = 0; x < g.in_w; ++x) {
        T acc = 0;
        for (std::size_t co = 0; co < g.out_c; ++co) {
          const T* wk = w + (co * g.in_c + ci) * g.k_h * g.k_w;
          const T* gplane = go + co * g.out_h * g.out_w;
          for (std::size_t ky = 0; ky < g.k_h; ++ky) {
            const std::size_t ny = y + g.pad_h;
            if (ny < ky || (ny - ky) % g.stride != 0) continue;
            const std::size_t oy = (ny - ky) / g.stride;
            if (oy >= g.out_h) continue;
            for (std::size_t kx = 0; kx < g.k_w; ++kx) {
              const std::size_t nx = x + g.pad_w;
              if (nx < kx || (nx - kx) % g.stride != 0) continue;
              const std::size_t ox = (nx - kx) / g.stride;
              if (ox >= g.out_w) continue;
              acc += gplane[oy * g.out_w + ox] * wk[ky * g.k_w + kx];
            }
          }
        }
        gi[(ci * g.in_h + y) * g.in_w + x] = acc;
      }
    }
  }
  return grad_input;
}

}  // namespace

std::size_t conv_output_extent(std::size_t input, std::size_t kernel,
                               std::size_t stride, std::size_t padding) {
  if (stride == 0 || input + 2 * padding < kernel) {
    throw InvalidInput("invalid convolution geometry");
  }
  return (input + 2 * padding - kernel) / stride + 1;
}

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input,
                              const BasicTensor<T>& weights,
                              std::span<const T> bias, ConvParams params) {
  return conv_impl(input, weights, bias, params.stride, params.padding,
                   params.padding);
}

template <typename T>
BasicTensor<T> conv2d_backward_input(const BasicTensor<T>& grad_output,
                                     const BasicTensor<T>& weights,
                                     const Shape& input_shape,
                                     ConvParams params) {
  const ConvGeometry g = make_geometry(input_shape, weights.shape(),
                                       params.stride, params.padding,
                                       params.padding);
  check_grad_output_shape(g, grad_output.shape());
  if (params.stride != 1 || params.padding >= g.k_h ||
      params.padding >= g.k_w) {
    return conv_backward_gather(grad_output, weights, g);
  }
  // Stride 1: the input gradient is a forward convolution of grad_output with
  // the kernel transposed over channels and rotated 180 degrees, padded by
  // k - 1 - padding.
  BasicTensor<T> flipped(Shape{g.in_c, g.out_c, g.k_h, g.k_w});
  const std::size_t kk = g.k_h * g.k_w;
  for (std::size_t co = 0; co < g.out_c; ++co) {
    for (std::size_t ci = 0; ci < g.in_c; ++ci) {
      const T* src = weights.data() + (co * g.in_c + ci) * kk;
      T* dst = flipped.data() + (ci * g.out_c + co) * kk;
      for (std::size_t i = 0; i < kk; ++i) dst[i] = src[kk - 1 - i];
    }
  }
  BasicTensor<T> grad_input =
      conv_impl(grad_output, flipped, std::span<const T>{}, 1,
                g.k_h - 1 - params.padding, g.k_w - 1 - params.padding);
  return grad_input;
}

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& input) {
  BasicTensor<T> output(input.shape());
  const T* in = input.data();
  T* out = output.data();
  const auto n = static_cast<std::int64_t>(input.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) out[i] = in[i] > T(0) ? in[i] : T(0);
  return output;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& grad_output,
                             const BasicTensor<T>& input) {
  if (grad_output.shape() != input.shape()) {
    throw InvalidInput("relu_backward shape mismatch: " +
                       grad_output.shape().to_string() + " vs " +
                       input.shape().to_string());
  }
  BasicTensor<T> grad_input(input.shape());
  const T* g = grad_output.data();
  const T* in = input.data();
  T* out = grad_input.data();
  const auto n = static_cast<std::int64_t>(input.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) out[i] = in[i] > T(0) ? g[i] : T(0);
  return grad_input;
}

template <typename T>
PoolResult<T> pool2d_forward(const BasicTensor<T>& input, PoolMode mode) {
  require_rank(input.shape(), 3, "pooling input");
  const std::size_t c = input.channels(), h = input.height(),
                    w = input.width();
  if (h == 0 || w == 0) throw InvalidInput("pooling input has zero extent");
  const std::size_t oh = (h + 1) / 2, ow = (w + 1) / 2;
  PoolResult<T> result{BasicTensor<T>(Shape{c, oh, ow}),
                       PoolRouting{mode, input.shape(), Shape{c, oh, ow}, {}}};
  if (mode == PoolMode::kMax) result.routing.argmax.resize(c * oh * ow);
  const T* in = input.data();
  T* out = result.output.data();
  std::uint32_t* arg = result.routing.argmax.data();
  const auto channels = static_cast<std::int64_t>(c);
#pragma omp parallel for schedule(static)
  for (std::int64_t ch = 0; ch < channels; ++ch) {
    const std::size_t base = static_cast<std::size_t>(ch) * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      const std::size_t y0 = 2 * oy, y1 = std::min(2 * oy + 1, h - 1);
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const std::size_t x0 = 2 * ox, x1 = std::min(2 * ox + 1, w - 1);
        const std::size_t idx[4] = {base + y0 * w + x0, base + y0 * w + x1,
                                    base + y1 * w + x0, base + y1 * w + x1};
        const std::size_t o = (static_cast<std::size_t>(ch) * oh + oy) * ow + ox;
        if (mode == PoolMode::kMax) {
          std::size_t best = idx[0];
          for (int k = 1; k < 4; ++k) {
            if (in[idx[k]] > in[best]) best = idx[k];
          }
          out[o] = in[best];
          arg[o] = static_cast<std::uint32_t>(best);
        } else {
          out[o] = (in[idx[0]] + in[idx[1]] + in[idx[2]] + in[idx[3]]) * T(0.25);
        }
      }
    }
  }
  return result;
}

template <typename T>
BasicTensor<T> pool2d_backward(const BasicTensor<T>& grad_output,
                               const PoolRouting& routing) {
  if (grad_output.shape() != routing.output_shape) {
    throw InvalidInput("pool2d_backward grad shape " +
                       grad_output.shape().to_string() +
                       " does not match pooled shape " +
                       routing.output_shape.to_string());
  }
  BasicTensor<T> grad_input(routing.input_shape);
  const std::size_t c = routing.input_shape[0], h = routing.input_shape[1],
                    w = routing.input_shape[2];
  const std::size_t oh = routing.output_shape[1], ow = routing.output_shape[2];
  const T* g = grad_output.data();
  T* gi = grad_input.data();
  const auto channels = static_cast<std::int64_t>(c);
  // Windows never share source pixels (replicated edges stay inside their own
  // window), so channels can be scattered in parallel.
#pragma omp parallel for schedule(static)
  for (std::int64_t ch = 0; ch < channels; ++ch) {
    const std::size_t base = static_cast<std::size_t>(ch) * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const std::size_t o = (static_cast<std::size_t>(ch) * oh + oy) * ow + ox;
        if (routing.mode == PoolMode::kMax) {
          gi[routing.argmax[o]] += g[o];
        } else {
          const std::size_t y0 = 2 * oy, y1 = std::min(2 * oy + 1, h - 1);
          const std::size_t x0 = 2 * ox, x1 = std::min(2 * ox + 1, w - 1);
          const T share = g[o] * T(0.25);
          gi[base + y0 * w + x0] += share;
          gi[base + y0 * w + x1] += share;
          gi[base + y1 * w + x0] += share;
          gi[base + y1 * w + x1] += share;
        }
      }
    }
  }
  return grad_input;
}

template <typename T>
BasicGramMatrix<T> gram_matrix(const BasicTensor<T>& feature_map) {
  require_rank(feature_map.shape(), 3, "gram_matrix input");
  const std::size_t n = feature_map.channels();
  const std::size_t m = feature_map.plane();
  BasicGramMatrix<T> gram{n, m, std::vector<T>(n * n)};
  const T* f = feature_map.data();
  T* gv = gram.values.data();
  const auto rows = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i64 = 0; i64 < rows; ++i64) {
    const auto i = static_cast<std::size_t>(i64);
    const T* fi = f + i * m;
    for (std::size_t j = i; j < n; ++j) {
      const T* fj = f + j * m;
      T acc = 0;
      for (std::size_t k = 0; k < m; ++k) acc += fi[k] * fj[k];
      gv[i * n + j] = acc;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) gv[i * n + j] = gv[j * n + i];
  }
  return gram;
}

template <typename T>
BasicTensor<T> gram_backward(const BasicTensor<T>& feature_map,
                             std::span<const T> grad_gram) {
  require_rank(feature_map.shape(), 3, "gram_backward feature map");
  const std::size_t n = feature_map.channels();
  const std::size_t m = feature_map.plane();
  if (grad_gram.size() != n * n) {
    throw InvalidInput("grad_gram has " + std::to_string(grad_gram.size()) +
                       " entries, expected " + std::to_string(n * n));
  }
  T scale = 0;
  for (T v : grad_gram) scale = std::max(scale, std::abs(v));
  const T tolerance = scale * T(1e-6);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(grad_gram[i * n + j] - grad_gram[j * n + i]) > tolerance) {
        throw InvalidInput("grad_gram is not symmetric at (" +
                           std::to_string(i) + ", " + std::to_string(j) + ")");
      }
    }
  }
  BasicTensor<T> grad(feature_map.shape());
  const T* f = feature_map.data();
  T* out = grad.data();
  const auto rows = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i64 = 0; i64 < rows; ++i64) {
    const auto i = static_cast<std::size_t>(i64);
    T* oi = out + i * m;
    for (std::size_t j = 0; j < n; ++j) {
      const T a = grad_gram[i * n + j] + grad_gram[j * n + i];
      if (a == T(0)) continue;
      const T* fj = f + j * m;
      for (std::size_t k = 0; k < m; ++k) oi[k] += a * fj[k];
    }
  }
  return grad;
}

#define HISTOSTYLE_INSTANTIATE_KERNELS(T)                                      \
  template BasicTensor<T> conv2d_forward(const BasicTensor<T>&,                \
                                         const BasicTensor<T>&,                \
                                         std::span<const T>, ConvParams);      \
  template BasicTensor<T> conv2d_backward_input(                               \
      const BasicTensor<T>&, const BasicTensor<T>&, const Shape&, ConvParams); \
  template BasicTensor<T> relu_forward(const BasicTensor<T>&);                 \
  template BasicTensor<T> relu_backward(const BasicTensor<T>&,                 \
                                        const BasicTensor<T>&);                \
  template PoolResult<T> pool2d_forward(const BasicTensor<T>&, PoolMode);      \
  template BasicTensor<T> pool2d_backward(const BasicTensor<T>&,               \
                                          const PoolRouting&);                 \
  template BasicGramMatrix<T> gram_matrix(const BasicTensor<T>&);              \
  template BasicTensor<T> gram_backward(const BasicTensor<T>&,                 \
                                        std::span<const T>);

HISTOSTYLE_INSTANTIATE_KERNELS(float)
HISTOSTYLE_INSTANTIATE_KERNELS(double)

#undef HISTOSTYLE_INSTANTIATE_KERNELS

}  // namespace kernels
}  // namespace histostyle
