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

// Forward and input-gradient kernels for the fixed feature network.
//
// All kernels are pure functions and OpenMP-parallel over output channels or
// output row tiles. Each output element is produced by exactly one thread with
// a fixed summation order, so results do not depend on the thread count.
// Instantiated for float and double.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "histostyle/tensor.hpp"

namespace histostyle::kernels {

struct ConvParams {
  std::size_t stride = 1;
  std::size_t padding = 1;
};

/// Output spatial extent of a convolution along one axis.
std::size_t conv_output_extent(std::size_t input, std::size_t kernel,
                               std::size_t stride, std::size_t padding);

/// Zero-padded cross-correlation. `weights` is (out, in, kh, kw); `bias` has
/// `out` entries (may be empty for no bias).
template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input,
                              const BasicTensor<T>& weights,
                              std::span<const T> bias, ConvParams params = {});

/// Gradient of a convolution with respect to its input.
template <typename T>
BasicTensor<T> conv2d_backward_input(const BasicTensor<T>& grad_output,
                                     const BasicTensor<T>& weights,
                                     const Shape& input_shape,
                                     ConvParams params = {});

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& input);

/// Passes gradient where input > 0; the subgradient at exactly 0 is 0.
template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& grad_output,
                             const BasicTensor<T>& input);

enum class PoolMode { kMax, kAverage };

/// What pool2d_backward needs to route gradients back. For max pooling,
/// `argmax` holds the flat input index chosen for each output element.
struct PoolRouting {
  PoolMode mode = PoolMode::kMax;
  Shape input_shape;
  Shape output_shape;
  std::vector<std::uint32_t> argmax;
};

template <typename T>
struct PoolResult {
  BasicTensor<T> output;
  PoolRouting routing;
};

/// 2x2 window, stride 2. Odd heights/widths are handled by replicating the
/// last row/column, so the output is ceil(H/2) x ceil(W/2).
template <typename T>
PoolResult<T> pool2d_forward(const BasicTensor<T>& input, PoolMode mode);

template <typename T>
BasicTensor<T> pool2d_backward(const BasicTensor<T>& grad_output,
                               const PoolRouting& routing);

/// G[i][j] = sum_k F[i][k] F[j][k] over the flattened spatial index.
/// The upper triangle is computed and mirrored, so G is exactly symmetric.
template <typename T>
BasicGramMatrix<T> gram_matrix(const BasicTensor<T>& feature_map);

/// Gradient of sum_ij grad_gram[i][j] * G[i][j] with respect to the feature
/// map, i.e. (A + A^T) F = 2 A F for symmetric A. Rejects asymmetric A.
template <typename T>
BasicTensor<T> gram_backward(const BasicTensor<T>& feature_map,
                             std::span<const T> grad_gram);

}  // namespace histostyle::kernels
