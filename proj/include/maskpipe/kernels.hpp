// Copyright 2026 The maskpipe Authors
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
#pragma once

#include <span>

#include "maskpipe/tensor.hpp"

namespace maskpipe {

// Inference kernels over [n,c,h,w] tensors. All are pure and single-threaded;
// summation order is fixed, so repeated calls are bit-identical.

enum class Padding { same, valid };

const char* to_string(Padding padding);

/// Leading (top/left) padding and output extent along one spatial axis.
/// "same" puts the odd pixel of padding on the trailing (bottom/right) side.
struct AxisGeometry {
  std::size_t out = 0;
  std::size_t pad_begin = 0;
};

AxisGeometry axis_geometry(std::size_t in, std::size_t kernel, std::size_t stride,
                           Padding padding);

/// Standard convolution. kernel is [oc, ic, kh, kw]; bias has oc entries.
Tensor conv2d(const Tensor& input, const Tensor& kernel, std::span<const float> bias,
              std::size_t stride, Padding padding);

/// Per-channel convolution. kernel is [c, 1, kh, kw]; bias has c entries.
Tensor depthwise_conv2d(const Tensor& input, const Tensor& kernel,
                        std::span<const float> bias, std::size_t stride,
                        Padding padding);

/// out = in * scale[c] + shift[c]
Tensor affine_channel(const Tensor& input, std::span<const float> scale,
                      std::span<const float> shift);

Tensor relu6(const Tensor& input);

/// Elementwise sum of two tensors of identical shape.
Tensor add(const Tensor& lhs, const Tensor& rhs);

Tensor global_avg_pool(const Tensor& input);

/// Fully connected layer over a [n, c, 1, 1] input. weights is row-major [out, c].
Tensor dense(const Tensor& input, std::span<const float> weights,
             std::span<const float> bias);

/// Numerically stable softmax across channels of a [n, c, 1, 1] input.
Tensor softmax(const Tensor& input);

/// Batch-norm statistics folded into a per-channel affine transform.
struct FoldedAffine {
  std::vector<float> scale;
  std::vector<float> shift;
};

/// scale = gamma / sqrt(var + eps), shift = beta - mean * scale (computed in double).
FoldedAffine fold_batch_norm(std::span<const float> gamma, std::span<const float> beta,
                             std::span<const float> mean, std::span<const float> var,
                             double eps);

}  // namespace maskpipe
