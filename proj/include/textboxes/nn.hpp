// Copyright 2026 The TextBoxes-Desk Authors. All Rights Reserved.
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

#include <cstddef>
#include <random>
#include <utility>
#include <vector>

#include "textboxes/tensor.hpp"

// Forward and analytic backward passes for the handful of layer types the
// detector is built from. All functions are pure; NCHW layout throughout.
namespace textboxes::nn {

struct Padding {
  int h = 0;
  int w = 0;
  friend bool operator==(const Padding&, const Padding&) = default;
};

// Same-size padding for odd kernels: (kh/2, kw/2). A 1x5 kernel gets (0, 2).
Padding same_padding(int kernel_h, int kernel_w);

class ConvLayer {
 public:
  ConvLayer(int in_channels, int out_channels, int kernel_h, int kernel_w,
            int stride = 1);
  ConvLayer(int in_channels, int out_channels, int kernel_h, int kernel_w,
            int stride, Padding padding);
  // Kernel (C_out, C_in, kH, kW), bias (C_out).
  ConvLayer(Tensor kernel, Tensor bias, int stride, Padding padding);

  int in_channels() const { return kernel_.dim(1); }
  int out_channels() const { return kernel_.dim(0); }
  int kernel_h() const { return kernel_.dim(2); }
  int kernel_w() const { return kernel_.dim(3); }
  int stride() const { return stride_; }
  Padding padding() const { return padding_; }

  Tensor& kernel() { return kernel_; }
  const Tensor& kernel() const { return kernel_; }
  Tensor& bias() { return bias_; }
  const Tensor& bias() const { return bias_; }

  // floor((in + 2*pad - k) / stride) + 1 per axis; throws ShapeError when
  // the padded input is smaller than the kernel.
  std::pair<int, int> output_size(int in_h, int in_w) const;

 private:
  void validate() const;

  Tensor kernel_;
  Tensor bias_;
  int stride_ = 1;
  Padding padding_;
};

struct LayerGradients {
  Tensor kernel;
  Tensor bias;
};

struct ConvBackward {
  Tensor input;
  LayerGradients params;
};

Tensor conv2d_forward(const Tensor& input, const ConvLayer& layer);
// With need_input_grad == false the returned input gradient is empty.
ConvBackward conv2d_backward(const Tensor& input, const ConvLayer& layer,
                             const Tensor& grad_out,
                             bool need_input_grad = true);

// Flat input index of the winning element for every pooled output.
struct PoolMask {
  Shape input_shape;
  std::vector<std::size_t> argmax;
};

struct PoolResult {
  Tensor output;
  PoolMask mask;
};

// 2x2, stride 2. Odd spatial dims are padded with -inf, so the output is
// ceil(H/2) x ceil(W/2). Ties go to the first maximum in row-major order.
PoolResult maxpool2x2_forward(const Tensor& input);
Tensor maxpool2x2_backward(const PoolMask& mask, const Tensor& grad_out);

Tensor relu_forward(const Tensor& input);
Tensor relu_backward(const Tensor& input, const Tensor& grad_out);

// Softmax over a trailing axis of size 2, max-subtracted.
Tensor softmax2_forward(const Tensor& logits);

// Uniform in +-gain * sqrt(6 / (fan_in + fan_out)), bias zero.
void glorot_uniform_init(ConvLayer& layer, std::mt19937_64& rng, double gain = 1.0);

}  // namespace textboxes::nn
