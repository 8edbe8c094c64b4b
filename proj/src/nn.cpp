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

#include "textboxes/nn.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "textboxes/errors.hpp"

namespace textboxes::nn {
namespace {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

void require_nchw(const Tensor& t, const char* what) {
  if (t.rank() != 4) {
    throw ShapeError(std::string(what) + ": expected NCHW tensor, got " +
                     shape_to_string(t.shape()));
  }
}

struct ConvGeometry {
  int channels, in_h, in_w, out_h, out_w, kh, kw, stride, pad_h, pad_w;
  int rows() const { return channels * kh * kw; }
  int cols() const { return out_h * out_w; }
  bool is_pointwise() const {
    return kh == 1 && kw == 1 && stride == 1 && pad_h == 0 && pad_w == 0;
  }
};

ConvGeometry geometry_for(const Tensor& input, const ConvLayer& layer) {
  require_nchw(input, "conv2d");
  if (input.dim(1) != layer.in_channels()) {
    throw ShapeError("conv2d: input " + shape_to_string(input.shape()) +
                     " does not match kernel " +
                     shape_to_string(layer.kernel().shape()));
  }
  auto [oh, ow] = layer.output_size(input.dim(2), input.dim(3));
  return {input.dim(1), input.dim(2), input.dim(3), oh, ow,
          layer.kernel_h(), layer.kernel_w(), layer.stride(),
          layer.padding().h, layer.padding().w};
}

// Unfold one image (C, H, W) into a (C*kh*kw, out_h*out_w) row-major matrix.
void im2col(const double* image, const ConvGeometry& g, double* col) {
  const int cols = g.cols();
  for (int c = 0; c < g.channels; ++c) {
    const double* plane = image + static_cast<std::size_t>(c) * g.in_h * g.in_w;
    for (int ki = 0; ki < g.kh; ++ki) {
      for (int kj = 0; kj < g.kw; ++kj) {
        double* row =
            col + static_cast<std::size_t>((c * g.kh + ki) * g.kw + kj) * cols;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.pad_h + ki;
          double* dst = row + static_cast<std::size_t>(oy) * g.out_w;
          if (iy < 0 || iy >= g.in_h) {
            std::fill(dst, dst + g.out_w, 0.0);
            continue;
          }
          const double* src = plane + static_cast<std::size_t>(iy) * g.in_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.pad_w + kj;
            dst[ox] = (ix >= 0 && ix < g.in_w) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-add columns back into an image.
void col2im(const double* col, const ConvGeometry& g, double* image) {
  const int cols = g.cols();
  for (int c = 0; c < g.channels; ++c) {
    double* plane = image + static_cast<std::size_t>(c) * g.in_h * g.in_w;
    for (int ki = 0; ki < g.kh; ++ki) {
      for (int kj = 0; kj < g.kw; ++kj) {
        const double* row =
            col + static_cast<std::size_t>((c * g.kh + ki) * g.kw + kj) * cols;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.pad_h + ki;
          if (iy < 0 || iy >= g.in_h) continue;
          const double* src = row + static_cast<std::size_t>(oy) * g.out_w;
          double* dst = plane + static_cast<std::size_t>(iy) * g.in_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.pad_w + kj;
            if (ix >= 0 && ix < g.in_w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

Padding same_padding(int kernel_h, int kernel_w) {
  return {kernel_h / 2, kernel_w / 2};
}

ConvLayer::ConvLayer(int in_channels, int out_channels, int kernel_h,
                     int kernel_w, int stride)
    : ConvLayer(in_channels, out_channels, kernel_h, kernel_w, stride,
                same_padding(kernel_h, kernel_w)) {}

ConvLayer::ConvLayer(int in_channels, int out_channels, int kernel_h,
                     int kernel_w, int stride, Padding padding)
    : kernel_(Shape{out_channels, in_channels, kernel_h, kernel_w}),
      bias_(Shape{out_channels}),
      stride_(stride),
      padding_(padding) {
  validate();
}

ConvLayer::ConvLayer(Tensor kernel, Tensor bias, int stride, Padding padding)
    : kernel_(std::move(kernel)),
      bias_(std::move(bias)),
      stride_(stride),
      padding_(padding) {
  validate();
}

void ConvLayer::validate() const {
  if (kernel_.rank() != 4) {
    throw ShapeError("conv kernel must be (C_out, C_in, kH, kW), got " +
                     shape_to_string(kernel_.shape()));
  }
  if (bias_.rank() != 1 || bias_.dim(0) != kernel_.dim(0)) {
    throw ShapeError("conv bias " + shape_to_string(bias_.shape()) +
                     " does not match kernel " +
                     shape_to_string(kernel_.shape()));
  }
  if (stride_ < 1) throw InputError("conv stride must be positive");
  if (padding_.h < 0 || padding_.w < 0) {
    throw InputError("conv padding must be non-negative");
  }
}

std::pair<int, int> ConvLayer::output_size(int in_h, int in_w) const {
  const int ph = in_h + 2 * padding_.h;
  const int pw = in_w + 2 * padding_.w;
  if (ph < kernel_h() || pw < kernel_w()) {
    throw ShapeError("conv2d: padded input (" + std::to_string(ph) + "x" +
                     std::to_string(pw) + ") smaller than kernel " +
                     shape_to_string(kernel_.shape()));
  }
  return {(ph - kernel_h()) / stride_ + 1, (pw - kernel_w()) / stride_ + 1};
}

Tensor conv2d_forward(const Tensor& input, const ConvLayer& layer) {
  const ConvGeometry g = geometry_for(input, layer);
  const int batch = input.dim(0);
  const int c_out = layer.out_channels();
  Tensor output(Shape{batch, c_out, g.out_h, g.out_w});

  const ConstMatrixMap weights(layer.kernel().raw(), c_out, g.rows());
  std::vector<double> col_buffer;
  if (!g.is_pointwise()) {
    col_buffer.resize(static_cast<std::size_t>(g.rows()) * g.cols());
  }
  const std::size_t in_stride =
      static_cast<std::size_t>(g.channels) * g.in_h * g.in_w;
  const std::size_t out_stride = static_cast<std::size_t>(c_out) * g.cols();
  for (int n = 0; n < batch; ++n) {
    const double* image = input.raw() + n * in_stride;
    const double* col = image;
    if (!g.is_pointwise()) {
      im2col(image, g, col_buffer.data());
      col = col_buffer.data();
    }
    MatrixMap out(output.raw() + n * out_stride, c_out, g.cols());
    out.noalias() = weights * ConstMatrixMap(col, g.rows(), g.cols());
    for (int o = 0; o < c_out; ++o) out.row(o).array() += layer.bias()[o];
  }
  check_finite(output, "conv2d_forward");
  return output;
}

ConvBackward conv2d_backward(const Tensor& input, const ConvLayer& layer,
                             const Tensor& grad_out, bool need_input_grad) {
  const ConvGeometry g = geometry_for(input, layer);
  const int batch = input.dim(0);
  const int c_out = layer.out_channels();
  const Shape expected{batch, c_out, g.out_h, g.out_w};
  if (grad_out.shape() != expected) {
    throw ShapeError("conv2d_backward: grad_out " +
                     shape_to_string(grad_out.shape()) +
                     " vs forward output " + shape_to_string(expected));
  }

  ConvBackward result{need_input_grad ? Tensor(input.shape()) : Tensor(),
                      {Tensor(layer.kernel().shape()), Tensor(Shape{c_out})}};
  const ConstMatrixMap weights(layer.kernel().raw(), c_out, g.rows());
  MatrixMap grad_weights(result.params.kernel.raw(), c_out, g.rows());

  std::vector<double> col_buffer(static_cast<std::size_t>(g.rows()) * g.cols());
  std::vector<double> grad_col(need_input_grad ? col_buffer.size() : 0);
  const std::size_t in_stride =
      static_cast<std::size_t>(g.channels) * g.in_h * g.in_w;
  const std::size_t out_stride = static_cast<std::size_t>(c_out) * g.cols();
  for (int n = 0; n < batch; ++n) {
    const double* image = input.raw() + n * in_stride;
    const ConstMatrixMap gout(grad_out.raw() + n * out_stride, c_out, g.cols());
    const double* col = image;
    if (!g.is_pointwise()) {
      im2col(image, g, col_buffer.data());
      col = col_buffer.data();
    }
    grad_weights.noalias() +=
        gout * ConstMatrixMap(col, g.rows(), g.cols()).transpose();
    for (int o = 0; o < c_out; ++o) {
      const double* row = gout.data() + static_cast<std::size_t>(o) * g.cols();
      double sum = 0.0;
      for (int k = 0; k < g.cols(); ++k) sum += row[k];
      result.params.bias[o] += sum;
    }

    if (!need_input_grad) continue;
    double* grad_image = result.input.raw() + n * in_stride;
    if (g.is_pointwise()) {
      MatrixMap(grad_image, g.rows(), g.cols()).noalias() =
          weights.transpose() * gout;
    } else {
      MatrixMap(grad_col.data(), g.rows(), g.cols()).noalias() =
          weights.transpose() * gout;
      col2im(grad_col.data(), g, grad_image);
    }
  }
  check_finite(result.input, "conv2d_backward (input gradient)");
  check_finite(result.params.kernel, "conv2d_backward (kernel gradient)");
  return result;
}

PoolResult maxpool2x2_forward(const Tensor& input) {
  require_nchw(input, "maxpool2x2");
  const int batch = input.dim(0), channels = input.dim(1);
  const int h = input.dim(2), w = input.dim(3);
  const int oh = (h + 1) / 2, ow = (w + 1) / 2;
  PoolResult result{Tensor(Shape{batch, channels, oh, ow}),
                    PoolMask{input.shape(), {}}};
  result.mask.argmax.resize(result.output.size());

  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  std::size_t out_index = 0;
  for (int n = 0; n < batch; ++n) {
    for (int c = 0; c < channels; ++c) {
      const std::size_t plane =
          (static_cast<std::size_t>(n) * channels + c) * h * w;
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox, ++out_index) {
          double best = kNegInf;
          std::size_t best_index = plane + static_cast<std::size_t>(2 * oy) * w +
                                   2 * ox;
          bool found = false;
          for (int dy = 0; dy < 2; ++dy) {
            const int iy = 2 * oy + dy;
            for (int dx = 0; dx < 2; ++dx) {
              const int ix = 2 * ox + dx;
              if (iy >= h || ix >= w) continue;  // -inf padding never wins
              const std::size_t idx =
                  plane + static_cast<std::size_t>(iy) * w + ix;
              if (!found || input[idx] > best) {
                best = input[idx];
                best_index = idx;
                found = true;
              }
            }
          }
          result.output[out_index] = best;
          result.mask.argmax[out_index] = best_index;
        }
      }
    }
  }
  return result;
}

Tensor maxpool2x2_backward(const PoolMask& mask, const Tensor& grad_out) {
  if (grad_out.size() != mask.argmax.size()) {
    throw ShapeError("maxpool2x2_backward: grad_out " +
                     shape_to_string(grad_out.shape()) +
                     " does not match pooled size of input " +
                     shape_to_string(mask.input_shape));
  }
  Tensor grad_in(mask.input_shape);
  for (std::size_t i = 0; i < mask.argmax.size(); ++i) {
    grad_in[mask.argmax[i]] += grad_out[i];
  }
  return grad_in;
}

Tensor relu_forward(const Tensor& input) {
  Tensor out = input;
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_out) {
  require_same_shape(input, grad_out, "relu_backward");
  Tensor grad = grad_out;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!(input[i] > 0.0)) grad[i] = 0.0;
  }
  return grad;
}

Tensor softmax2_forward(const Tensor& logits) {
  if (logits.rank() < 1 || logits.shape().back() != 2) {
    throw ShapeError("softmax2: trailing axis must have size 2, got " +
                     shape_to_string(logits.shape()));
  }
  Tensor probs(logits.shape());
  for (std::size_t i = 0; i < logits.size(); i += 2) {
    const double a = logits[i], b = logits[i + 1];
    const double m = std::max(a, b);
    const double ea = std::exp(a - m), eb = std::exp(b - m);
    const double z = ea + eb;
    probs[i] = ea / z;
    probs[i + 1] = eb / z;
  }
  return probs;
}

void glorot_uniform_init(ConvLayer& layer, std::mt19937_64& rng, double gain) {
  const double receptive = layer.kernel_h() * layer.kernel_w();
  const double fan_in = layer.in_channels() * receptive;
  const double fan_out = layer.out_channels() * receptive;
  const double limit = gain * std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& v : layer.kernel().data()) v = dist(rng);
  layer.bias().fill(0.0);
}

}  // namespace textboxes::nn
