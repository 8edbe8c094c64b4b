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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "textboxes/nn.hpp"
#include "textboxes/priorbox.hpp"
#include "textboxes/tensor.hpp"

namespace textboxes {

// Architecture description. Backbone entries are, in order:
//   "conv <channels> <kh>x<kw>"  3x3-style conv, stride 1, same padding
//   "relu"
//   "pool"                      2x2 max pool, stride 2
//   "tap"                       attach a text-box head to the current map
struct ModelSpec {
  int input_channels = 3;
  std::vector<std::string> backbone = default_backbone();
  int head_kernel_h = 1;
  int head_kernel_w = 5;
  // One scale per tap; empty means linear_scales(taps, 0.2, 0.9).
  std::vector<double> head_scales;
  std::vector<double> aspect_ratios = text_aspect_ratios();
  std::vector<double> vertical_offsets{0.5};
  // Initial background probability produced by the head biases.
  double background_prior = 0.99;
  std::uint64_t init_seed = 1;
  // Subtracted from every input pixel before the first layer.
  double input_mean = 0.0;
  // Scales the uniform init bound of backbone convs (heads keep 1).
  double init_gain = 1.0;

  static std::vector<std::string> default_backbone();
  void validate() const;
};

// Prediction of one head, flattened into prior order.
struct HeadOutput {
  GridSpec grid;
  Tensor conf;  // (P_h, 2)
  Tensor loc;   // (P_h, 4)
};

struct ForwardOutput {
  std::vector<HeadOutput> heads;

  std::vector<GridSpec> grids() const;
  Tensor flat_conf() const;  // all heads concatenated, (P, 2)
  Tensor flat_loc() const;   // (P, 4)
};

// Activations kept by forward_train() for backward().
struct ForwardState {
  std::vector<Tensor> op_inputs;
  std::vector<nn::PoolMask> pool_masks;
  std::vector<Tensor> tap_features;
  ForwardOutput output;
};

struct InferenceOptions {
  // Round parameters and every activation through 32-bit float storage.
  bool float32_storage = false;
};

class DetectorModel {
 public:
  explicit DetectorModel(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }
  int head_count() const { return static_cast<int>(heads_.size()); }
  const std::vector<double>& head_scales() const { return scales_; }
  const nn::ConvLayer& head(int k) const { return heads_.at(static_cast<std::size_t>(k)); }

  // Feature-map grids for an input of this size; throws InputError when the
  // image is too small for the backbone.
  std::vector<GridSpec> grids_for(int image_w, int image_h) const;
  std::vector<DefaultBox> priors_for(int image_w, int image_h) const;

  // image: (C, H, W) in [0, 1].
  ForwardOutput forward(const Tensor& image, InferenceOptions options = {}) const;
  ForwardState forward_train(const Tensor& image) const;
  // Gradients aligned with parameters(); grad_conf (P, 2), grad_loc (P, 4).
  std::vector<Tensor> backward(const ForwardState& state, const Tensor& grad_conf,
                               const Tensor& grad_loc) const;

  // Backbone kernels/biases in declaration order, then head kernels/biases.
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  std::vector<std::string> parameter_names() const;

  friend bool operator==(const DetectorModel& a, const DetectorModel& b);

 private:
  enum class OpKind { kConv, kRelu, kPool, kTap };
  struct Op {
    OpKind kind;
    int index;  // conv or tap index
  };

  void build();
  void initialize();
  Tensor head_input(const Tensor& features) const;

  ModelSpec spec_;
  std::vector<Op> ops_;
  std::vector<nn::ConvLayer> convs_;
  std::vector<nn::ConvLayer> heads_;
  std::vector<double> scales_;
};

// Model file: "TBOXMDL1\n", a text header describing the architecture and
// parameter shapes in declaration order, "end_header\n", then each parameter
// as little-endian IEEE-754 doubles.
void save_model(const DetectorModel& model, std::ostream& os);
void save_model(const DetectorModel& model, const std::filesystem::path& path);
DetectorModel load_model(std::istream& is, const std::string& source = "<stream>");
DetectorModel load_model(const std::filesystem::path& path);

}  // namespace textboxes
