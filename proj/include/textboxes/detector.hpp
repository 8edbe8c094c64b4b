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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "textboxes/box.hpp"
#include "textboxes/model.hpp"
#include "textboxes/tensor.hpp"

namespace textboxes {

struct Detection {
  Box box;  // normalized, clipped to the unit square
  double score = 0.0;
  int scale_id = 0;
  std::optional<std::string> word;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct ImageSize {
  int width = 0;
  int height = 0;
  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

// Inference input sizes (width x height) for multi-scale detection.
using ScaleSet = std::vector<ImageSize>;

// 128x128, 96x128, 128x96, 192x192. The 96-wide scale squeezes words
// horizontally.
ScaleSet default_scale_set();

struct DetectThresholds {
  double score = 0.5;
  double nms = 0.45;

  void validate() const;
};

// Greedy NMS. Sorted by score descending (ties: lower input index first);
// a detection survives iff its IoU with every kept one is <= threshold.
std::vector<Detection> nms(std::span<const Detection> dets,
                           double overlap_threshold);

// Forward pass on `image` as given, decode every prior, keep scores strictly
// above `score_threshold`, clip, then NMS. Boxes are normalized to the image.
std::vector<Detection> detect_single_scale(const DetectorModel& model,
                                           const Tensor& image,
                                           double score_threshold,
                                           double nms_threshold,
                                           InferenceOptions options = {});

// Bilinear-resize to each scale, detect per scale (tagging scale_id), pool
// the results and apply one more NMS across scales.
std::vector<Detection> detect_multi_scale(const DetectorModel& model,
                                          const Tensor& image,
                                          const ScaleSet& scales,
                                          const DetectThresholds& thresholds,
                                          InferenceOptions options = {});

}  // namespace textboxes
