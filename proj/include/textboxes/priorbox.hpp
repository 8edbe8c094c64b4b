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

#include <iosfwd>
#include <span>
#include <vector>

#include "textboxes/box.hpp"

namespace textboxes {

// Width/height ratios of the "long" default boxes used for words.
inline const std::vector<double>& text_aspect_ratios() {
  static const std::vector<double> kRatios{1.0, 2.0, 3.0, 5.0, 7.0, 10.0};
  return kRatios;
}

// One feature map's default-box layout.
//
// Each cell carries, per aspect ratio, a prior centered in the cell plus one
// shifted copy per entry of `vertical_offsets` (in units of cell height,
// positive = downward). The default single 0.5 offset gives 6 x 2 = 12
// priors per cell and a 72-wide prediction vector.
struct GridSpec {
  int map_w = 1;
  int map_h = 1;
  double scale = 0.2;
  std::vector<double> aspect_ratios = text_aspect_ratios();
  std::vector<double> vertical_offsets{0.5};

  int slots_per_ratio() const {
    return 1 + static_cast<int>(vertical_offsets.size());
  }
  int priors_per_cell() const {
    return static_cast<int>(aspect_ratios.size()) * slots_per_ratio();
  }
  // 2 class scores + 4 offsets per prior.
  int prediction_width() const { return priors_per_cell() * 6; }
  int prior_count() const { return map_w * map_h * priors_per_cell(); }
};

struct DefaultBox {
  Box box;
  int layer_id = 0;
  int i = 0;  // column
  int j = 0;  // row
  double aspect_ratio = 1.0;
  int slot = 0;  // 0 = centered, k > 0 = vertical_offsets[k - 1]

  friend bool operator==(const DefaultBox&, const DefaultBox&) = default;
};

// Regression targets relative to a prior.
struct OffsetVector {
  double dx = 0.0;
  double dy = 0.0;
  double dw = 0.0;
  double dh = 0.0;
};

// Evenly spaced scales from `smallest` to `largest` over `count` heads.
std::vector<double> linear_scales(int count, double smallest = 0.2,
                                  double largest = 0.9);

// Order: layer, row-major cell, aspect ratio, slot. This matches the channel
// layout of the text-box heads.
std::vector<DefaultBox> generate_priors(std::span<const GridSpec> grids);

// x = x0 + w0*dx, y = y0 + h0*dy, w = w0*exp(dw), h = h0*exp(dh).
Box decode(const Box& prior, const OffsetVector& offsets);
inline Box decode(const DefaultBox& prior, const OffsetVector& offsets) {
  return decode(prior.box, offsets);
}

// Inverse of decode. Throws InputError for non-positive gt dimensions.
OffsetVector encode(const Box& prior, const Box& gt);
inline OffsetVector encode(const DefaultBox& prior, const Box& gt) {
  return encode(prior.box, gt);
}

// Debug dump, one prior per line: "layer i j ar slot cx cy w h".
void write_priors(std::ostream& os, std::span<const DefaultBox> priors);
std::vector<DefaultBox> read_priors(std::istream& is);

}  // namespace textboxes
