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
#include <string>

namespace textboxes {

// Axis-aligned box in normalized center form. Coordinates are fractions of
// image width/height.
struct Box {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  double xmin() const { return cx - 0.5 * w; }
  double ymin() const { return cy - 0.5 * h; }
  double xmax() const { return cx + 0.5 * w; }
  double ymax() const { return cy + 0.5 * h; }
  double area() const { return w * h; }

  friend bool operator==(const Box&, const Box&) = default;
};

// Ground-truth box with its transcription.
struct LabeledBox {
  Box box;
  std::string word;
  friend bool operator==(const LabeledBox&, const LabeledBox&) = default;
};

Box box_from_corners(double xmin, double ymin, double xmax, double ymax);

// Intersection over union; 0 for disjoint boxes or degenerate unions.
double iou(const Box& a, const Box& b);

// Clip to the unit square. Empty result when nothing remains inside.
std::optional<Box> clip_to_unit(const Box& b);

}  // namespace textboxes
