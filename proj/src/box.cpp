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

#include "textboxes/box.hpp"

#include <algorithm>

namespace textboxes {

Box box_from_corners(double xmin, double ymin, double xmax, double ymax) {
  return {0.5 * (xmin + xmax), 0.5 * (ymin + ymax), xmax - xmin, ymax - ymin};
}

double iou(const Box& a, const Box& b) {
  const double iw = std::min(a.xmax(), b.xmax()) - std::max(a.xmin(), b.xmin());
  const double ih = std::min(a.ymax(), b.ymax()) - std::max(a.ymin(), b.ymin());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  // Areas from corners so that iou(a, a) is exactly 1.
  const double area_a = (a.xmax() - a.xmin()) * (a.ymax() - a.ymin());
  const double area_b = (b.xmax() - b.xmin()) * (b.ymax() - b.ymin());
  const double uni = area_a + area_b - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::optional<Box> clip_to_unit(const Box& b) {
  const double x0 = std::clamp(b.xmin(), 0.0, 1.0);
  const double y0 = std::clamp(b.ymin(), 0.0, 1.0);
  const double x1 = std::clamp(b.xmax(), 0.0, 1.0);
  const double y1 = std::clamp(b.ymax(), 0.0, 1.0);
  if (x1 <= x0 || y1 <= y0) return std::nullopt;
  return box_from_corners(x0, y0, x1, y1);
}

}  // namespace textboxes
