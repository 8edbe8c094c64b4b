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

#include "textboxes/priorbox.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "textboxes/errors.hpp"

namespace textboxes {

std::vector<double> linear_scales(int count, double smallest, double largest) {
  if (count < 1) throw InputError("linear_scales: count must be positive");
  std::vector<double> scales(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    scales[k] = count == 1 ? smallest
                           : smallest + (largest - smallest) * k / (count - 1);
  }
  return scales;
}

std::vector<DefaultBox> generate_priors(std::span<const GridSpec> grids) {
  std::size_t total = 0;
  for (const GridSpec& g : grids) {
    if (g.map_w < 1 || g.map_h < 1) {
      throw InputError("generate_priors: grid dims must be >= 1");
    }
    if (!(g.scale > 0.0 && g.scale <= 1.0)) {
      throw InputError("generate_priors: scale must be in (0, 1]");
    }
    for (double a : g.aspect_ratios) {
      if (!(a > 0.0)) throw InputError("generate_priors: aspect ratio <= 0");
    }
    total += static_cast<std::size_t>(g.prior_count());
  }

  std::vector<DefaultBox> priors;
  priors.reserve(total);
  for (std::size_t layer = 0; layer < grids.size(); ++layer) {
    const GridSpec& g = grids[layer];
    const double cell_h = 1.0 / g.map_h;
    for (int j = 0; j < g.map_h; ++j) {
      for (int i = 0; i < g.map_w; ++i) {
        const double cx = (i + 0.5) / g.map_w;
        const double cy = (j + 0.5) / g.map_h;
        for (double a : g.aspect_ratios) {
          const double root = std::sqrt(a);
          const double w = g.scale * root;
          const double h = g.scale / root;
          priors.push_back({{cx, cy, w, h}, static_cast<int>(layer), i, j, a, 0});
          for (std::size_t k = 0; k < g.vertical_offsets.size(); ++k) {
            const double shifted = cy + g.vertical_offsets[k] * cell_h;
            priors.push_back({{cx, shifted, w, h},
                              static_cast<int>(layer),
                              i,
                              j,
                              a,
                              static_cast<int>(k + 1)});
          }
        }
      }
    }
  }
  return priors;
}

Box decode(const Box& prior, const OffsetVector& d) {
  return {prior.cx + prior.w * d.dx, prior.cy + prior.h * d.dy,
          prior.w * std::exp(d.dw), prior.h * std::exp(d.dh)};
}

OffsetVector encode(const Box& prior, const Box& gt) {
  if (!(gt.w > 0.0) || !(gt.h > 0.0)) {
    throw InputError("encode: ground-truth box must have positive size");
  }
  return {(gt.cx - prior.cx) / prior.w, (gt.cy - prior.cy) / prior.h,
          std::log(gt.w / prior.w), std::log(gt.h / prior.h)};
}

void write_priors(std::ostream& os, std::span<const DefaultBox> priors) {
  const auto old_precision = os.precision(17);
  for (const DefaultBox& p : priors) {
    os << p.layer_id << ' ' << p.i << ' ' << p.j << ' ' << p.aspect_ratio << ' '
       << p.slot << ' ' << p.box.cx << ' ' << p.box.cy << ' ' << p.box.w << ' '
       << p.box.h << '\n';
  }
  os.precision(old_precision);
}

std::vector<DefaultBox> read_priors(std::istream& is) {
  std::vector<DefaultBox> priors;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    DefaultBox p;
    if (!(ls >> p.layer_id >> p.i >> p.j >> p.aspect_ratio >> p.slot >>
          p.box.cx >> p.box.cy >> p.box.w >> p.box.h)) {
      throw ParseError("prior dump line " + std::to_string(line_no) +
                       ": expected 'layer i j ar slot cx cy w h'");
    }
    priors.push_back(p);
  }
  return priors;
}

}  // namespace textboxes
