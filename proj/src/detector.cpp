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

#include "textboxes/detector.hpp"

#include <algorithm>
#include <numeric>

#include "textboxes/errors.hpp"
#include "textboxes/image.hpp"
#include "textboxes/nn.hpp"
#include "textboxes/priorbox.hpp"

namespace textboxes {

ScaleSet default_scale_set() {
  return {{128, 128}, {96, 128}, {128, 96}, {192, 192}};
}

void DetectThresholds::validate() const {
  if (!(score >= 0.0 && score <= 1.0)) {
    throw InputError("score threshold must be in [0, 1]");
  }
  if (!(nms >= 0.0 && nms <= 1.0)) throw InputError("nms threshold must be in [0, 1]");
}

std::vector<Detection> nms(std::span<const Detection> dets,
                           double overlap_threshold) {
  if (!(overlap_threshold >= 0.0 && overlap_threshold <= 1.0)) {
    throw InputError("nms: overlap threshold must be in [0, 1]");
  }
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].score > dets[b].score;
  });
  std::vector<Detection> kept;
  for (std::size_t idx : order) {
    const Detection& d = dets[idx];
    const bool suppressed =
        std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
          return iou(k.box, d.box) > overlap_threshold;
        });
    if (!suppressed) kept.push_back(d);
  }
  return kept;
}

std::vector<Detection> detect_single_scale(const DetectorModel& model,
                                           const Tensor& image,
                                           double score_threshold,
                                           double nms_threshold,
                                           InferenceOptions options) {
  DetectThresholds{score_threshold, nms_threshold}.validate();
  const ForwardOutput out = model.forward(image, options);
  const auto priors = generate_priors(out.grids());
  const Tensor probs = nn::softmax2_forward(out.flat_conf());
  const Tensor loc = out.flat_loc();

  std::vector<Detection> candidates;
  for (std::size_t p = 0; p < priors.size(); ++p) {
    const double score = probs[2 * p + 1];
    if (!(score > score_threshold)) continue;
    const OffsetVector off{loc[4 * p], loc[4 * p + 1], loc[4 * p + 2],
                           loc[4 * p + 3]};
    const auto clipped = clip_to_unit(decode(priors[p], off));
    if (!clipped) continue;
    candidates.push_back({*clipped, score, 0, std::nullopt});
  }
  return nms(candidates, nms_threshold);
}

std::vector<Detection> detect_multi_scale(const DetectorModel& model,
                                          const Tensor& image,
                                          const ScaleSet& scales,
                                          const DetectThresholds& thresholds,
                                          InferenceOptions options) {
  if (scales.empty()) throw InputError("detect_multi_scale: empty scale set");
  thresholds.validate();
  std::vector<Detection> pooled;
  for (std::size_t s = 0; s < scales.size(); ++s) {
    const Tensor resized =
        image::resize_bilinear(image, scales[s].width, scales[s].height);
    auto dets = detect_single_scale(model, resized, thresholds.score,
                                    thresholds.nms, options);
    for (Detection& d : dets) {
      d.scale_id = static_cast<int>(s);
      pooled.push_back(std::move(d));
    }
  }
  return nms(pooled, thresholds.nms);
}

}  // namespace textboxes
