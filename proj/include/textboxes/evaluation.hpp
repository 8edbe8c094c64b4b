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

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "textboxes/box.hpp"
#include "textboxes/detector.hpp"
#include "textboxes/tensor.hpp"

namespace textboxes {

struct EvalProtocol {
  double iou_threshold = 0.5;
  int min_word_length = 3;  // spotting only

  void validate() const;
};

struct ImageMatches {
  std::string image_id;
  std::vector<int> det_to_gt;   // per detection: matched gt index or -1
  std::vector<bool> gt_matched;
  std::vector<bool> gt_ignored;  // spotting: too-short words
  int tp = 0;
  int fp = 0;
  int fn = 0;
};

struct EvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
  bool precision_defined = true;  // false when there are no detections
  bool recall_defined = true;     // false when there are no gts
  long tp = 0;
  long fp = 0;
  long fn = 0;
  std::vector<ImageMatches> images;
};

struct EvalImage {
  std::string image_id;
  std::vector<Detection> dets;
  std::vector<LabeledBox> gts;
};

// Greedy one-to-one: detections in descending score order each take the
// unmatched gt of highest IoU, if that IoU is at least the threshold.
ImageMatches match_localization(const std::vector<Detection>& dets,
                                const std::vector<LabeledBox>& gts,
                                const EvalProtocol& protocol);

// As above, but a match also needs equal normalized words, and gts whose
// word is shorter than min_word_length are dropped beforehand. Detections
// whose best match would be a dropped gt are not counted.
ImageMatches match_spotting(const std::vector<Detection>& dets,
                            const std::vector<LabeledBox>& gts,
                            const EvalProtocol& protocol);

EvalReport eval_localization(std::span<const EvalImage> images,
                             const EvalProtocol& protocol = {});
EvalReport eval_spotting(std::span<const EvalImage> images,
                         const EvalProtocol& protocol = {});
inline EvalReport eval_end_to_end(std::span<const EvalImage> images,
                                  const EvalProtocol& protocol = {}) {
  return eval_spotting(images, protocol);
}

// Lowercase with leading/trailing punctuation removed.
std::string normalize_word(std::string_view word);

double f_measure(double precision, double recall);

std::string report_to_json(const EvalReport& report, const std::string& task);
// "Method | P | R | F" style table, one row per report.
std::string report_to_table(const EvalReport& report, const std::string& label);
std::string reports_to_table(const std::vector<std::pair<std::string, EvalReport>>& rows);

// Green = matched detection, red = unmatched detection, red dashed = missed gt.
Tensor render_overlay(const Tensor& image, const EvalImage& item,
                      const ImageMatches& matches);

}  // namespace textboxes
