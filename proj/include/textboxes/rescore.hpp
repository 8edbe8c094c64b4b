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
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "textboxes/box.hpp"
#include "textboxes/ctc.hpp"
#include "textboxes/detector.hpp"

namespace textboxes {

struct RescoreConfig {
  double candidate_score_threshold = 0.1;
  double candidate_nms_threshold = 0.7;
  int max_candidates_per_image = 35;
  double final_score_threshold = 0.5;
  double nms_same_word_threshold = 0.3;
  double nms_diff_word_threshold = 0.45;

  void validate() const;
  friend bool operator==(const RescoreConfig&, const RescoreConfig&) = default;
};

// Maps an image region to per-frame log-probabilities.
class Recognizer {
 public:
  virtual ~Recognizer() = default;
  virtual LogProbMatrix recognize(const Tensor& image, const Box& box,
                                  std::string_view candidate_id) const = 0;
};

struct OracleConfig {
  double temperature = 0.1;  // target logit is 1 / temperature
  double noise = 0.3;        // gaussian sigma added to every logit
  double min_overlap = 0.5;  // below this IoU with every gt: uniform output
  std::uint64_t seed = 0;
};

// Reads the ground-truth word under the box. T frames spell the word as
// char, blank, char, blank, ... padded with blanks. Noise is seeded from
// the candidate id, so identical calls give identical matrices.
class OracleRecognizer : public Recognizer {
 public:
  OracleRecognizer(std::string alphabet, int frames, std::vector<LabeledBox> gts,
                   OracleConfig config = {});

  LogProbMatrix recognize(const Tensor& image, const Box& box,
                          std::string_view candidate_id) const override;

 private:
  std::string alphabet_;
  int frames_;
  std::vector<LabeledBox> gts_;
  OracleConfig config_;
};

// Serves precomputed matrices keyed by candidate id.
class FileRecognizer : public Recognizer {
 public:
  explicit FileRecognizer(const std::vector<RecognitionRecord>& records);

  LogProbMatrix recognize(const Tensor& image, const Box& box,
                          std::string_view candidate_id) const override;

 private:
  std::map<std::string, LogProbMatrix, std::less<>> table_;
};

std::string candidate_id(std::string_view image_id, std::size_t index);

// Low-threshold, high-overlap detection on each scale separately, then the
// top max_candidates_per_image by score (ties: scale order, then rank).
std::vector<Detection> generate_candidates(const DetectorModel& model,
                                           const Tensor& image,
                                           const RescoreConfig& cfg,
                                           const ScaleSet& scales,
                                           InferenceOptions options = {});

// Greedy NMS whose threshold depends on whether the two words agree.
// Throws InputError if a detection has no word.
std::vector<Detection> word_aware_nms(std::span<const Detection> dets,
                                      const RescoreConfig& cfg);

// Replaces each candidate's score with its lexicon score, drops those at or
// below final_score_threshold, then applies word_aware_nms.
std::vector<Detection> rescore_candidates(const Tensor& image,
                                          std::span<const Detection> candidates,
                                          const Lexicon& lexicon,
                                          const Recognizer& recognizer,
                                          const RescoreConfig& cfg,
                                          std::string_view image_id);

std::vector<Detection> spot(const DetectorModel& model, const Tensor& image,
                            const Lexicon& lexicon, const Recognizer& recognizer,
                            const RescoreConfig& cfg, const ScaleSet& scales,
                            std::string_view image_id = "image",
                            InferenceOptions options = {});

}  // namespace textboxes
