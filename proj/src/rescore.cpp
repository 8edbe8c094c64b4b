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

#include "textboxes/rescore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "textboxes/errors.hpp"
#include "textboxes/image.hpp"

namespace textboxes {
namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}


}  // namespace

void RescoreConfig::validate() const {
  auto unit = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw InputError(std::string(name) + " must lie in [0, 1]");
    }
  };
  unit(candidate_score_threshold, "candidate_score_threshold");
  unit(candidate_nms_threshold, "candidate_nms_threshold");
  unit(final_score_threshold, "final_score_threshold");
  unit(nms_same_word_threshold, "nms_same_word_threshold");
  unit(nms_diff_word_threshold, "nms_diff_word_threshold");
  if (max_candidates_per_image < 1) {
    throw InputError("max_candidates_per_image must be positive");
  }
  if (nms_same_word_threshold > nms_diff_word_threshold) {
    throw InputError("nms_same_word_threshold must not exceed nms_diff_word_threshold");
  }
}

OracleRecognizer::OracleRecognizer(std::string alphabet, int frames,
                                   std::vector<LabeledBox> gts, OracleConfig config)
    : alphabet_(std::move(alphabet)), frames_(frames), gts_(std::move(gts)),
      config_(config) {
  if (frames_ < 1) throw InputError("oracle recognizer needs at least one frame");
  if (!(config_.temperature > 0.0)) throw InputError("oracle temperature must be positive");
  if (!(config_.noise >= 0.0)) throw InputError("oracle noise must be non-negative");
  (void)LogProbMatrix::uniform(alphabet_, 1);  // validates the alphabet
}

LogProbMatrix OracleRecognizer::recognize(const Tensor&, const Box& box,
                                          std::string_view candidate_id) const {
  const LabeledBox* best = nullptr;
  double best_iou = 0.0;
  for (const LabeledBox& g : gts_) {
    const double o = iou(box, g.box);
    if (o > best_iou) {
      best_iou = o;
      best = &g;
    }
  }
  if (best == nullptr || best_iou < config_.min_overlap) {
    return LogProbMatrix::uniform(alphabet_, frames_);
  }

  const int k = static_cast<int>(alphabet_.size()) + 1;
  const int blank = k - 1;
  std::vector<int> labels;
  for (char c : best->word) {
    const auto pos = alphabet_.find(c);
    if (pos != std::string::npos) labels.push_back(static_cast<int>(pos));
  }
  // char, blank, char, blank, ...; when short on frames only the blanks
  // separating repeats are kept.
  std::vector<int> path;
  const bool roomy = labels.size() * 2 <= static_cast<std::size_t>(frames_);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    path.push_back(labels[i]);
    const bool needed = i + 1 < labels.size() && labels[i + 1] == labels[i];
    if (roomy || needed) path.push_back(blank);
  }
  path.resize(static_cast<std::size_t>(frames_), blank);

  std::mt19937_64 rng(config_.seed ^ fnv1a(candidate_id));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> logits(static_cast<std::size_t>(frames_) * k);
  const double peak = 1.0 / config_.temperature;
  for (int t = 0; t < frames_; ++t) {
    for (int j = 0; j < k; ++j) {
      double v = j == path[t] ? peak : 0.0;
      if (config_.noise > 0.0) v += config_.noise * gauss(rng);
      logits[static_cast<std::size_t>(t) * k + j] = v;
    }
  }
  return LogProbMatrix::from_logits(alphabet_, frames_, logits);
}

FileRecognizer::FileRecognizer(const std::vector<RecognitionRecord>& records) {
  for (const RecognitionRecord& r : records) {
    if (!table_.emplace(r.candidate_id, r.logprobs).second) {
      throw InputError("duplicate candidate id '" + r.candidate_id +
                       "' in recognizer records");
    }
  }
}

LogProbMatrix FileRecognizer::recognize(const Tensor&, const Box&,
                                        std::string_view candidate_id) const {
  const auto it = table_.find(candidate_id);
  if (it == table_.end()) {
    throw InputError("no recognizer output for candidate '" +
                     std::string(candidate_id) + "'");
  }
  return it->second;
}

std::string candidate_id(std::string_view image_id, std::size_t index) {
  return std::string(image_id) + "#" + std::to_string(index);
}

std::vector<Detection> generate_candidates(const DetectorModel& model,
                                           const Tensor& image,
                                           const RescoreConfig& cfg,
                                           const ScaleSet& scales,
                                           InferenceOptions options) {
  cfg.validate();
  if (scales.empty()) throw InputError("scale set is empty");
  std::vector<Detection> pool;
  for (std::size_t s = 0; s < scales.size(); ++s) {
    const Tensor resized =
        image::resize_bilinear(image, scales[s].width, scales[s].height);
    std::vector<Detection> dets =
        detect_single_scale(model, resized, cfg.candidate_score_threshold,
                            cfg.candidate_nms_threshold, options);
    for (Detection& d : dets) {
      d.scale_id = static_cast<int>(s);
      pool.push_back(std::move(d));
    }
  }
  std::stable_sort(pool.begin(), pool.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });
  if (pool.size() > static_cast<std::size_t>(cfg.max_candidates_per_image)) {
    pool.resize(static_cast<std::size_t>(cfg.max_candidates_per_image));
  }
  return pool;
}

std::vector<Detection> word_aware_nms(std::span<const Detection> dets,
                                      const RescoreConfig& cfg) {
  for (const Detection& d : dets) {
    if (!d.word) throw InputError("word_aware_nms: detection without a word");
  }
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].score > dets[b].score;
  });
  std::vector<Detection> kept;
  for (std::size_t idx : order) {
    const Detection& cand = dets[idx];
    bool keep = true;
    for (const Detection& k : kept) {
      const double thr = *k.word == *cand.word ? cfg.nms_same_word_threshold
                                               : cfg.nms_diff_word_threshold;
      if (iou(k.box, cand.box) > thr) {
        keep = false;
        break;
      }
    }
    if (keep) kept.push_back(cand);
  }
  return kept;
}

std::vector<Detection> rescore_candidates(const Tensor& image,
                                          std::span<const Detection> candidates,
                                          const Lexicon& lexicon,
                                          const Recognizer& recognizer,
                                          const RescoreConfig& cfg,
                                          std::string_view image_id) {
  cfg.validate();
  std::vector<Detection> scored;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const LogProbMatrix m =
        recognizer.recognize(image, candidates[i].box, candidate_id(image_id, i));
    const LexiconMatch match = lexicon_score(m, lexicon);
    if (!(match.score > cfg.final_score_threshold)) continue;
    Detection d = candidates[i];
    d.score = match.score;
    d.word = match.word;
    scored.push_back(std::move(d));
  }
  return word_aware_nms(scored, cfg);
}

std::vector<Detection> spot(const DetectorModel& model, const Tensor& image,
                            const Lexicon& lexicon, const Recognizer& recognizer,
                            const RescoreConfig& cfg, const ScaleSet& scales,
                            std::string_view image_id, InferenceOptions options) {
  const std::vector<Detection> candidates =
      generate_candidates(model, image, cfg, scales, options);
  return rescore_candidates(image, candidates, lexicon, recognizer, cfg, image_id);
}

}  // namespace textboxes
