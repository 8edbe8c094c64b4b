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
#include <random>
#include <string>
#include <vector>

#include "textboxes/box.hpp"
#include "textboxes/tensor.hpp"

namespace textboxes {

// Rectangle in pixel coordinates, (x, y) = top-left corner.
struct PixelRect {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

Box normalize(const PixelRect& r, int image_w, int image_h);
PixelRect to_pixels(const Box& b, int image_w, int image_h);

struct WordAnnotation {
  PixelRect rect;
  std::string word;
  friend bool operator==(const WordAnnotation&, const WordAnnotation&) = default;
};

struct Sample {
  std::string id;
  Tensor image;  // (3, H, W), values k/255
  std::vector<WordAnnotation> words;
  std::vector<PixelRect> distractors;
  // Image size as recorded in the annotation; used when pixels are not loaded.
  int declared_width = 0;
  int declared_height = 0;

  int width() const { return image.empty() ? declared_width : image.dim(2); }
  int height() const { return image.empty() ? declared_height : image.dim(1); }
  std::vector<Box> word_boxes() const;
  std::vector<Box> distractor_boxes() const;

  friend bool operator==(const Sample&, const Sample&) = default;
};

// Piecewise-uniform aspect-ratio (width / height) distribution.
struct AspectBin {
  double lo = 1.0;
  double hi = 2.0;
  double weight = 1.0;
  friend bool operator==(const AspectBin&, const AspectBin&) = default;
};

struct SceneSpec {
  int width = 128;
  int height = 128;
  int min_words = 1;
  int max_words = 4;
  std::vector<AspectBin> aspect_bins{
      {1, 2, 1}, {2, 3, 1}, {3, 5, 1}, {5, 7, 1}, {7, 10, 1}};
  int min_word_height = 10;
  int max_word_height = 24;
  int min_distractors = 1;
  int max_distractors = 2;
  double noise = 0.02;  // per-pixel gaussian sigma
  std::string alphabet = "abcdefghijklmnopqrstuvwxyz";
  int max_word_length = 16;
  std::uint64_t seed = 0;

  // Dense, noisy scenes for pretraining.
  static SceneSpec pretrain();
  // Sparser, cleaner scenes for finetuning and evaluation.
  static SceneSpec finetune();

  // Throws InputError naming the violated constraint.
  void validate() const;

  friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

// Words are rows of glyphs, one vertical stem per character, so the stem
// count equals the word length. Distractors are horizontally striped
// rectangles. No two placed objects intersect.
Sample generate_sample(const SceneSpec& spec, std::mt19937_64& rng);

// Sample `index` of the stream defined by spec.seed; independent of others.
Sample generate_sample(const SceneSpec& spec, std::uint64_t index);
std::vector<Sample> generate_dataset(const SceneSpec& spec, std::size_t count,
                                     std::size_t first_index = 0);

std::string sample_id(std::size_t index);

struct Dataset {
  SceneSpec spec;
  std::vector<Sample> samples;
};

// Layout: images/NNNNNN.ppm, annotations.jsonl, spec.json.
void write_dataset(const std::filesystem::path& dir, const Dataset& dataset);
// Images are loaded unless `load_images` is false (annotations only).
Dataset read_dataset(const std::filesystem::path& dir, bool load_images = true);

// One annotation line: {"image": ..., "boxes": [{x,y,w,h,word}], "distractors": [...]}.
std::string annotation_to_json(const Sample& sample);
// Parses one line; `where` is used as the error prefix.
Sample annotation_from_json(const std::string& line, const std::string& where);

std::string scene_spec_to_json(const SceneSpec& spec);
SceneSpec scene_spec_from_json(const std::string& text, const std::string& where);

}  // namespace textboxes
