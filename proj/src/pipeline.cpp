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

#include "textboxes/pipeline.hpp"

#include <algorithm>

#include "textboxes/errors.hpp"
#include "textboxes/trainer.hpp"

namespace textboxes {

std::vector<ImageEntry> list_images(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::path root = dir;
  if (fs::is_directory(dir / "images")) root = dir / "images";
  if (!fs::is_directory(root)) throw ParseError(dir.string() + ": not a directory");
  std::vector<ImageEntry> out;
  for (const fs::directory_entry& e : fs::directory_iterator(root)) {
    if (e.is_regular_file() && e.path().extension() == ".ppm") {
      out.push_back({e.path().stem().string(), e.path()});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const ImageEntry& a, const ImageEntry& b) { return a.path < b.path; });
  return out;
}

std::vector<EvalImage> eval_images(std::span<const Sample> samples,
                                   std::span<const std::vector<Detection>> dets) {
  if (samples.size() != dets.size()) {
    throw InputError("eval_images: " + std::to_string(samples.size()) + " samples but " +
                     std::to_string(dets.size()) + " detection lists");
  }
  std::vector<EvalImage> out;
  out.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    EvalImage e;
    e.image_id = samples[i].id;
    e.dets = dets[i];
    e.gts = labeled_boxes(samples[i]);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace textboxes
