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

#include "textboxes/detection_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "textboxes/errors.hpp"

namespace textboxes {

std::string detection_to_json(const DetectionRecord& r) {
  const Box& b = r.det.box;
  nlohmann::json j{{"image_id", r.image_id},
                   {"width", r.width},
                   {"height", r.height},
                   {"score", r.det.score},
                   {"scale_id", r.det.scale_id},
                   {"box", {{"cx", b.cx}, {"cy", b.cy}, {"w", b.w}, {"h", b.h}}},
                   {"pixels",
                    {b.xmin() * r.width, b.ymin() * r.height, b.xmax() * r.width,
                     b.ymax() * r.height}}};
  if (r.det.word) j["word"] = *r.det.word;
  return j.dump();
}

DetectionRecord detection_from_json(const std::string& line, const std::string& where) {
  static const std::vector<std::string> kKeys{"image_id", "width", "height", "score",
                                              "scale_id", "box",   "pixels", "word"};
  try {
    const nlohmann::json j = nlohmann::json::parse(line);
    if (!j.is_object()) throw ParseError(where + ": expected a JSON object");
    for (const auto& item : j.items()) {
      if (std::find(kKeys.begin(), kKeys.end(), item.key()) == kKeys.end()) {
        throw ParseError(where + ": unknown key '" + item.key() + "'");
      }
    }
    DetectionRecord r;
    r.image_id = j.at("image_id").get<std::string>();
    r.width = j.at("width").get<int>();
    r.height = j.at("height").get<int>();
    r.det.score = j.at("score").get<double>();
    r.det.scale_id = j.at("scale_id").get<int>();
    const auto& b = j.at("box");
    r.det.box = {b.at("cx").get<double>(), b.at("cy").get<double>(),
                 b.at("w").get<double>(), b.at("h").get<double>()};
    if (j.contains("word")) r.det.word = j.at("word").get<std::string>();
    if (r.image_id.empty()) throw ParseError(where + ": empty image_id");
    if (r.width < 1 || r.height < 1) throw ParseError(where + ": non-positive image size");
    if (!std::isfinite(r.det.score) || r.det.score < 0.0 || r.det.score > 1.0) {
      throw ParseError(where + ": score outside [0, 1]");
    }
    if (r.det.scale_id < 0) throw ParseError(where + ": negative scale_id");
    const Box& x = r.det.box;
    if (!std::isfinite(x.cx) || !std::isfinite(x.cy) || !(x.w >= 0.0) || !(x.h >= 0.0) ||
        !std::isfinite(x.w) || !std::isfinite(x.h)) {
      throw ParseError(where + ": invalid box");
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(where + ": " + e.what());
  }
}

void write_detections(const std::filesystem::path& path,
                      const std::vector<DetectionRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path.string() + ": cannot open for writing");
  for (const DetectionRecord& r : records) out << detection_to_json(r) << '\n';
  if (!out) throw ParseError(path.string() + ": write failed");
}

std::vector<DetectionRecord> read_detections(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open");
  std::vector<DetectionRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    records.push_back(
        detection_from_json(line, path.string() + ":" + std::to_string(line_no)));
  }
  return records;
}

}  // namespace textboxes
