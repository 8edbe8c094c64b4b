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
#include <string>
#include <vector>

#include "textboxes/detector.hpp"

namespace textboxes {

// One detection per line:
// {"image_id","width","height","score","scale_id","box":{cx,cy,w,h},
//  "pixels":[x_min,y_min,x_max,y_max],"word"?}
// `box` is normalized and authoritative; `pixels` is informational.
struct DetectionRecord {
  std::string image_id;
  int width = 0;
  int height = 0;
  Detection det;

  friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

std::string detection_to_json(const DetectionRecord& record);
DetectionRecord detection_from_json(const std::string& line, const std::string& where);

void write_detections(const std::filesystem::path& path,
                      const std::vector<DetectionRecord>& records);
std::vector<DetectionRecord> read_detections(const std::filesystem::path& path);

}  // namespace textboxes
