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

#include "textboxes/detector.hpp"
#include "textboxes/evaluation.hpp"
#include "textboxes/model.hpp"
#include "textboxes/rescore.hpp"
#include "textboxes/trainer.hpp"

namespace textboxes {

// Everything a pipeline run needs. Sections: model, train, detect, scales,
// rescore, oracle, eval. Missing keys keep their defaults.
struct Config {
  ModelSpec model;
  TrainConfig train;
  DetectThresholds detect;
  ScaleSet scales = default_scale_set();
  RescoreConfig rescore;
  OracleConfig oracle;
  EvalProtocol eval;
};

// Keys present in `text` override `base`. Throws ParseError (with
// source:line:column) on malformed YAML, unknown keys, wrong types or
// invalid values.
Config parse_config(const std::string& text, const std::string& source = "<config>",
                    const Config& base = {});
Config load_config(const std::filesystem::path& path, const Config& base = {});

// Emits every field; parse_config(config_to_yaml(c)) reproduces c.
std::string config_to_yaml(const Config& config);

}  // namespace textboxes
