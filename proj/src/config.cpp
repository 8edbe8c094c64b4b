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

#include "textboxes/config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

#include "textboxes/errors.hpp"

namespace textboxes {
namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& msg) const {
    const YAML::Mark m = node.Mark();
    std::string where = source_;
    if (!m.is_null()) {
      where += ":" + std::to_string(m.line + 1) + ":" + std::to_string(m.column + 1);
    }
    throw ParseError(where + ": " + msg);
  }

  void require_map(const YAML::Node& node, const std::string& section,
                   const std::set<std::string>& keys) const {
    if (!node.IsMap()) fail(node, "section '" + section + "' must be a mapping");
    for (const auto& kv : node) {
      const std::string key = kv.first.as<std::string>();
      if (!keys.count(key)) fail(kv.first, "unknown key '" + section + "." + key + "'");
    }
  }

  template <typename T>
  void get(const YAML::Node& map, const char* key, T& out) const {
    const YAML::Node v = map[key];
    if (!v) return;
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      fail(v, std::string("bad value for '") + key + "'");
    }
  }

 private:
  std::string source_;
};

void read_model(const Reader& r, const YAML::Node& n, ModelSpec& m) {
  r.require_map(n, "model", {"input_channels", "backbone", "head_kernel", "head_scales",
                             "aspect_ratios", "vertical_offsets", "background_prior",
                             "init_seed", "input_mean", "init_gain"});
  r.get(n, "input_channels", m.input_channels);
  r.get(n, "backbone", m.backbone);
  if (const YAML::Node k = n["head_kernel"]) {
    std::vector<int> hw;
    r.get(n, "head_kernel", hw);
    if (hw.size() != 2) r.fail(k, "head_kernel must be [height, width]");
    m.head_kernel_h = hw[0];
    m.head_kernel_w = hw[1];
  }
  r.get(n, "head_scales", m.head_scales);
  r.get(n, "aspect_ratios", m.aspect_ratios);
  r.get(n, "vertical_offsets", m.vertical_offsets);
  r.get(n, "background_prior", m.background_prior);
  r.get(n, "init_seed", m.init_seed);
  r.get(n, "input_mean", m.input_mean);
  r.get(n, "init_gain", m.init_gain);
}

void read_train(const Reader& r, const YAML::Node& n, TrainConfig& t) {
  r.require_map(n, "train", {"lr_initial", "lr_after_decay", "decay_iteration", "momentum",
                             "weight_decay", "batch_size", "max_iterations", "seed",
                             "input_size", "flip", "crop", "alpha", "neg_pos_ratio",
                             "match_threshold", "checkpoint_every", "checkpoint_dir"});
  r.get(n, "lr_initial", t.lr_initial);
  r.get(n, "lr_after_decay", t.lr_after_decay);
  r.get(n, "decay_iteration", t.decay_iteration);
  r.get(n, "momentum", t.momentum);
  r.get(n, "weight_decay", t.weight_decay);
  r.get(n, "batch_size", t.batch_size);
  r.get(n, "max_iterations", t.max_iterations);
  r.get(n, "seed", t.seed);
  if (const YAML::Node s = n["input_size"]) {
    std::vector<int> wh;
    r.get(n, "input_size", wh);
    if (wh.size() != 2) r.fail(s, "input_size must be [width, height]");
    t.input_size = {wh[0], wh[1]};
  }
  r.get(n, "flip", t.augmentation.flip);
  r.get(n, "crop", t.augmentation.crop);
  r.get(n, "alpha", t.loss.alpha);
  r.get(n, "neg_pos_ratio", t.loss.neg_pos_ratio);
  r.get(n, "match_threshold", t.loss.match_threshold);
  r.get(n, "checkpoint_every", t.checkpoint_every);
  std::string dir = t.checkpoint_dir.string();
  r.get(n, "checkpoint_dir", dir);
  t.checkpoint_dir = dir;
}

void read_scales(const Reader& r, const YAML::Node& n, ScaleSet& scales) {
  if (!n.IsSequence() || n.size() == 0) r.fail(n, "scales must be a non-empty list");
  scales.clear();
  for (const YAML::Node& item : n) {
    std::vector<int> wh;
    try {
      wh = item.as<std::vector<int>>();
    } catch (const YAML::Exception&) {
      r.fail(item, "each scale must be [width, height]");
    }
    if (wh.size() != 2 || wh[0] < 1 || wh[1] < 1) {
      r.fail(item, "each scale must be [width, height] with positive entries");
    }
    scales.push_back({wh[0], wh[1]});
  }
}

template <typename Fn>
void validated(const Reader& r, const YAML::Node& n, Fn fn) {
  try {
    fn();
  } catch (const InputError& e) {
    r.fail(n, e.what());
  }
}

}  // namespace

Config parse_config(const std::string& text, const std::string& source,
                    const Config& base) {
  const Reader r(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ParseError(source + ":" + std::to_string(e.mark.line + 1) + ":" +
                     std::to_string(e.mark.column + 1) + ": " + e.msg);
  }
  Config c = base;
  if (root.IsNull()) return c;
  r.require_map(root, "<root>",
                {"model", "train", "detect", "scales", "rescore", "oracle", "eval"});
  try {
    if (const YAML::Node n = root["model"]) {
      read_model(r, n, c.model);
      validated(r, n, [&] { c.model.validate(); });
    }
    if (const YAML::Node n = root["train"]) {
      read_train(r, n, c.train);
      validated(r, n, [&] { c.train.validate(); });
    }
    if (const YAML::Node n = root["detect"]) {
      r.require_map(n, "detect", {"score_threshold", "nms_threshold"});
      r.get(n, "score_threshold", c.detect.score);
      r.get(n, "nms_threshold", c.detect.nms);
      validated(r, n, [&] { c.detect.validate(); });
    }
    if (const YAML::Node n = root["scales"]) read_scales(r, n, c.scales);
    if (const YAML::Node n = root["rescore"]) {
      r.require_map(n, "rescore",
                    {"candidate_score_threshold", "candidate_nms_threshold",
                     "max_candidates_per_image", "final_score_threshold",
                     "nms_same_word_threshold", "nms_diff_word_threshold"});
      r.get(n, "candidate_score_threshold", c.rescore.candidate_score_threshold);
      r.get(n, "candidate_nms_threshold", c.rescore.candidate_nms_threshold);
      r.get(n, "max_candidates_per_image", c.rescore.max_candidates_per_image);
      r.get(n, "final_score_threshold", c.rescore.final_score_threshold);
      r.get(n, "nms_same_word_threshold", c.rescore.nms_same_word_threshold);
      r.get(n, "nms_diff_word_threshold", c.rescore.nms_diff_word_threshold);
      validated(r, n, [&] { c.rescore.validate(); });
    }
    if (const YAML::Node n = root["oracle"]) {
      r.require_map(n, "oracle", {"temperature", "noise", "min_overlap", "seed"});
      r.get(n, "temperature", c.oracle.temperature);
      r.get(n, "noise", c.oracle.noise);
      r.get(n, "min_overlap", c.oracle.min_overlap);
      r.get(n, "seed", c.oracle.seed);
      if (!(c.oracle.temperature > 0.0) || !(c.oracle.noise >= 0.0) ||
          !(c.oracle.min_overlap >= 0.0 && c.oracle.min_overlap <= 1.0)) {
        r.fail(n, "oracle needs temperature > 0, noise >= 0, min_overlap in [0, 1]");
      }
    }
    if (const YAML::Node n = root["eval"]) {
      r.require_map(n, "eval", {"iou_threshold", "min_word_length"});
      r.get(n, "iou_threshold", c.eval.iou_threshold);
      r.get(n, "min_word_length", c.eval.min_word_length);
      validated(r, n, [&] { c.eval.validate(); });
    }
  } catch (const YAML::Exception& e) {
    throw ParseError(source + ": " + e.what());
  }
  return c;
}

Config load_config(const std::filesystem::path& path, const Config& base) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open config");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string(), base);
}

std::string config_to_yaml(const Config& c) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;
  e << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "input_channels" << YAML::Value << c.model.input_channels;
  e << YAML::Key << "backbone" << YAML::Value << c.model.backbone;
  e << YAML::Key << "head_kernel" << YAML::Value << YAML::Flow
    << std::vector<int>{c.model.head_kernel_h, c.model.head_kernel_w};
  e << YAML::Key << "head_scales" << YAML::Value << YAML::Flow << c.model.head_scales;
  e << YAML::Key << "aspect_ratios" << YAML::Value << YAML::Flow << c.model.aspect_ratios;
  e << YAML::Key << "vertical_offsets" << YAML::Value << YAML::Flow
    << c.model.vertical_offsets;
  e << YAML::Key << "background_prior" << YAML::Value << c.model.background_prior;
  e << YAML::Key << "init_seed" << YAML::Value << c.model.init_seed;
  e << YAML::Key << "input_mean" << YAML::Value << c.model.input_mean;
  e << YAML::Key << "init_gain" << YAML::Value << c.model.init_gain;
  e << YAML::EndMap;

  const TrainConfig& t = c.train;
  e << YAML::Key << "train" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "lr_initial" << YAML::Value << t.lr_initial;
  e << YAML::Key << "lr_after_decay" << YAML::Value << t.lr_after_decay;
  e << YAML::Key << "decay_iteration" << YAML::Value << t.decay_iteration;
  e << YAML::Key << "momentum" << YAML::Value << t.momentum;
  e << YAML::Key << "weight_decay" << YAML::Value << t.weight_decay;
  e << YAML::Key << "batch_size" << YAML::Value << t.batch_size;
  e << YAML::Key << "max_iterations" << YAML::Value << t.max_iterations;
  e << YAML::Key << "seed" << YAML::Value << t.seed;
  e << YAML::Key << "input_size" << YAML::Value << YAML::Flow
    << std::vector<int>{t.input_size.width, t.input_size.height};
  e << YAML::Key << "flip" << YAML::Value << t.augmentation.flip;
  e << YAML::Key << "crop" << YAML::Value << t.augmentation.crop;
  e << YAML::Key << "alpha" << YAML::Value << t.loss.alpha;
  e << YAML::Key << "neg_pos_ratio" << YAML::Value << t.loss.neg_pos_ratio;
  e << YAML::Key << "match_threshold" << YAML::Value << t.loss.match_threshold;
  e << YAML::Key << "checkpoint_every" << YAML::Value << t.checkpoint_every;
  e << YAML::Key << "checkpoint_dir" << YAML::Value << t.checkpoint_dir.string();
  e << YAML::EndMap;

  e << YAML::Key << "detect" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "score_threshold" << YAML::Value << c.detect.score;
  e << YAML::Key << "nms_threshold" << YAML::Value << c.detect.nms;
  e << YAML::EndMap;

  e << YAML::Key << "scales" << YAML::Value << YAML::BeginSeq;
  for (const ImageSize& s : c.scales) {
    e << YAML::Flow << std::vector<int>{s.width, s.height};
  }
  e << YAML::EndSeq;

  const RescoreConfig& rs = c.rescore;
  e << YAML::Key << "rescore" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "candidate_score_threshold" << YAML::Value << rs.candidate_score_threshold;
  e << YAML::Key << "candidate_nms_threshold" << YAML::Value << rs.candidate_nms_threshold;
  e << YAML::Key << "max_candidates_per_image" << YAML::Value << rs.max_candidates_per_image;
  e << YAML::Key << "final_score_threshold" << YAML::Value << rs.final_score_threshold;
  e << YAML::Key << "nms_same_word_threshold" << YAML::Value << rs.nms_same_word_threshold;
  e << YAML::Key << "nms_diff_word_threshold" << YAML::Value << rs.nms_diff_word_threshold;
  e << YAML::EndMap;

  e << YAML::Key << "oracle" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "temperature" << YAML::Value << c.oracle.temperature;
  e << YAML::Key << "noise" << YAML::Value << c.oracle.noise;
  e << YAML::Key << "min_overlap" << YAML::Value << c.oracle.min_overlap;
  e << YAML::Key << "seed" << YAML::Value << c.oracle.seed;
  e << YAML::EndMap;

  e << YAML::Key << "eval" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "iou_threshold" << YAML::Value << c.eval.iou_threshold;
  e << YAML::Key << "min_word_length" << YAML::Value << c.eval.min_word_length;
  e << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

}  // namespace textboxes
