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

#include "textboxes/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "textboxes/errors.hpp"
#include "textboxes/image.hpp"

namespace textboxes {
namespace {

using nlohmann::json;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct IntRect {
  int x, y, w, h;
  bool near(const IntRect& o, int gap) const {
    return x - gap < o.x + o.w && o.x - gap < x + w && y - gap < o.y + o.h &&
           o.y - gap < y + h;
  }
};

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double max_aspect(const SceneSpec& spec) {
  double m = 0.0;
  for (const AspectBin& b : spec.aspect_bins) m = std::max(m, b.hi);
  return m;
}

void paint_background(Tensor& img, std::mt19937_64& rng) {
  const int h = img.dim(1), w = img.dim(2);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int c = 0; c < 3; ++c) {
    const double base = uniform(rng, 0.25, 0.75);
    std::fill(img.raw() + c * plane, img.raw() + (c + 1) * plane, base);
  }
  // Low-frequency blobs; gaussians are separable so each is an outer product.
  const int blobs = uniform_int(rng, 3, 6);
  std::vector<double> gx(static_cast<std::size_t>(w)), gy(static_cast<std::size_t>(h));
  for (int b = 0; b < blobs; ++b) {
    const double cx = uniform(rng, 0.0, w), cy = uniform(rng, 0.0, h);
    const double sigma = uniform(rng, 10.0, 40.0);
    double amp[3];
    for (double& a : amp) a = uniform(rng, -0.2, 0.2);
    for (int x = 0; x < w; ++x) {
      gx[x] = std::exp(-0.5 * (x - cx) * (x - cx) / (sigma * sigma));
    }
    for (int y = 0; y < h; ++y) {
      gy[y] = std::exp(-0.5 * (y - cy) * (y - cy) / (sigma * sigma));
    }
    for (int c = 0; c < 3; ++c) {
      double* p = img.raw() + c * plane;
      for (int y = 0; y < h; ++y) {
        const double row = amp[c] * gy[y];
        for (int x = 0; x < w; ++x) p[static_cast<std::size_t>(y) * w + x] += row * gx[x];
      }
    }
  }
}

// Foreground colour contrasting with the mean background under `r`.
image::Color contrast_color(const Tensor& img, const IntRect& r,
                            std::mt19937_64& rng) {
  const int h = img.dim(1), w = img.dim(2);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  image::Color mean{0, 0, 0};
  for (int c = 0; c < 3; ++c) {
    double s = 0.0;
    for (int y = r.y; y < r.y + r.h; ++y) {
      for (int x = r.x; x < r.x + r.w; ++x) {
        s += img[c * plane + static_cast<std::size_t>(y) * w + x];
      }
    }
    mean[c] = s / (static_cast<double>(r.w) * r.h);
  }
  const double lum = (mean[0] + mean[1] + mean[2]) / 3.0;
  const double delta = uniform(rng, 0.4, 0.6) * (lum > 0.5 ? -1.0 : 1.0);
  image::Color fg;
  for (int c = 0; c < 3; ++c) {
    fg[c] = std::clamp(mean[c] + delta + uniform(rng, -0.05, 0.05), 0.0, 1.0);
  }
  return fg;
}

void fill(Tensor& img, int x0, int y0, int x1, int y1, const image::Color& color) {
  const int h = img.dim(1), w = img.dim(2);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  x1 = std::min(x1, w);
  y1 = std::min(y1, h);
  for (int c = 0; c < 3; ++c) {
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        img[c * plane + static_cast<std::size_t>(y) * w + x] = color[c];
      }
    }
  }
}

int stroke_thickness(int h) {
  return std::max(1, static_cast<int>(std::lround(0.18 * h)));
}

void render_word(Tensor& img, const IntRect& r, const std::string& word,
                 const std::string& alphabet, const image::Color& fg) {
  const int t = stroke_thickness(r.h);
  const double cell = static_cast<double>(r.w) / static_cast<double>(word.size());
  for (std::size_t k = 0; k < word.size(); ++k) {
    const auto glyph = alphabet.find(word[k]);
    const int left = r.x + static_cast<int>(std::lround(k * cell));
    const int right = r.x + static_cast<int>(std::lround((k + 1) * cell));
    const int mid = (left + right) / 2;
    const int stem0 = mid - t / 2;
    fill(img, stem0, r.y, stem0 + t, r.y + r.h, fg);
    const int inset = static_cast<int>(std::floor(0.1 * (right - left)));
    const int cap0 = left + inset, cap1 = std::max(right - inset, cap0 + 1);
    // Glyph identity only changes the caps; every glyph has exactly one stem.
    if (glyph % 3 != 2) fill(img, cap0, r.y, cap1, r.y + t, fg);
    fill(img, cap0, r.y + r.h - t, cap1, r.y + r.h, fg);
    if (glyph % 3 == 1) {
      const int ym = r.y + r.h / 2 - t / 2;
      fill(img, cap0, ym, mid - t / 2, ym + t, fg);
    }
  }
}

void render_distractor(Tensor& img, const IntRect& r, int stripes,
                       const image::Color& fg) {
  const int t = stroke_thickness(r.h);
  for (int s = 0; s < stripes; ++s) {
    const int y0 = r.y + static_cast<int>(std::lround(
                             static_cast<double>(s) * (r.h - t) / (stripes - 1)));
    fill(img, r.x, y0, r.x + r.w, y0 + t, fg);
  }
}

// Draw a rectangle of the requested aspect ratio that fits in the image.
IntRect sample_rect(const SceneSpec& spec, double ar, std::mt19937_64& rng) {
  const int fit_h = static_cast<int>(std::floor((spec.width - 2) / ar));
  const int hi = std::min({spec.max_word_height, fit_h, spec.height - 2});
  const int h = uniform_int(rng, spec.min_word_height, std::max(hi, spec.min_word_height));
  const int w = std::clamp(static_cast<int>(std::lround(ar * h)), 1, spec.width - 2);
  const int x = uniform_int(rng, 1, spec.width - 1 - w);
  const int y = uniform_int(rng, 1, spec.height - 1 - h);
  return {x, y, w, h};
}

json rect_json(const PixelRect& r) {
  return json{{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}};
}

PixelRect rect_from_json(const json& j, const std::string& where) {
  PixelRect r;
  try {
    r.x = j.at("x").get<double>();
    r.y = j.at("y").get<double>();
    r.w = j.at("w").get<double>();
    r.h = j.at("h").get<double>();
  } catch (const json::exception& e) {
    throw ParseError(where + ": bad box: " + e.what());
  }
  if (!std::isfinite(r.x) || !std::isfinite(r.y) || !(r.w > 0.0) ||
      !(r.h > 0.0) || !std::isfinite(r.w) || !std::isfinite(r.h)) {
    throw ParseError(where + ": box must have finite coordinates and positive "
                             "width/height");
  }
  return r;
}

}  // namespace

Box normalize(const PixelRect& r, int image_w, int image_h) {
  return {(r.x + 0.5 * r.w) / image_w, (r.y + 0.5 * r.h) / image_h,
          r.w / image_w, r.h / image_h};
}

PixelRect to_pixels(const Box& b, int image_w, int image_h) {
  return {b.xmin() * image_w, b.ymin() * image_h, b.w * image_w, b.h * image_h};
}

std::vector<Box> Sample::word_boxes() const {
  std::vector<Box> boxes;
  for (const WordAnnotation& a : words) {
    boxes.push_back(normalize(a.rect, width(), height()));
  }
  return boxes;
}

std::vector<Box> Sample::distractor_boxes() const {
  std::vector<Box> boxes;
  for (const PixelRect& r : distractors) boxes.push_back(normalize(r, width(), height()));
  return boxes;
}

SceneSpec SceneSpec::pretrain() {
  SceneSpec s;
  s.min_words = 2;
  s.max_words = 6;
  s.min_word_height = 10;
  s.max_word_height = 28;
  s.min_distractors = 1;
  s.max_distractors = 3;
  s.noise = 0.05;
  s.seed = 1;
  return s;
}

SceneSpec SceneSpec::finetune() {
  SceneSpec s;
  s.seed = 2;
  return s;
}

void SceneSpec::validate() const {
  auto bad = [](const std::string& what) {
    throw InputError("infeasible scene spec: " + what);
  };
  if (width < 16 || height < 16) bad("width and height must be >= 16");
  if (width > 8192 || height > 8192) bad("width and height must be <= 8192");
  if (min_words < 0 || max_words < min_words) bad("need 0 <= min_words <= max_words");
  if (max_words > 256) bad("max_words must be <= 256");
  if (min_distractors < 0 || max_distractors < min_distractors) {
    bad("need 0 <= min_distractors <= max_distractors");
  }
  if (max_distractors > 256) bad("max_distractors must be <= 256");
  if (aspect_bins.empty()) bad("aspect_bins must be non-empty");
  double total = 0.0;
  for (const AspectBin& b : aspect_bins) {
    if (!(b.lo >= 1.0 && b.hi > b.lo)) bad("aspect bins need 1 <= lo < hi");
    if (!(b.weight >= 0.0)) bad("aspect bin weights must be >= 0");
    total += b.weight;
  }
  if (!(total > 0.0)) bad("aspect bin weights sum to zero");
  if (min_word_height < 4 || max_word_height < min_word_height) {
    bad("need 4 <= min_word_height <= max_word_height");
  }
  if (max_word_height > height - 2) bad("max_word_height must be <= height - 2");
  if (min_word_height * max_aspect(*this) > width - 2) {
    bad("a word of min_word_height at the largest aspect ratio must fit the "
        "image width");
  }
  if (!(noise >= 0.0 && noise <= 1.0)) bad("noise must be in [0, 1]");
  if (alphabet.empty()) bad("alphabet must be non-empty");
  std::set<char> seen;
  for (char c : alphabet) {
    if (c <= ' ' || c == 127) bad("alphabet must not contain spaces or control chars");
    if (!seen.insert(c).second) bad("alphabet has duplicate characters");
  }
  if (max_word_length < 1 || max_word_length > 64) bad("max_word_length must be in [1, 64]");
}

Sample generate_sample(const SceneSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  Sample sample;
  sample.image = Tensor(Shape{3, spec.height, spec.width});
  sample.declared_width = spec.width;
  sample.declared_height = spec.height;
  paint_background(sample.image, rng);

  std::vector<double> weights;
  for (const AspectBin& b : spec.aspect_bins) weights.push_back(b.weight);
  std::discrete_distribution<int> pick_bin(weights.begin(), weights.end());
  auto sample_ar = [&] {
    const AspectBin& b = spec.aspect_bins[static_cast<std::size_t>(pick_bin(rng))];
    return uniform(rng, b.lo, b.hi);
  };

  constexpr int kRetries = 100;
  constexpr int kGap = 2;
  std::vector<IntRect> placed;
  auto place = [&](double ar) -> std::optional<IntRect> {
    for (int attempt = 0; attempt < kRetries; ++attempt) {
      const IntRect r = sample_rect(spec, ar, rng);
      if (std::none_of(placed.begin(), placed.end(),
                       [&](const IntRect& o) { return r.near(o, kGap); })) {
        placed.push_back(r);
        return r;
      }
    }
    return std::nullopt;
  };

  const int words = uniform_int(rng, spec.min_words, spec.max_words);
  for (int k = 0; k < words; ++k) {
    const double ar = sample_ar();
    const auto r = place(ar);
    if (!r) continue;
    const double chars_per_height = uniform(rng, 0.6, 1.0);
    const int len = std::clamp(static_cast<int>(std::lround(ar / chars_per_height)),
                               1, spec.max_word_length);
    std::string word;
    for (int c = 0; c < len; ++c) {
      word += spec.alphabet[static_cast<std::size_t>(
          uniform_int(rng, 0, static_cast<int>(spec.alphabet.size()) - 1))];
    }
    render_word(sample.image, *r, word, spec.alphabet,
                contrast_color(sample.image, *r, rng));
    sample.words.push_back({{static_cast<double>(r->x), static_cast<double>(r->y),
                             static_cast<double>(r->w), static_cast<double>(r->h)},
                            word});
  }

  const int distractors = uniform_int(rng, spec.min_distractors, spec.max_distractors);
  for (int k = 0; k < distractors; ++k) {
    const auto r = place(sample_ar());
    if (!r) continue;
    render_distractor(sample.image, *r, uniform_int(rng, 2, 4),
                      contrast_color(sample.image, *r, rng));
    sample.distractors.push_back({static_cast<double>(r->x),
                                  static_cast<double>(r->y),
                                  static_cast<double>(r->w),
                                  static_cast<double>(r->h)});
  }

  if (spec.noise > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.noise);
    for (double& v : sample.image.data()) v += noise(rng);
  }
  for (double& v : sample.image.data()) v = std::clamp(v, 0.0, 1.0);
  image::quantize_u8(sample.image);
  return sample;
}

Sample generate_sample(const SceneSpec& spec, std::uint64_t index) {
  std::mt19937_64 rng(splitmix64(spec.seed ^ splitmix64(index)));
  Sample s = generate_sample(spec, rng);
  s.id = sample_id(static_cast<std::size_t>(index));
  return s;
}

std::vector<Sample> generate_dataset(const SceneSpec& spec, std::size_t count,
                                     std::size_t first_index) {
  std::vector<Sample> samples;
  samples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    samples.push_back(generate_sample(spec, static_cast<std::uint64_t>(first_index + i)));
  }
  return samples;
}

std::string sample_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", index);
  return buf;
}

std::string annotation_to_json(const Sample& sample) {
  json boxes = json::array();
  for (const WordAnnotation& a : sample.words) {
    json b = rect_json(a.rect);
    b["word"] = a.word;
    boxes.push_back(std::move(b));
  }
  json distractors = json::array();
  for (const PixelRect& r : sample.distractors) distractors.push_back(rect_json(r));
  json line{{"image", "images/" + sample.id + ".ppm"},
            {"width", sample.width()},
            {"height", sample.height()},
            {"boxes", std::move(boxes)},
            {"distractors", std::move(distractors)}};
  return line.dump();
}

Sample annotation_from_json(const std::string& line, const std::string& where) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError(where + ": invalid JSON: " + e.what());
  }
  if (!j.is_object()) throw ParseError(where + ": expected a JSON object");
  Sample s;
  try {
    const std::string image = j.at("image").get<std::string>();
    s.id = std::filesystem::path(image).stem().string();
    if (s.id.empty()) throw ParseError(where + ": empty image name");
    s.declared_width = j.at("width").get<int>();
    s.declared_height = j.at("height").get<int>();
    if (s.declared_width < 1 || s.declared_height < 1) {
      throw ParseError(where + ": image size must be positive");
    }
    for (const json& b : j.at("boxes")) {
      WordAnnotation a{rect_from_json(b, where), b.at("word").get<std::string>()};
      if (a.word.empty()) throw ParseError(where + ": empty word");
      s.words.push_back(std::move(a));
    }
    if (j.contains("distractors")) {
      for (const json& b : j.at("distractors")) {
        s.distractors.push_back(rect_from_json(b, where));
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(where + ": " + e.what());
  }
  return s;
}

std::string scene_spec_to_json(const SceneSpec& spec) {
  json bins = json::array();
  for (const AspectBin& b : spec.aspect_bins) {
    bins.push_back({{"lo", b.lo}, {"hi", b.hi}, {"weight", b.weight}});
  }
  json j{{"width", spec.width},
         {"height", spec.height},
         {"min_words", spec.min_words},
         {"max_words", spec.max_words},
         {"aspect_bins", std::move(bins)},
         {"min_word_height", spec.min_word_height},
         {"max_word_height", spec.max_word_height},
         {"min_distractors", spec.min_distractors},
         {"max_distractors", spec.max_distractors},
         {"noise", spec.noise},
         {"alphabet", spec.alphabet},
         {"max_word_length", spec.max_word_length},
         {"seed", spec.seed}};
  return j.dump(2);
}

SceneSpec scene_spec_from_json(const std::string& text, const std::string& where) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(where + ": invalid JSON: " + e.what());
  }
  if (!j.is_object()) throw ParseError(where + ": expected a JSON object");
  SceneSpec s;
  static const std::set<std::string> kKnown{
      "width", "height", "min_words", "max_words", "aspect_bins",
      "min_word_height", "max_word_height", "min_distractors",
      "max_distractors", "noise", "alphabet", "max_word_length", "seed"};
  try {
    for (const auto& [key, value] : j.items()) {
      if (!kKnown.count(key)) throw ParseError(where + ": unknown key '" + key + "'");
    }
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    get("width", s.width);
    get("height", s.height);
    get("min_words", s.min_words);
    get("max_words", s.max_words);
    get("min_word_height", s.min_word_height);
    get("max_word_height", s.max_word_height);
    get("min_distractors", s.min_distractors);
    get("max_distractors", s.max_distractors);
    get("noise", s.noise);
    get("alphabet", s.alphabet);
    get("max_word_length", s.max_word_length);
    get("seed", s.seed);
    if (j.contains("aspect_bins")) {
      s.aspect_bins.clear();
      for (const json& b : j.at("aspect_bins")) {
        s.aspect_bins.push_back({b.at("lo").get<double>(), b.at("hi").get<double>(),
                                 b.value("weight", 1.0)});
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(where + ": " + e.what());
  }
  try {
    s.validate();
  } catch (const InputError& e) {
    throw ParseError(where + ": " + e.what());
  }
  return s;
}

void write_dataset(const std::filesystem::path& dir, const Dataset& dataset) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "images");
  {
    std::ofstream spec(dir / "spec.json");
    spec << scene_spec_to_json(dataset.spec) << '\n';
    if (!spec) throw ParseError((dir / "spec.json").string() + ": write failed");
  }
  std::ofstream ann(dir / "annotations.jsonl");
  if (!ann) throw ParseError((dir / "annotations.jsonl").string() + ": cannot open");
  for (const Sample& s : dataset.samples) {
    image::write_ppm(dir / "images" / (s.id + ".ppm"), s.image);
    ann << annotation_to_json(s) << '\n';
  }
  if (!ann) throw ParseError((dir / "annotations.jsonl").string() + ": write failed");
}

Dataset read_dataset(const std::filesystem::path& dir, bool load_images) {
  namespace fs = std::filesystem;
  Dataset ds;
  const fs::path spec_path = dir / "spec.json";
  if (fs::exists(spec_path)) {
    std::ifstream in(spec_path);
    std::stringstream text;
    text << in.rdbuf();
    ds.spec = scene_spec_from_json(text.str(), spec_path.string());
  }
  const fs::path ann_path = dir / "annotations.jsonl";
  std::ifstream ann(ann_path);
  if (!ann) throw ParseError(ann_path.string() + ": cannot open");
  std::string line;
  int line_no = 0;
  std::set<std::string> ids;
  while (std::getline(ann, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = ann_path.string() + ":" + std::to_string(line_no);
    Sample s = annotation_from_json(line, where);
    if (!ids.insert(s.id).second) throw ParseError(where + ": duplicate image " + s.id);
    if (load_images) {
      s.image = image::read_ppm(dir / "images" / (s.id + ".ppm"));
      if (s.width() != s.declared_width || s.height() != s.declared_height) {
        throw ParseError(where + ": image size does not match " + s.id + ".ppm");
      }
    }
    {
      const double w = s.width(), h = s.height();
      for (const WordAnnotation& a : s.words) {
        if (a.rect.x < 0 || a.rect.y < 0 || a.rect.x + a.rect.w > w ||
            a.rect.y + a.rect.h > h) {
          throw ParseError(where + ": box outside image");
        }
      }
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace textboxes
