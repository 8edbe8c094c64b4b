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

#include "textboxes/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "textboxes/errors.hpp"
#include "textboxes/image.hpp"

namespace textboxes {
namespace {

constexpr int kUnmatched = -1;
constexpr int kIgnored = -2;

std::vector<std::size_t> score_order(const std::vector<Detection>& dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].score > dets[b].score;
  });
  return order;
}

// Best unmatched, non-ignored gt accepted by `accept`; -1 if none.
template <typename Accept>
int best_gt(const Detection& det, const std::vector<LabeledBox>& gts,
            const std::vector<bool>& taken, const std::vector<bool>& ignored,
            double threshold, Accept accept) {
  int best = -1;
  double best_iou = -1.0;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (taken[g] || ignored[g] || !accept(g)) continue;
    const double o = iou(det.box, gts[g].box);
    if (o >= threshold && o > best_iou) {
      best_iou = o;
      best = static_cast<int>(g);
    }
  }
  return best;
}

void finish_counts(ImageMatches& m) {
  m.tp = m.fp = m.fn = 0;
  for (int v : m.det_to_gt) {
    if (v >= 0) ++m.tp;
    else if (v == kUnmatched) ++m.fp;
  }
  for (std::size_t g = 0; g < m.gt_matched.size(); ++g) {
    if (!m.gt_ignored[g] && !m.gt_matched[g]) ++m.fn;
  }
}

EvalReport reduce(std::vector<ImageMatches> images) {
  EvalReport r;
  for (const ImageMatches& m : images) {
    r.tp += m.tp;
    r.fp += m.fp;
    r.fn += m.fn;
  }
  const long dets = r.tp + r.fp;
  const long gts = r.tp + r.fn;
  r.precision_defined = dets > 0;
  r.recall_defined = gts > 0;
  if (dets == 0 && gts == 0) {
    r.precision = r.recall = r.f_measure = 1.0;
  } else {
    r.precision = dets > 0 ? static_cast<double>(r.tp) / dets : 0.0;
    r.recall = gts > 0 ? static_cast<double>(r.tp) / gts : 1.0;
    r.f_measure = f_measure(r.precision, r.recall);
  }
  r.images = std::move(images);
  return r;
}

}  // namespace

void EvalProtocol::validate() const {
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
    throw InputError("iou_threshold must lie in (0, 1)");
  }
  if (min_word_length < 0) throw InputError("min_word_length must be non-negative");
}

double f_measure(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

std::string normalize_word(std::string_view word) {
  std::size_t b = 0;
  std::size_t e = word.size();
  auto punct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
  while (b < e && punct(word[b])) ++b;
  while (e > b && punct(word[e - 1])) --e;
  std::string out(word.substr(b, e - b));
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

ImageMatches match_localization(const std::vector<Detection>& dets,
                                const std::vector<LabeledBox>& gts,
                                const EvalProtocol& protocol) {
  protocol.validate();
  ImageMatches m;
  m.det_to_gt.assign(dets.size(), kUnmatched);
  m.gt_matched.assign(gts.size(), false);
  m.gt_ignored.assign(gts.size(), false);
  for (std::size_t d : score_order(dets)) {
    const int g = best_gt(dets[d], gts, m.gt_matched, m.gt_ignored,
                          protocol.iou_threshold, [](std::size_t) { return true; });
    if (g >= 0) {
      m.det_to_gt[d] = g;
      m.gt_matched[g] = true;
    }
  }
  finish_counts(m);
  return m;
}

ImageMatches match_spotting(const std::vector<Detection>& dets,
                            const std::vector<LabeledBox>& gts,
                            const EvalProtocol& protocol) {
  protocol.validate();
  ImageMatches m;
  m.det_to_gt.assign(dets.size(), kUnmatched);
  m.gt_matched.assign(gts.size(), false);
  m.gt_ignored.assign(gts.size(), false);
  std::vector<std::string> gt_words(gts.size());
  for (std::size_t g = 0; g < gts.size(); ++g) {
    gt_words[g] = normalize_word(gts[g].word);
    m.gt_ignored[g] = static_cast<int>(gt_words[g].size()) < protocol.min_word_length;
  }
  const std::vector<bool> none(gts.size(), false);
  for (std::size_t d : score_order(dets)) {
    const std::string word = dets[d].word ? normalize_word(*dets[d].word) : std::string();
    const int g = best_gt(dets[d], gts, m.gt_matched, m.gt_ignored, protocol.iou_threshold,
                          [&](std::size_t i) { return dets[d].word && gt_words[i] == word; });
    if (g >= 0) {
      m.det_to_gt[d] = g;
      m.gt_matched[g] = true;
      continue;
    }
    // A detection sitting on an ignored gt counts neither way.
    for (std::size_t i = 0; i < gts.size(); ++i) {
      if (m.gt_ignored[i] && iou(dets[d].box, gts[i].box) >= protocol.iou_threshold) {
        m.det_to_gt[d] = kIgnored;
        break;
      }
    }
  }
  finish_counts(m);
  return m;
}

EvalReport eval_localization(std::span<const EvalImage> images,
                             const EvalProtocol& protocol) {
  std::vector<ImageMatches> all;
  for (const EvalImage& im : images) {
    all.push_back(match_localization(im.dets, im.gts, protocol));
    all.back().image_id = im.image_id;
  }
  return reduce(std::move(all));
}

EvalReport eval_spotting(std::span<const EvalImage> images,
                         const EvalProtocol& protocol) {
  std::vector<ImageMatches> all;
  for (const EvalImage& im : images) {
    all.push_back(match_spotting(im.dets, im.gts, protocol));
    all.back().image_id = im.image_id;
  }
  return reduce(std::move(all));
}

std::string report_to_json(const EvalReport& report, const std::string& task) {
  nlohmann::json per_image = nlohmann::json::array();
  for (const ImageMatches& m : report.images) {
    nlohmann::json gm = nlohmann::json::array();
    for (std::size_t g = 0; g < m.gt_matched.size(); ++g) {
      gm.push_back(m.gt_ignored[g] ? nlohmann::json("ignored")
                                   : nlohmann::json(static_cast<bool>(m.gt_matched[g])));
    }
    per_image.push_back({{"image_id", m.image_id},
                         {"det_to_gt", m.det_to_gt},
                         {"gt_matched", gm},
                         {"tp", m.tp},
                         {"fp", m.fp},
                         {"fn", m.fn}});
  }
  nlohmann::json j{{"task", task},
                   {"precision", report.precision},
                   {"recall", report.recall},
                   {"f_measure", report.f_measure},
                   {"precision_defined", report.precision_defined},
                   {"recall_defined", report.recall_defined},
                   {"tp", report.tp},
                   {"fp", report.fp},
                   {"fn", report.fn},
                   {"images", per_image}};
  return j.dump(2) + "\n";
}

std::string report_to_table(const EvalReport& report, const std::string& label) {
  return reports_to_table({{label, report}});
}

std::string reports_to_table(const std::vector<std::pair<std::string, EvalReport>>& rows) {
  int width = 6;
  for (const auto& row : rows) width = std::max<int>(width, static_cast<int>(row.first.size()));
  char buf[256];
  std::ostringstream out;
  std::snprintf(buf, sizeof buf, "%-*s | %6s | %6s | %6s | %6s | %6s | %6s\n", width,
                "Method", "P", "R", "F", "TP", "FP", "FN");
  out << buf << std::string(static_cast<std::size_t>(width) + 57, '-') << "\n";
  for (const auto& [label, report] : rows) {
    std::snprintf(buf, sizeof buf, "%-*s | %6.3f | %6.3f | %6.3f | %6ld | %6ld | %6ld\n",
                  width, label.c_str(), report.precision, report.recall, report.f_measure,
                  report.tp, report.fp, report.fn);
    out << buf;
  }
  return out.str();
}

Tensor render_overlay(const Tensor& image, const EvalImage& item,
                      const ImageMatches& matches) {
  Tensor out = image;
  const double w = image::width(image);
  const double h = image::height(image);
  const image::Color green{0.0, 1.0, 0.0};
  const image::Color red{1.0, 0.0, 0.0};
  auto draw = [&](const Box& b, const image::Color& c, int dash) {
    image::draw_rect(out, b.xmin() * w, b.ymin() * h, b.xmax() * w, b.ymax() * h, c, dash);
  };
  for (std::size_t g = 0; g < item.gts.size() && g < matches.gt_matched.size(); ++g) {
    if (!matches.gt_matched[g] && !matches.gt_ignored[g]) draw(item.gts[g].box, red, 2);
  }
  for (std::size_t d = 0; d < item.dets.size() && d < matches.det_to_gt.size(); ++d) {
    const int v = matches.det_to_gt[d];
    if (v == kIgnored) continue;
    draw(item.dets[d].box, v >= 0 ? green : red, 0);
  }
  return out;
}

}  // namespace textboxes
