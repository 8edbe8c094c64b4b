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

#include "textboxes/multibox.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "textboxes/errors.hpp"

namespace textboxes {
namespace {

// -log softmax(logits)[cls] for a 2-class pair.
double cross_entropy2(double l0, double l1, int cls) {
  const double m = std::max(l0, l1);
  const double lse = m + std::log(std::exp(l0 - m) + std::exp(l1 - m));
  return lse - (cls == 0 ? l0 : l1);
}

void require_rows(const Tensor& t, std::size_t rows, int cols, const char* what) {
  if (t.rank() != 2 || static_cast<std::size_t>(t.dim(0)) != rows ||
      t.dim(1) != cols) {
    throw ShapeError(std::string(what) + ": expected (" + std::to_string(rows) +
                     "x" + std::to_string(cols) + "), got " +
                     shape_to_string(t.shape()));
  }
}

}  // namespace

void LossConfig::validate() const {
  if (!(alpha > 0.0)) throw InputError("loss alpha must be > 0");
  if (!(neg_pos_ratio >= 0.0)) throw InputError("neg_pos_ratio must be >= 0");
  if (!(match_threshold > 0.0 && match_threshold < 1.0)) {
    throw InputError("match_threshold must be in (0, 1)");
  }
}

MatchAssignment match(std::span<const Box> gts,
                      std::span<const DefaultBox> priors,
                      const LossConfig& cfg) {
  if (priors.empty()) throw InputError("match: no priors");
  const std::size_t num_priors = priors.size();
  const std::size_t num_gts = gts.size();
  MatchAssignment result;
  result.labels.assign(num_priors, kBackground);
  result.best_iou.assign(num_priors, 0.0);
  if (num_gts == 0) return result;

  std::vector<double> overlaps(num_gts * num_priors);
  for (std::size_t g = 0; g < num_gts; ++g) {
    for (std::size_t p = 0; p < num_priors; ++p) {
      const double v = iou(gts[g], priors[p].box);
      overlaps[g * num_priors + p] = v;
      result.best_iou[p] = std::max(result.best_iou[p], v);
    }
  }

  // Bipartite stage.
  std::vector<bool> gt_done(num_gts, false);
  for (std::size_t round = 0; round < num_gts; ++round) {
    double best = 0.0;
    std::size_t best_gt = num_gts, best_prior = num_priors;
    for (std::size_t g = 0; g < num_gts; ++g) {
      if (gt_done[g]) continue;
      const double* row = overlaps.data() + g * num_priors;
      for (std::size_t p = 0; p < num_priors; ++p) {
        if (row[p] > best && result.labels[p] == kBackground) {
          best = row[p];
          best_gt = g;
          best_prior = p;
        }
      }
    }
    if (best_gt == num_gts) break;
    result.labels[best_prior] = static_cast<int>(best_gt);
    gt_done[best_gt] = true;
  }

  // Threshold stage.
  for (std::size_t p = 0; p < num_priors; ++p) {
    if (result.labels[p] != kBackground) continue;
    double best = 0.0;
    int best_gt = kBackground;
    for (std::size_t g = 0; g < num_gts; ++g) {
      const double v = overlaps[g * num_priors + p];
      if (v > best) {
        best = v;
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt != kBackground && best > cfg.match_threshold) {
      result.labels[p] = best_gt;
    }
  }

  result.num_matched = static_cast<int>(std::count_if(
      result.labels.begin(), result.labels.end(),
      [](int l) { return l != kBackground; }));
  return result;
}

double smooth_l1(double d) {
  const double a = std::abs(d);
  return a < 1.0 ? 0.5 * d * d : a - 0.5;
}

double smooth_l1_grad(double d) {
  if (d >= 1.0) return 1.0;
  if (d <= -1.0) return -1.0;
  return d;
}

std::vector<std::size_t> hard_negative_mining(const Tensor& conf_logits,
                                              const MatchAssignment& assignment,
                                              const LossConfig& cfg) {
  const std::size_t num_priors = assignment.labels.size();
  require_rows(conf_logits, num_priors, 2, "hard_negative_mining");

  std::vector<std::size_t> negatives;
  std::vector<double> loss(num_priors, 0.0);
  for (std::size_t p = 0; p < num_priors; ++p) {
    if (assignment.labels[p] != kBackground) continue;
    negatives.push_back(p);
    loss[p] = cross_entropy2(conf_logits[2 * p], conf_logits[2 * p + 1], 0);
  }
  const double quota = std::floor(cfg.neg_pos_ratio * assignment.num_matched);
  const std::size_t keep =
      std::min(negatives.size(), static_cast<std::size_t>(quota));
  std::partial_sort(negatives.begin(), negatives.begin() + keep, negatives.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (loss[a] != loss[b]) return loss[a] > loss[b];
                      return a < b;
                    });
  negatives.resize(keep);
  return negatives;
}

MultiboxResult multibox_loss(const Tensor& conf_logits, const Tensor& loc_preds,
                             std::span<const Box> gts,
                             std::span<const DefaultBox> priors,
                             const LossConfig& cfg) {
  return multibox_loss(conf_logits, loc_preds, gts, priors,
                       match(gts, priors, cfg), cfg);
}

MultiboxResult multibox_loss(const Tensor& conf_logits, const Tensor& loc_preds,
                             std::span<const Box> gts,
                             std::span<const DefaultBox> priors,
                             const MatchAssignment& assignment,
                             const LossConfig& cfg) {
  cfg.validate();
  const std::size_t num_priors = priors.size();
  require_rows(conf_logits, num_priors, 2, "multibox_loss conf_logits");
  require_rows(loc_preds, num_priors, 4, "multibox_loss loc_preds");
  if (assignment.labels.size() != num_priors) {
    throw ShapeError("multibox_loss: assignment covers " +
                     std::to_string(assignment.labels.size()) +
                     " priors, expected " + std::to_string(num_priors));
  }

  MultiboxResult result{{}, Tensor(conf_logits.shape()), Tensor(loc_preds.shape())};
  const int n = assignment.num_matched;
  result.report.num_matched = n;
  if (n == 0) return result;
  const double inv_n = 1.0 / n;

  auto add_conf = [&](std::size_t p, int cls) {
    const double l0 = conf_logits[2 * p], l1 = conf_logits[2 * p + 1];
    result.report.conf_part += cross_entropy2(l0, l1, cls);
    const double m = std::max(l0, l1);
    const double e0 = std::exp(l0 - m), e1 = std::exp(l1 - m);
    const double p0 = e0 / (e0 + e1), p1 = e1 / (e0 + e1);
    result.grad_conf[2 * p] = (p0 - (cls == 0 ? 1.0 : 0.0)) * inv_n;
    result.grad_conf[2 * p + 1] = (p1 - (cls == 1 ? 1.0 : 0.0)) * inv_n;
  };

  for (std::size_t p = 0; p < num_priors; ++p) {
    const int g = assignment.labels[p];
    if (g == kBackground) continue;
    add_conf(p, 1);
    const OffsetVector t = encode(priors[p], gts[static_cast<std::size_t>(g)]);
    const double target[4] = {t.dx, t.dy, t.dw, t.dh};
    for (int k = 0; k < 4; ++k) {
      const double d = loc_preds[4 * p + k] - target[k];
      result.report.loc_part += smooth_l1(d);
      result.grad_loc[4 * p + k] = cfg.alpha * smooth_l1_grad(d) * inv_n;
    }
  }
  for (std::size_t p : hard_negative_mining(conf_logits, assignment, cfg)) {
    add_conf(p, 0);
  }

  result.report.total =
      (result.report.conf_part + cfg.alpha * result.report.loc_part) * inv_n;
  return result;
}

}  // namespace textboxes
