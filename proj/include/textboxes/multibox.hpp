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

#include <cstddef>
#include <span>
#include <vector>

#include "textboxes/box.hpp"
#include "textboxes/priorbox.hpp"
#include "textboxes/tensor.hpp"

namespace textboxes {

struct LossConfig {
  double alpha = 1.0;
  double neg_pos_ratio = 3.0;
  double match_threshold = 0.5;

  void validate() const;
};

inline constexpr int kBackground = -1;

// Per-prior ground-truth index (or kBackground) and best IoU over all gts.
struct MatchAssignment {
  std::vector<int> labels;
  std::vector<double> best_iou;
  int num_matched = 0;
};

// Two-stage matching. First every gt takes its best free prior, greedily by
// descending IoU (ties: lower gt index, then lower prior index); only
// positive-IoU pairs are used. Then each remaining prior whose best IoU
// exceeds `match_threshold` is assigned to that gt (ties: lower gt index).
MatchAssignment match(std::span<const Box> gts,
                      std::span<const DefaultBox> priors,
                      const LossConfig& cfg);

double smooth_l1(double d);
double smooth_l1_grad(double d);

// Background priors ranked by background cross-entropy (descending, ties by
// prior index); keeps floor(neg_pos_ratio * N) of them, or all if fewer.
// conf_logits has shape (P, 2): column 0 background, column 1 text.
std::vector<std::size_t> hard_negative_mining(const Tensor& conf_logits,
                                              const MatchAssignment& assignment,
                                              const LossConfig& cfg);

// conf_part and loc_part are un-normalized sums;
// total = (conf_part + alpha * loc_part) / N, or 0 when N == 0.
struct LossReport {
  double total = 0.0;
  double conf_part = 0.0;
  double loc_part = 0.0;
  int num_matched = 0;
};

struct MultiboxResult {
  LossReport report;
  Tensor grad_conf;  // (P, 2), d total / d conf_logits
  Tensor grad_loc;   // (P, 4), d total / d loc_preds
};

MultiboxResult multibox_loss(const Tensor& conf_logits, const Tensor& loc_preds,
                             std::span<const Box> gts,
                             std::span<const DefaultBox> priors,
                             const LossConfig& cfg);

// Same, reusing an assignment computed by match().
MultiboxResult multibox_loss(const Tensor& conf_logits, const Tensor& loc_preds,
                             std::span<const Box> gts,
                             std::span<const DefaultBox> priors,
                             const MatchAssignment& assignment,
                             const LossConfig& cfg);

}  // namespace textboxes
