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

#include "textboxes/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "textboxes/errors.hpp"
#include "textboxes/image.hpp"

namespace textboxes {

double TrainConfig::learning_rate(int iteration) const {
  return iteration < decay_iteration ? lr_initial : lr_after_decay;
}

void TrainConfig::validate() const {
  if (!(lr_initial >= 0.0) || !(lr_after_decay >= 0.0)) {
    throw InputError("learning rates must be non-negative");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InputError("momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0)) throw InputError("weight_decay must be >= 0");
  if (batch_size < 1) throw InputError("batch_size must be positive");
  if (max_iterations < 0) throw InputError("max_iterations must be >= 0");
  if (decay_iteration < 0 || decay_iteration > max_iterations) {
    throw InputError("decay_iteration must be in [0, max_iterations]");
  }
  if (input_size.width < 1 || input_size.height < 1) {
    throw InputError("input_size must be positive");
  }
  if (checkpoint_every < 0) throw InputError("checkpoint_every must be >= 0");
  loss.validate();
}

void write_train_log_csv(std::ostream& os, const TrainLog& log) {
  const auto old_precision = os.precision(17);
  os << "iteration,total,conf,loc,lr\n";
  for (const TrainLogEntry& e : log) {
    os << e.iteration << ',' << e.total << ',' << e.conf << ',' << e.loc << ','
       << e.lr << '\n';
  }
  os.precision(old_precision);
}

TrainLog read_train_log_csv(std::istream& is, const std::string& source) {
  std::string line;
  if (!std::getline(is, line) || line != "iteration,total,conf,loc,lr") {
    throw ParseError(source + ":1: missing train log header");
  }
  TrainLog log;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    TrainLogEntry e;
    std::string extra;
    if (!(ls >> e.iteration >> e.total >> e.conf >> e.loc >> e.lr) || (ls >> extra)) {
      throw ParseError(source + ":" + std::to_string(line_no) +
                       ": expected 5 comma-separated fields");
    }
    log.push_back(e);
  }
  return log;
}

void sgd_step(std::span<Tensor* const> params, std::span<const Tensor> grads,
              std::vector<Tensor>& velocity, const TrainConfig& cfg,
              int iteration) {
  if (params.size() != grads.size()) {
    throw ShapeError("sgd_step: " + std::to_string(params.size()) +
                     " parameters but " + std::to_string(grads.size()) +
                     " gradients");
  }
  if (velocity.empty()) {
    for (const Tensor* p : params) velocity.emplace_back(p->shape());
  }
  if (velocity.size() != params.size()) {
    throw ShapeError("sgd_step: velocity count does not match parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(*params[i], grads[i], "sgd_step gradient");
    require_same_shape(*params[i], velocity[i], "sgd_step velocity");
    check_finite(grads[i], "sgd_step gradient #" + std::to_string(i) +
                               " at iteration " + std::to_string(iteration));
  }
  const double lr = cfg.learning_rate(iteration);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    Tensor& v = velocity[i];
    const Tensor& g = grads[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      v[k] = cfg.momentum * v[k] - lr * (g[k] + cfg.weight_decay * p[k]);
      p[k] += v[k];
    }
  }
}

AugmentedSample flip_sample(const Tensor& image, std::span<const LabeledBox> gts) {
  AugmentedSample out{image::flip_horizontal(image), {}};
  for (const LabeledBox& g : gts) {
    LabeledBox f = g;
    f.box.cx = 1.0 - g.box.cx;
    out.gts.push_back(std::move(f));
  }
  return out;
}

AugmentedSample crop_sample(const Tensor& image, std::span<const LabeledBox> gts,
                            int x0, int y0, int w, int h) {
  const int img_w = image::width(image), img_h = image::height(image);
  if (x0 == 0 && y0 == 0 && w == img_w && h == img_h) {
    return {image, {gts.begin(), gts.end()}};
  }
  AugmentedSample out{
      image::resize_bilinear(image::crop(image, x0, y0, w, h), img_w, img_h), {}};
  const double wx0 = x0, wy0 = y0, wx1 = x0 + w, wy1 = y0 + h;
  for (const LabeledBox& g : gts) {
    const double cx = g.box.cx * img_w, cy = g.box.cy * img_h;
    if (cx < wx0 || cx >= wx1 || cy < wy0 || cy >= wy1) continue;
    const double bx0 = std::max(g.box.xmin() * img_w, wx0);
    const double by0 = std::max(g.box.ymin() * img_h, wy0);
    const double bx1 = std::min(g.box.xmax() * img_w, wx1);
    const double by1 = std::min(g.box.ymax() * img_h, wy1);
    if (bx1 <= bx0 || by1 <= by0) continue;
    out.gts.push_back({box_from_corners((bx0 - wx0) / w, (by0 - wy0) / h,
                                        (bx1 - wx0) / w, (by1 - wy0) / h),
                       g.word});
  }
  return out;
}

AugmentedSample augment(const Tensor& image, std::span<const LabeledBox> gts,
                        const AugmentConfig& cfg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  AugmentedSample current{image, {gts.begin(), gts.end()}};

  if (cfg.crop && !gts.empty()) {
    static constexpr double kMinOverlap[] = {0.0, 0.1, 0.3, 0.5, 0.7, 0.9};
    const int mode = std::uniform_int_distribution<int>(0, 5)(rng);
    if (mode > 0) {
      const double min_iou = kMinOverlap[mode];
      const int img_w = image::width(image), img_h = image::height(image);
      for (int trial = 0; trial < 50; ++trial) {
        const double scale = 0.3 + 0.7 * unit(rng);
        const double ar = 0.5 + 1.5 * unit(rng);
        const double w = scale * std::sqrt(ar), h = scale / std::sqrt(ar);
        if (w > 1.0 || h > 1.0) continue;
        const double x = (1.0 - w) * unit(rng), y = (1.0 - h) * unit(rng);
        const int px = static_cast<int>(std::floor(x * img_w));
        const int py = static_cast<int>(std::floor(y * img_h));
        const int pw = std::clamp(static_cast<int>(std::lround(w * img_w)), 1, img_w - px);
        const int ph = std::clamp(static_cast<int>(std::lround(h * img_h)), 1, img_h - py);
        const Box patch = box_from_corners(
            static_cast<double>(px) / img_w, static_cast<double>(py) / img_h,
            static_cast<double>(px + pw) / img_w, static_cast<double>(py + ph) / img_h);
        bool overlap_ok = false, center_inside = false;
        for (const LabeledBox& g : gts) {
          overlap_ok = overlap_ok || iou(patch, g.box) >= min_iou;
          center_inside = center_inside ||
                          (g.box.cx >= patch.xmin() && g.box.cx < patch.xmax() &&
                           g.box.cy >= patch.ymin() && g.box.cy < patch.ymax());
        }
        if (overlap_ok && center_inside) {
          current = crop_sample(image, gts, px, py, pw, ph);
          break;
        }
      }
    }
  }
  if (cfg.flip && unit(rng) < 0.5) current = flip_sample(current.image, current.gts);
  return current;
}

std::vector<LabeledBox> labeled_boxes(const Sample& sample) {
  std::vector<LabeledBox> out;
  for (const WordAnnotation& a : sample.words) {
    out.push_back({normalize(a.rect, sample.width(), sample.height()), a.word});
  }
  return out;
}

TrainLog train(DetectorModel& model, std::span<const Sample> samples,
               const TrainConfig& cfg, const TrainProgress& progress) {
  cfg.validate();
  if (samples.empty()) throw InputError("train: dataset is empty");

  const int in_w = cfg.input_size.width, in_h = cfg.input_size.height;
  const std::vector<DefaultBox> priors = model.priors_for(in_w, in_h);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();

  std::vector<Tensor*> params = model.parameters();
  std::vector<Tensor> velocity;
  TrainLog log;
  log.reserve(static_cast<std::size_t>(cfg.max_iterations));

  for (int it = 0; it < cfg.max_iterations; ++it) {
    std::vector<Tensor> grads;
    for (const Tensor* p : params) grads.emplace_back(p->shape());
    TrainLogEntry entry{it, 0.0, 0.0, 0.0, cfg.learning_rate(it)};
    std::vector<std::string> batch_ids;
    const double inv_batch = 1.0 / cfg.batch_size;

    for (int b = 0; b < cfg.batch_size; ++b) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      const Sample& sample = samples[order[cursor++]];
      batch_ids.push_back(sample.id);
      const Tensor input = image::resize_bilinear(sample.image, in_w, in_h);
      const auto gts = labeled_boxes(sample);
      const AugmentedSample aug = augment(input, gts, cfg.augmentation, rng);

      std::vector<Box> boxes;
      for (const LabeledBox& g : aug.gts) boxes.push_back(g.box);
      const ForwardState state = model.forward_train(aug.image);
      const MultiboxResult loss =
          multibox_loss(state.output.flat_conf(), state.output.flat_loc(), boxes,
                        priors, cfg.loss);
      if (!std::isfinite(loss.report.total)) {
        std::string ids;
        for (const std::string& id : batch_ids) ids += (ids.empty() ? "" : ",") + id;
        throw NumericError("non-finite loss at iteration " + std::to_string(it) +
                           " (batch images: " + ids + ")");
      }
      entry.total += loss.report.total * inv_batch;
      if (loss.report.num_matched > 0) {
        entry.conf += loss.report.conf_part / loss.report.num_matched * inv_batch;
        entry.loc += loss.report.loc_part / loss.report.num_matched * inv_batch;
      }
      if (loss.report.num_matched == 0) continue;
      const std::vector<Tensor> g = model.backward(state, loss.grad_conf, loss.grad_loc);
      for (std::size_t k = 0; k < grads.size(); ++k) {
        for (std::size_t e = 0; e < grads[k].size(); ++e) grads[k][e] += g[k][e] * inv_batch;
      }
    }

    sgd_step(params, grads, velocity, cfg, it);
    log.push_back(entry);
    if (progress) progress(entry);
    if (cfg.checkpoint_every > 0 && (it + 1) % cfg.checkpoint_every == 0) {
      std::filesystem::create_directories(cfg.checkpoint_dir);
      save_model(model, cfg.checkpoint_dir /
                            ("checkpoint_" + std::to_string(it + 1) + ".tbm"));
    }
  }
  return log;
}

}  // namespace textboxes
