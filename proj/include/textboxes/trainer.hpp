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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "textboxes/box.hpp"
#include "textboxes/detector.hpp"
#include "textboxes/model.hpp"
#include "textboxes/multibox.hpp"
#include "textboxes/synthdata.hpp"

namespace textboxes {

struct AugmentConfig {
  bool flip = true;
  bool crop = true;
};

struct TrainConfig {
  double lr_initial = 1e-3;
  double lr_after_decay = 1e-4;
  int decay_iteration = 1500;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  int batch_size = 8;
  int max_iterations = 2000;
  std::uint64_t seed = 0;
  AugmentConfig augmentation;
  ImageSize input_size{128, 128};
  LossConfig loss;
  // Write a checkpoint every K iterations into checkpoint_dir (0 = never).
  int checkpoint_every = 0;
  std::filesystem::path checkpoint_dir;

  // lr_initial before decay_iteration, lr_after_decay from then on.
  double learning_rate(int iteration) const;
  void validate() const;
};

struct TrainLogEntry {
  int iteration = 0;
  double total = 0.0;  // batch mean of per-image losses
  double conf = 0.0;   // batch mean of conf_part / N
  double loc = 0.0;    // batch mean of loc_part / N
  double lr = 0.0;
  friend bool operator==(const TrainLogEntry&, const TrainLogEntry&) = default;
};

using TrainLog = std::vector<TrainLogEntry>;

void write_train_log_csv(std::ostream& os, const TrainLog& log);
TrainLog read_train_log_csv(std::istream& is, const std::string& source = "<stream>");

// v <- momentum * v - lr * (grad + weight_decay * param); param <- param + v.
// Throws NumericError if any gradient is not finite.
void sgd_step(std::span<Tensor* const> params, std::span<const Tensor> grads,
              std::vector<Tensor>& velocity, const TrainConfig& cfg,
              int iteration);

struct AugmentedSample {
  Tensor image;
  std::vector<LabeledBox> gts;
};

// Mirror image and boxes left to right.
AugmentedSample flip_sample(const Tensor& image, std::span<const LabeledBox> gts);

// Cut the pixel window out of the image, keep boxes whose centers fall
// inside (clipped to the window), and resize back to the input size.
AugmentedSample crop_sample(const Tensor& image, std::span<const LabeledBox> gts,
                            int x0, int y0, int w, int h);

// Random IoU-constrained crop followed by a random horizontal flip. The crop
// draws a minimum overlap from {none, 0.1, 0.3, 0.5, 0.7, 0.9}; after 50
// failed trials the input passes through unchanged.
AugmentedSample augment(const Tensor& image, std::span<const LabeledBox> gts,
                        const AugmentConfig& cfg, std::mt19937_64& rng);

std::vector<LabeledBox> labeled_boxes(const Sample& sample);

using TrainProgress = std::function<void(const TrainLogEntry&)>;

// Minibatch SGD on `samples`. Deterministic for a fixed (seed, config,
// dataset). Throws NumericError on a non-finite loss, naming the batch.
TrainLog train(DetectorModel& model, std::span<const Sample> samples,
               const TrainConfig& cfg, const TrainProgress& progress = {});

}  // namespace textboxes
