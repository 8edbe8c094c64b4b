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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Training artifacts go to --work-dir.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oracles.hpp"
#include "textboxes/config.hpp"
#include "textboxes/ctc.hpp"
#include "textboxes/detection_io.hpp"
#include "textboxes/errors.hpp"
#include "textboxes/evaluation.hpp"
#include "textboxes/image.hpp"
#include "textboxes/multibox.hpp"
#include "textboxes/nn.hpp"
#include "textboxes/pipeline.hpp"
#include "textboxes/priorbox.hpp"
#include "textboxes/rescore.hpp"
#include "textboxes/synthdata.hpp"
#include "textboxes/trainer.hpp"

namespace fs = std::filesystem;
using namespace textboxes;

namespace {

// Tolerances and sizes, one block per criterion.
constexpr int kGradSeeds = 20;
constexpr double kGradTol = 1e-4;
constexpr double kGradStep = 1e-6;

constexpr int kGeometryPairs = 100000;
constexpr double kGeometryTol = 1e-9;

constexpr int kNmsSets = 1000;
constexpr int kNmsMaxBoxes = 50;

constexpr int kCtcMaxAlphabet = 4;
constexpr int kCtcMaxFrames = 6;
constexpr int kCtcMaxWord = 3;
constexpr int kCtcMatricesPerCase = 3;
constexpr double kCtcTol = 1e-10;

constexpr std::size_t kPretrainImages = 1000;
constexpr int kPretrainIterations = 2000;
constexpr double kLossRatio = 0.5;
constexpr double kTrainSeconds = 30 * 60;
constexpr int kDeterminismIterations = 30;

constexpr std::size_t kFinetuneImages = 500;
constexpr std::size_t kEvalImages = 100;
constexpr std::size_t kEvalFirstIndex = 100000;
constexpr double kMinF = 0.60;
constexpr double kMultiScaleSlack = 0.02;

constexpr double kLargeAspect = 5.0;
constexpr double kAblationGap = 0.10;

constexpr int kMaxCandidates = 35;
constexpr double kCandidateRecall = 0.90;

constexpr double kDistractorIou = 0.1;

constexpr int kFuzzMutations = 1000;

// Runtime limits of the oracle criteria 1-4, in seconds.
constexpr double kOracleSeconds[] = {60, 30, 30, 60};

using Rows = std::vector<std::pair<std::string, EvalReport>>;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

// ---------------------------------------------------------------- 1

Outcome gradients() {
  double worst = 0.0;
  auto track = [&](const Tensor& a, const Tensor& n) {
    worst = std::max(worst, oracle::max_rel_error(a, n));
  };
  for (int seed = 0; seed < kGradSeeds; ++seed) {
    std::mt19937_64 rng(7000 + seed);
    std::uniform_int_distribution<int> ch(1, 3);
    const int c = ch(rng), o = ch(rng);
    const int kh = seed % 2 ? 1 : 3, kw = seed % 3 ? 5 : 3;
    nn::ConvLayer layer(oracle::random_tensor({o, c, kh, kw}, rng),
                        oracle::random_tensor({o}, rng), 1, {kh / 2, kw / 2});
    Tensor x = oracle::random_tensor({1, c, 5, 7}, rng);
    const Tensor probe = oracle::random_tensor(nn::conv2d_forward(x, layer).shape(), rng);
    auto conv_f = [&] { return dot(nn::conv2d_forward(x, layer), probe); };
    const nn::ConvBackward g = nn::conv2d_backward(x, layer, probe);
    track(g.input, oracle::numeric_grad(x, conv_f, kGradStep));
    track(g.params.kernel, oracle::numeric_grad(layer.kernel(), conv_f, kGradStep));
    track(g.params.bias, oracle::numeric_grad(layer.bias(), conv_f, kGradStep));

    Tensor y = oracle::random_tensor({1, 2, 5, 6}, rng);
    const nn::PoolResult pr = nn::maxpool2x2_forward(y);
    const Tensor pp = oracle::random_tensor(pr.output.shape(), rng);
    auto pool_f = [&] { return dot(nn::maxpool2x2_forward(y).output, pp); };
    track(nn::maxpool2x2_backward(pr.mask, pp), oracle::numeric_grad(y, pool_f, kGradStep));

    Tensor z = oracle::random_tensor({1, 2, 4, 4}, rng);
    for (double& v : z.data()) v += (v >= 0 ? 0.01 : -0.01);  // stay off the kink
    const Tensor rp = oracle::random_tensor(z.shape(), rng);
    auto relu_f = [&] { return dot(nn::relu_forward(z), rp); };
    track(nn::relu_backward(z, rp), oracle::numeric_grad(z, relu_f, kGradStep));

    ModelSpec spec;
    spec.backbone = {"conv 3 3x3", "relu", "pool", "conv 4 3x3", "relu", "tap",
                     "pool", "conv 4 3x3", "relu", "tap"};
    spec.aspect_ratios = {1.0, 5.0};
    spec.init_seed = 500 + static_cast<std::uint64_t>(seed);
    DetectorModel model{spec};
    const Tensor img = oracle::random_tensor({3, 12, 16}, rng, 0, 1);
    const auto priors = model.priors_for(16, 12);
    std::uniform_real_distribution<double> uc(0.2, 0.8), uw(0.2, 0.7), uh(0.1, 0.3);
    const std::vector<Box> gts{{uc(rng), uc(rng), uw(rng), uh(rng)},
                               {uc(rng), uc(rng), uw(rng), uh(rng)}};
    const LossConfig cfg;
    const MatchAssignment m = match(gts, priors, cfg);
    auto loss = [&] {
      const ForwardOutput out = model.forward(img);
      return multibox_loss(out.flat_conf(), out.flat_loc(), gts, priors, m, cfg).report.total;
    };
    const ForwardState state = model.forward_train(img);
    Tensor conf = state.output.flat_conf(), loc = state.output.flat_loc();
    const MultiboxResult r = multibox_loss(conf, loc, gts, priors, m, cfg);
    auto head_loss = [&] { return multibox_loss(conf, loc, gts, priors, m, cfg).report.total; };
    track(r.grad_conf, oracle::numeric_grad(conf, head_loss, kGradStep));
    track(r.grad_loc, oracle::numeric_grad(loc, head_loss, kGradStep));
    const std::vector<Tensor> grads = model.backward(state, r.grad_conf, r.grad_loc);
    auto params = model.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
      track(grads[i], oracle::numeric_grad(*params[i], loss, kGradStep));
    }
  }
  return {worst < kGradTol,
          fmt("conv/pool/relu/multibox/full-network finite differences over %d seeds: "
              "max rel err %.2e (tol %.0e)",
              kGradSeeds, worst, kGradTol)};
}

// ---------------------------------------------------------------- 2

Outcome geometry(const Config& cfg) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> c(0.0, 1.0), s(0.01, 1.0), d(-2.0, 2.0);
  double worst = 0.0;
  for (int i = 0; i < kGeometryPairs; ++i) {
    const Box prior{c(rng), c(rng), s(rng), s(rng)};
    const Box gt{c(rng), c(rng), s(rng), s(rng)};
    const Box back = decode(prior, encode(prior, gt));
    worst = std::max({worst, std::abs(back.cx - gt.cx), std::abs(back.cy - gt.cy),
                      std::abs(back.w - gt.w), std::abs(back.h - gt.h)});
    const OffsetVector o{d(rng), d(rng), d(rng), d(rng)};
    const OffsetVector again = encode(prior, decode(prior, o));
    worst = std::max({worst, std::abs(again.dx - o.dx), std::abs(again.dy - o.dy),
                      std::abs(again.dw - o.dw), std::abs(again.dh - o.dh)});
  }

  const DetectorModel model{cfg.model};
  const int per_cell = static_cast<int>(cfg.model.aspect_ratios.size() *
                                        (1 + cfg.model.vertical_offsets.size()));
  std::vector<ImageSize> sizes = cfg.scales;
  sizes.push_back(cfg.train.input_size);
  bool arithmetic_ok = per_cell == 12;
  std::size_t grids_checked = 0;
  for (const ImageSize& size : sizes) {
    const auto grids = model.grids_for(size.width, size.height);
    const ForwardOutput out = model.forward(Tensor({3, size.height, size.width}, 0.5));
    std::size_t expected = 0;
    for (std::size_t h = 0; h < grids.size(); ++h) {
      const std::size_t cells = static_cast<std::size_t>(grids[h].map_w) * grids[h].map_h;
      expected += cells * per_cell;
      arithmetic_ok = arithmetic_ok && grids[h].priors_per_cell() == 12 &&
                      model.head(static_cast<int>(h)).out_channels() == 72 &&
                      out.heads[h].grid.map_w == grids[h].map_w &&
                      out.heads[h].grid.map_h == grids[h].map_h &&
                      static_cast<std::size_t>(out.heads[h].conf.dim(0)) == cells * 12;
      ++grids_checked;
    }
    arithmetic_ok = arithmetic_ok &&
                    model.priors_for(size.width, size.height).size() == expected &&
                    static_cast<std::size_t>(out.flat_conf().dim(0)) == expected;
  }
  return {worst < kGeometryTol && arithmetic_ok,
          fmt("encode/decode max err %.2e over %d pairs (tol %.0e); 12 priors x 6 = 72 "
              "channels on %zu grids: %s",
              worst, kGeometryPairs, kGeometryTol, grids_checked,
              arithmetic_ok ? "ok" : "MISMATCH")};
}

// ---------------------------------------------------------------- 3

Outcome nms_oracle() {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> c(0.0, 1.0), s(0.02, 0.5), t(0.1, 0.9);
  std::uniform_int_distribution<int> n_boxes(0, kNmsMaxBoxes), score_step(0, 20);
  const std::vector<std::string> words{"alpha", "beta", "gamma"};
  int plain_bad = 0, word_bad = 0;
  for (int set = 0; set < kNmsSets; ++set) {
    std::vector<Detection> dets(static_cast<std::size_t>(n_boxes(rng)));
    for (Detection& d : dets) {
      d.box = {c(rng), c(rng), s(rng), s(rng)};
      // Coarse scores force ties.
      d.score = score_step(rng) / 20.0;
      d.word = words[rng() % words.size()];
    }
    const double thr = t(rng);
    std::vector<Detection> expect;
    for (std::size_t i :
         oracle::nms_indices(dets, [&](const Detection&, const Detection&) { return thr; })) {
      expect.push_back(dets[i]);
    }
    if (nms(dets, thr) != expect) ++plain_bad;

    RescoreConfig rc;
    rc.nms_same_word_threshold = std::min(thr, 0.3);
    rc.nms_diff_word_threshold = std::max(thr, 0.3);
    std::vector<Detection> expect_w;
    for (std::size_t i : oracle::nms_indices(dets, [&](const Detection& a, const Detection& b) {
           return *a.word == *b.word ? rc.nms_same_word_threshold : rc.nms_diff_word_threshold;
         })) {
      expect_w.push_back(dets[i]);
    }
    if (word_aware_nms(dets, rc) != expect_w) ++word_bad;
  }
  return {plain_bad == 0 && word_bad == 0,
          fmt("%d random sets of <= %d boxes: %d plain and %d word-aware keep-set mismatches",
              kNmsSets, kNmsMaxBoxes, plain_bad, word_bad)};
}

// ---------------------------------------------------------------- 4

void all_words(const std::string& alphabet, int max_len, std::string& cur,
               std::vector<std::string>& out) {
  if (!cur.empty()) out.push_back(cur);
  if (static_cast<int>(cur.size()) == max_len) return;
  for (char ch : alphabet) {
    cur.push_back(ch);
    all_words(alphabet, max_len, cur, out);
    cur.pop_back();
  }
}

Outcome ctc_oracle() {
  const std::string letters = "abcd";
  std::mt19937_64 rng(17);
  double worst = 0.0;
  long checked = 0;
  bool inf_ok = true;
  for (int k = 1; k <= kCtcMaxAlphabet; ++k) {
    const std::string alphabet = letters.substr(0, static_cast<std::size_t>(k));
    std::vector<std::string> words;
    std::string cur;
    all_words(alphabet, kCtcMaxWord, cur, words);
    for (int frames = 1; frames <= kCtcMaxFrames; ++frames) {
      for (int rep = 0; rep < kCtcMatricesPerCase; ++rep) {
        const LogProbMatrix m = oracle::random_matrix(alphabet, frames, rng);
        const auto brute = oracle::ctc_enumerate(m);
        for (const std::string& w : words) {
          const auto it = brute.find(w);
          const double expect = it == brute.end() ? 0.0 : it->second;
          const double lp = ctc_word_logprob(m, w);
          if (expect == 0.0) {
            inf_ok = inf_ok && std::isinf(lp) && lp < 0;
          } else {
            worst = std::max({worst, std::abs(std::exp(lp) - expect),
                              std::abs(lp - std::log(expect))});
          }
          ++checked;
        }
      }
    }
  }
  return {worst < kCtcTol && inf_ok,
          fmt("%ld (matrix, word) pairs, |alphabet| <= %d, T <= %d, |word| <= %d: max err %.2e "
              "(tol %.0e); impossible words -> -inf: %s",
              checked, kCtcMaxAlphabet, kCtcMaxFrames, kCtcMaxWord, worst, kCtcTol,
              inf_ok ? "yes" : "NO")};
}

// ---------------------------------------------------------------- 5

double median_of(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
  if (v.size() % 2) return v[mid];
  const double hi = v[mid];
  return (*std::max_element(v.begin(), v.begin() + static_cast<long>(mid)) + hi) / 2;
}

bool same_parameters(const DetectorModel& a, const DetectorModel& b) {
  const auto pa = a.parameters(), pb = b.parameters();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (!(*pa[i] == *pb[i])) return false;
  }
  return true;
}

struct Trained {
  DetectorModel model;
  TrainLog log;
  double seconds = 0.0;
};

Trained run_training(const Config& cfg, std::span<const Sample> data,
                     const DetectorModel* init, const std::string& tag) {
  DetectorModel model = init ? *init : DetectorModel{cfg.model};
  const auto t0 = std::chrono::steady_clock::now();
  const int every = std::max(1, cfg.train.max_iterations / 10);
  TrainLog log = train(model, data, cfg.train, [&](const TrainLogEntry& e) {
    if ((e.iteration + 1) % every == 0) {
      std::printf("  [%s] iteration %d/%d loss %.4f (%.0fs)\n", tag.c_str(), e.iteration + 1,
                  cfg.train.max_iterations, e.total, seconds_since(t0));
      std::fflush(stdout);
    }
  });
  return {std::move(model), std::move(log), seconds_since(t0)};
}

Outcome training_progress(const Trained& run, const Config& cfg,
                          std::span<const Sample> data) {
  std::vector<double> losses;
  for (const TrainLogEntry& e : run.log) losses.push_back(e.total);
  const std::size_t tenth = std::max<std::size_t>(1, losses.size() / 10);
  const double first = median_of({losses.begin(), losses.begin() + static_cast<long>(tenth)});
  const double last = median_of({losses.end() - static_cast<long>(tenth), losses.end()});

  Config short_cfg = cfg;
  short_cfg.train.max_iterations = kDeterminismIterations;
  short_cfg.train.decay_iteration = std::min(cfg.train.decay_iteration, kDeterminismIterations);
  DetectorModel a{cfg.model}, b{cfg.model};
  const TrainLog la = train(a, data, short_cfg.train);
  const TrainLog lb = train(b, data, short_cfg.train);
  const bool prefix_ok =
      cfg.train.decay_iteration < kDeterminismIterations ||
      std::equal(la.begin(), la.end(), run.log.begin(), run.log.end() - (run.log.size() - la.size()));
  const bool deterministic = la == lb && same_parameters(a, b) && prefix_ok;

  const bool pass = last < kLossRatio * first && deterministic && run.seconds <= kTrainSeconds;
  return {pass, fmt("%zu images, %zu iterations in %.0fs (limit %.0fs): median loss first 10%% "
                    "%.4f, last 10%% %.4f, ratio %.3f (need < %.2f); repeat runs identical: %s",
                    data.size(), run.log.size(), run.seconds, kTrainSeconds, first, last,
                    last / first, kLossRatio, deterministic ? "yes" : "NO")};
}

// ---------------------------------------------------------------- 6-9

std::vector<std::vector<Detection>> detect_all(const DetectorModel& model,
                                               std::span<const Sample> set,
                                               const Config& cfg, const ScaleSet& scales) {
  std::vector<std::vector<Detection>> out;
  for (const Sample& s : set) {
    if (scales.size() == 1 && scales[0].width == s.width() && scales[0].height == s.height()) {
      out.push_back(detect_single_scale(model, s.image, cfg.detect.score, cfg.detect.nms));
    } else {
      out.push_back(detect_multi_scale(model, s.image, scales, cfg.detect));
    }
  }
  return out;
}

EvalReport localization(std::span<const Sample> set,
                        const std::vector<std::vector<Detection>>& dets, const Config& cfg) {
  return eval_localization(eval_images(set, dets), cfg.eval);
}

Outcome detection_quality(const DetectorModel& model, std::span<const Sample> set,
                          const Config& cfg, Rows& table) {
  const ImageSize native{set.front().width(), set.front().height()};
  const EvalReport single = localization(set, detect_all(model, set, cfg, {native}), cfg);
  double best_single_recall = single.recall;
  std::string best_name = fmt("%dx%d", native.width, native.height);
  table.emplace_back("single " + best_name, single);
  for (const ImageSize& s : cfg.scales) {
    if (s == native) continue;
    const EvalReport r = localization(set, detect_all(model, set, cfg, {s}), cfg);
    const std::string name = fmt("%dx%d", s.width, s.height);
    table.emplace_back("single " + name, r);
    if (r.recall > best_single_recall) {
      best_single_recall = r.recall;
      best_name = name;
    }
  }
  const EvalReport multi = localization(set, detect_all(model, set, cfg, cfg.scales), cfg);
  table.emplace_back("multi-scale", multi);
  const bool pass =
      single.f_measure >= kMinF && multi.recall >= best_single_recall - kMultiScaleSlack;
  return {pass, fmt("%zu held-out images: single-scale P %.3f R %.3f F %.3f (need F >= %.2f); "
                    "multi-scale R %.3f vs best single-scale R %.3f (%s), slack %.2f",
                    set.size(), single.precision, single.recall, single.f_measure, kMinF,
                    multi.recall, best_single_recall, best_name.c_str(), kMultiScaleSlack)};
}

struct AspectRecall {
  double large = 0.0;  // gts with width/height >= kLargeAspect
  int large_count = 0;
  double all = 0.0;
};

AspectRecall large_aspect_recall(const DetectorModel& model,
                                           std::span<const Sample> set, const Config& cfg) {
  const ImageSize native{set.front().width(), set.front().height()};
  const EvalReport r = localization(set, detect_all(model, set, cfg, {native}), cfg);
  int hits = 0, total = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    for (std::size_t g = 0; g < set[i].words.size(); ++g) {
      const PixelRect& rect = set[i].words[g].rect;
      if (static_cast<double>(rect.w) / rect.h < kLargeAspect) continue;
      ++total;
      hits += r.images[i].gt_matched[g] ? 1 : 0;
    }
  }
  return {total ? static_cast<double>(hits) / total : 0.0, total, r.recall};
}

Outcome ablation(const DetectorModel& full, const DetectorModel& reduced,
                 std::span<const Sample> set, const Config& cfg) {
  const AspectRecall f = large_aspect_recall(full, set, cfg);
  const AspectRecall r = large_aspect_recall(reduced, set, cfg);
  return {f.large_count > 0 && f.large - r.large >= kAblationGap,
          fmt("recall on %d gts with aspect >= %.0f: 1x5 heads + 6 ratios %.3f, 3x3 heads + "
              "{1,2,3} %.3f, gap %.3f (need >= %.2f); recall on all gts %.3f vs %.3f",
              f.large_count, kLargeAspect, f.large, r.large, f.large - r.large, kAblationGap,
              f.all, r.all)};
}

Outcome candidates(const DetectorModel& model, std::span<const Sample> set, const Config& cfg) {
  std::vector<std::vector<Detection>> cands;
  std::size_t most = 0;
  double total = 0;
  for (const Sample& s : set) {
    cands.push_back(generate_candidates(model, s.image, cfg.rescore, cfg.scales));
    most = std::max(most, cands.back().size());
    total += static_cast<double>(cands.back().size());
  }
  const EvalReport r = localization(set, cands, cfg);
  return {static_cast<int>(most) <= kMaxCandidates && r.recall >= kCandidateRecall,
          fmt("%zu images: at most %zu candidates/image (mean %.1f, limit %d), candidate "
              "recall %.3f (need >= %.2f)",
              set.size(), most, total / static_cast<double>(set.size()), kMaxCandidates,
              r.recall, kCandidateRecall)};
}

Outcome rescoring(const DetectorModel& model, std::span<const Sample> set, const Config& cfg,
                  const std::string& alphabet, Rows& table) {
  std::set<std::string> vocab;
  for (const Sample& s : set)
    for (const WordAnnotation& w : s.words) vocab.insert(w.word);
  const Lexicon lexicon({vocab.begin(), vocab.end()}, "eval-vocabulary");
  const int frames = 2 * static_cast<int>(lexicon.max_word_length());

  std::vector<std::vector<Detection>> raw, spotted;
  int distractor_fp = 0, distractors = 0;
  for (const Sample& s : set) {
    raw.push_back(detect_multi_scale(model, s.image, cfg.scales, cfg.detect));
    const OracleRecognizer rec(alphabet, frames, labeled_boxes(s), cfg.oracle);
    spotted.push_back(spot(model, s.image, lexicon, rec, cfg.rescore, cfg.scales, s.id));
  }
  const auto images_raw = eval_images(set, raw);
  const auto images_spot = eval_images(set, spotted);
  const EvalReport raw_r = eval_localization(images_raw, cfg.eval);
  const EvalReport spot_r = eval_spotting(images_spot, cfg.eval);
  const EvalReport spot_loc = eval_localization(images_spot, cfg.eval);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto boxes = set[i].distractor_boxes();
    distractors += static_cast<int>(boxes.size());
    for (std::size_t d = 0; d < spotted[i].size(); ++d) {
      if (spot_r.images[i].det_to_gt[d] != -1) continue;
      for (const Box& b : boxes) {
        if (iou(spotted[i][d].box, b) >= kDistractorIou) {
          ++distractor_fp;
          break;
        }
      }
    }
  }
  table.emplace_back("raw detection (loc)", raw_r);
  table.emplace_back("re-scored (loc)", spot_loc);
  table.emplace_back("re-scored (spot)", spot_r);
  return {spot_r.f_measure >= raw_r.f_measure && distractor_fp == 0,
          fmt("%zu images, lexicon %zu words: spotting F %.3f vs raw detection F %.3f; "
              "%d false positives on %d distractors (need 0)",
              set.size(), lexicon.size(), spot_r.f_measure, raw_r.f_measure, distractor_fp,
              distractors)};
}

// ---------------------------------------------------------------- 10

int run(const std::string& cmd) {
  const std::string quiet = cmd + " > /dev/null 2>&1";
  return std::system(quiet.c_str());
}

std::string mutate(std::string s, std::mt19937_64& rng) {
  const int edits = 1 + static_cast<int>(rng() % 4);
  for (int e = 0; e < edits; ++e) {
    if (s.empty()) {
      s.push_back(static_cast<char>(rng()));
      continue;
    }
    const std::size_t pos = rng() % s.size();
    switch (rng() % 5) {
      case 0: s[pos] = static_cast<char>(rng()); break;
      case 1: s.erase(pos, 1 + rng() % 8); break;
      case 2: s.insert(pos, 1, "{}[]\",:0-9.eE \n"[rng() % 15]); break;
      case 3: s.resize(pos); break;
      default: s[pos] = static_cast<char>(s[pos] ^ (1 << (rng() % 8))); break;
    }
  }
  return s;
}

struct FuzzTarget {
  std::string name;
  std::string seed_bytes;
  std::function<void(const std::string&)> parse;
};

Outcome formats(const fs::path& work, const std::string& cli, const fs::path& config,
                const fs::path& trained_model) {
  // Same-seed CLI runs, twice, byte for byte.
  const fs::path run_root = work / "determinism";
  fs::remove_all(run_root);
  std::vector<std::string> failures;
  for (const char* tag : {"a", "b"}) {
    const fs::path d = run_root / tag;
    fs::create_directories(d);
    const std::string q = "\"";
    auto p = [&](const fs::path& x) { return q + x.string() + q; };
    const std::vector<std::string> steps{
        cli + " gen-data --preset finetune --count 8 --out " + p(d / "data"),
        cli + " train --config " + p(config) + " --data " + p(d / "data") + " --out " +
            p(d / "short.tbm") + " --log " + p(d / "log.csv") + " --iterations 3",
        cli + " detect --config " + p(config) + " --model " + p(trained_model) +
            " --images " + p(d / "data") + " --multi-scale --out " + p(d / "dets.jsonl"),
        cli + " detect --config " + p(config) + " --model " + p(trained_model) +
            " --images " + p(d / "data") + " --multi-scale --jobs 3 --out " +
            p(d / "dets_jobs.jsonl"),
        cli + " eval --config " + p(config) + " --gt " + p(d / "data") + " --dets " +
            p(d / "dets.jsonl") + " --out " + p(d / "report.json"),
    };
    for (const std::string& s : steps) {
      if (run(s) != 0) failures.push_back("command failed: " + s);
    }
    const Dataset ds = read_dataset(d / "data", false);
    std::set<std::string> vocab;
    for (const Sample& s : ds.samples)
      for (const WordAnnotation& w : s.words) vocab.insert(w.word);
    write_lexicon(d / "lexicon.txt", Lexicon({vocab.begin(), vocab.end()}));
    const std::string spot_cmd = cli + " spot --config " + p(config) + " --model " +
                                 p(trained_model) + " --images " + p(d / "data") +
                                 " --lexicon " + p(d / "lexicon.txt") +
                                 " --recognizer oracle --gt " + p(d / "data") + " --out " +
                                 p(d / "spot.jsonl") + " --candidates-out " +
                                 p(d / "cands.jsonl");
    if (run(spot_cmd) != 0) failures.push_back("command failed: " + spot_cmd);
  }
  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(run_root / "a")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), run_root / "a");
    ++compared;
    if (slurp(entry.path()) != slurp(run_root / "b" / rel)) {
      failures.push_back("differs between runs: " + rel.string());
    }
  }
  if (slurp(run_root / "a" / "dets.jsonl") != slurp(run_root / "a" / "dets_jobs.jsonl")) {
    failures.push_back("--jobs 3 changes detections");
  }

  // Round trips through the parsers.
  const fs::path a = run_root / "a";
  const Dataset ds = read_dataset(a / "data");
  const fs::path copy = run_root / "roundtrip";
  write_dataset(copy, ds);
  const Dataset ds2 = read_dataset(copy);
  if (!(ds2.spec == ds.spec) || ds2.samples != ds.samples) failures.push_back("dataset round trip");
  for (const char* f : {"annotations.jsonl", "spec.json"}) {
    if (slurp(a / "data" / f) != slurp(copy / f)) failures.push_back(std::string("rewrite ") + f);
  }
  for (const char* f : {"dets.jsonl", "spot.jsonl", "cands.jsonl"}) {
    write_detections(copy / f, read_detections(a / f));
    if (slurp(a / f) != slurp(copy / f)) failures.push_back(std::string("rewrite ") + f);
  }
  {
    std::ostringstream m;
    save_model(load_model(a / "short.tbm"), m);
    if (m.str() != slurp(a / "short.tbm")) failures.push_back("model round trip");
    std::istringstream logs(slurp(a / "log.csv"));
    std::ostringstream relog;
    write_train_log_csv(relog, read_train_log_csv(logs));
    if (relog.str() != slurp(a / "log.csv")) failures.push_back("train log round trip");
    const Config c = load_config(config);
    if (config_to_yaml(parse_config(config_to_yaml(c))) != config_to_yaml(c)) {
      failures.push_back("config round trip");
    }
    write_lexicon(copy / "lexicon.txt", read_lexicon(a / "lexicon.txt"));
    if (slurp(copy / "lexicon.txt") != slurp(a / "lexicon.txt")) failures.push_back("lexicon");
  }
  std::mt19937_64 mrng(23);
  const RecognitionRecord record{"000001#0", oracle::random_matrix("abc", 6, mrng)};
  const std::string record_line = recognition_record_to_json(record);
  if (!(recognition_record_from_json(record_line, "record") == record)) {
    failures.push_back("recognition record round trip");
  }

  // Mutation fuzzing: parsers must accept or throw a library error.
  const fs::path scratch = run_root / "fuzz.bin";
  auto first_line = [](const std::string& s) { return s.substr(0, s.find('\n')); };
  const std::vector<FuzzTarget> targets{
      {"annotation", first_line(slurp(a / "data" / "annotations.jsonl")),
       [](const std::string& s) { annotation_from_json(s, "fuzz"); }},
      {"detection", first_line(slurp(a / "dets.jsonl")),
       [](const std::string& s) { detection_from_json(s, "fuzz"); }},
      {"scene spec", slurp(a / "data" / "spec.json"),
       [](const std::string& s) { scene_spec_from_json(s, "fuzz"); }},
      {"config", slurp(config), [](const std::string& s) { parse_config(s, "fuzz"); }},
      {"model", slurp(a / "short.tbm"),
       [](const std::string& s) {
         std::istringstream is(s);
         load_model(is, "fuzz");
       }},
      {"train log", slurp(a / "log.csv"),
       [](const std::string& s) {
         std::istringstream is(s);
         read_train_log_csv(is, "fuzz");
       }},
      {"recognition record", record_line,
       [](const std::string& s) { recognition_record_from_json(s, "fuzz"); }},
      {"ppm", slurp(a / "data" / "images" / (ds.samples.front().id + ".ppm")),
       [&](const std::string& s) {
         spit(scratch, s);
         image::read_ppm(scratch);
       }},
      {"lexicon", slurp(a / "lexicon.txt"),
       [&](const std::string& s) {
         spit(scratch, s);
         read_lexicon(scratch);
       }},
      {"detections file", slurp(a / "spot.jsonl"),
       [&](const std::string& s) {
         spit(scratch, s);
         read_detections(scratch);
       }},
  };
  std::mt19937_64 rng(29);
  int rejected = 0, accepted = 0;
  for (const FuzzTarget& t : targets) {
    for (int i = 0; i < kFuzzMutations; ++i) {
      try {
        t.parse(mutate(t.seed_bytes, rng));
        ++accepted;
      } catch (const Error&) {
        ++rejected;
      } catch (const std::exception& e) {
        failures.push_back(t.name + ": foreign exception " + e.what());
      }
    }
  }

  std::string detail =
      fmt("2 same-seed CLI runs (gen-data/train/detect/spot/eval): %zu files compared; "
          "round trips checked; %d mutations x %zu formats: %d rejected, %d accepted, "
          "%zu problems",
          compared, kFuzzMutations, targets.size(), rejected, accepted, failures.size());
  for (std::size_t i = 0; i < std::min<std::size_t>(failures.size(), 5); ++i) {
    detail += "\n    " + failures[i];
  }
  return {failures.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  std::string config_path = TEXTBOXES_CONFIG_DIR "/default.yaml";
  std::string finetune_path = TEXTBOXES_CONFIG_DIR "/finetune.yaml";
  std::string ablation_path = TEXTBOXES_CONFIG_DIR "/ablation.yaml";
  std::string work = "acceptance_work";
  std::string cli = TEXTBOXES_CLI;
  std::vector<int> only;
  bool reuse = false;
  app.add_option("--config", config_path, "Pretraining config");
  app.add_option("--finetune-config", finetune_path, "Finetuning config");
  app.add_option("--ablation-config", ablation_path, "Pretraining config of the ablation");
  app.add_option("--work-dir", work, "Directory for models and logs");
  app.add_option("--cli", cli, "Path of the textboxes executable");
  app.add_option("--only", only, "Run only these criteria");
  app.add_flag("--reuse", reuse, "Load trained models from the work dir when present");
  CLI11_PARSE(app, argc, argv);

  const fs::path work_dir = fs::absolute(work);
  fs::create_directories(work_dir);
  const Config cfg = load_config(config_path);
  // Both are override layers on top of the main config.
  const Config finetune_cfg = load_config(finetune_path, cfg);
  const Config ablation_cfg = load_config(ablation_path, cfg);

  auto wanted = [&](int c) {
    return only.empty() || std::find(only.begin(), only.end(), c) != only.end();
  };
  std::map<int, Outcome> results;
  auto record = [&](int c, Outcome o) {
    std::printf("CRITERION %d %s: %s\n", c, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    results[c] = std::move(o);
  };

  auto timed = [&](int c, auto run) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o = run();
    const double s = seconds_since(t0);
    const double limit = kOracleSeconds[c - 1];
    o.detail += fmt("; %.1fs (limit %.0fs)", s, limit);
    o.pass = o.pass && s <= limit;
    record(c, std::move(o));
  };
  if (wanted(1)) timed(1, [&] { return gradients(); });
  if (wanted(2)) timed(2, [&] { return geometry(cfg); });
  if (wanted(3)) timed(3, [&] { return nms_oracle(); });
  if (wanted(4)) timed(4, [&] { return ctc_oracle(); });

  const bool need_models = wanted(5) || wanted(6) || wanted(7) || wanted(8) || wanted(9) ||
                           wanted(10);
  if (need_models) {
    const SceneSpec pre_spec = SceneSpec::pretrain();
    const SceneSpec fine_spec = SceneSpec::finetune();
    const std::vector<Sample> pretrain_set = generate_dataset(pre_spec, kPretrainImages);
    const std::vector<Sample> finetune_set = generate_dataset(fine_spec, kFinetuneImages);
    const std::vector<Sample> eval_set =
        generate_dataset(fine_spec, kEvalImages, kEvalFirstIndex);

    auto obtain = [&](const Config& pre_cfg, const std::string& name, bool score_training) {
      const fs::path pre_path = work_dir / (name + "_pretrained.tbm");
      const fs::path fine_path = work_dir / (name + "_finetuned.tbm");
      if (reuse && fs::exists(fine_path) && !score_training) return load_model(fine_path);
      Config p = pre_cfg;
      p.train.max_iterations = kPretrainIterations;
      p.train.decay_iteration = std::min(p.train.decay_iteration, kPretrainIterations);
      std::printf("  training %s: pretrain %zu images, %d iterations\n", name.c_str(),
                  pretrain_set.size(), kPretrainIterations);
      Trained pre = run_training(p, pretrain_set, nullptr, name + " pretrain");
      save_model(pre.model, pre_path);
      std::ofstream log(work_dir / (name + "_pretrain_log.csv"));
      write_train_log_csv(log, pre.log);
      if (score_training) record(5, training_progress(pre, p, pretrain_set));
      Trained fine = run_training(finetune_cfg, finetune_set, &pre.model, name + " finetune");
      save_model(fine.model, fine_path);
      std::ofstream flog(work_dir / (name + "_finetune_log.csv"));
      write_train_log_csv(flog, fine.log);
      return std::move(fine.model);
    };

    const DetectorModel model = obtain(cfg, "full", wanted(5));
    Rows table;
    if (wanted(6)) record(6, detection_quality(model, eval_set, cfg, table));
    if (wanted(7)) {
      const DetectorModel reduced = obtain(ablation_cfg, "ablation", false);
      record(7, ablation(model, reduced, eval_set, cfg));
    }
    if (wanted(8)) record(8, candidates(model, eval_set, cfg));
    if (wanted(9)) record(9, rescoring(model, eval_set, cfg, fine_spec.alphabet, table));
    if (wanted(10)) {
      record(10, formats(work_dir, cli, fs::absolute(config_path),
                         work_dir / "full_finetuned.tbm"));
    }
    if (!table.empty()) {
      const std::string text = reports_to_table(table);
      std::printf("\n%s\n", text.c_str());
      spit(work_dir / "tables.md", text);
    }
  }

  int failed = 0;
  for (const auto& [c, o] : results) failed += o.pass ? 0 : 1;
  std::printf("\n%zu criteria run, %d failed\n", results.size(), failed);
  return failed == 0 ? 0 : 1;
}
