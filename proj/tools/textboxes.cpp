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

// Command-line front end: gen-data, train, detect, spot, eval, bench.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "textboxes/config.hpp"
#include "textboxes/ctc.hpp"
#include "textboxes/detection_io.hpp"
#include "textboxes/detector.hpp"
#include "textboxes/errors.hpp"
#include "textboxes/evaluation.hpp"
#include "textboxes/image.hpp"
#include "textboxes/model.hpp"
#include "textboxes/pipeline.hpp"
#include "textboxes/rescore.hpp"
#include "textboxes/synthdata.hpp"
#include "textboxes/trainer.hpp"

namespace fs = std::filesystem;
using namespace textboxes;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct Options {
  std::vector<std::string> config;

  std::string spec_file;
  std::string preset = "finetune";
  std::string out;
  std::size_t count = 100;
  std::optional<std::uint64_t> seed;
  std::size_t first_index = 0;

  std::string data;
  std::string init;
  std::string log;
  std::optional<int> iterations;

  std::string model;
  std::string images;
  bool multi_scale = false;
  int jobs = 1;
  bool float32 = false;

  std::string lexicon;
  std::string recognizer = "oracle";
  std::string gt;
  std::string candidates_out;

  std::string dets;
  std::string task = "loc";
  std::string overlays;

  int repeat = 1;
};

// Later files override keys of earlier ones.
Config load_config_opt(const Options& o) {
  Config c;
  for (const std::string& path : o.config) c = load_config(path, c);
  return c;
}

InferenceOptions inference(const Options& o) { return {o.float32}; }

std::vector<Tensor> load_images(const std::vector<ImageEntry>& entries) {
  std::vector<Tensor> out;
  out.reserve(entries.size());
  for (const ImageEntry& e : entries) out.push_back(image::read_ppm(e.path));
  return out;
}

int cmd_gen_data(const Options& o) {
  SceneSpec spec;
  if (!o.spec_file.empty()) {
    std::ifstream in(o.spec_file);
    if (!in) throw ParseError(o.spec_file + ": cannot open");
    std::ostringstream ss;
    ss << in.rdbuf();
    spec = scene_spec_from_json(ss.str(), o.spec_file);
  } else if (o.preset == "pretrain") {
    spec = SceneSpec::pretrain();
  } else if (o.preset == "finetune") {
    spec = SceneSpec::finetune();
  } else {
    throw InputError("unknown preset '" + o.preset + "'");
  }
  if (o.seed) spec.seed = *o.seed;
  Dataset ds{spec, generate_dataset(spec, o.count, o.first_index)};
  write_dataset(o.out, ds);
  std::cerr << "wrote " << ds.samples.size() << " samples to " << o.out << "\n";
  return kOk;
}

int cmd_train(const Options& o) {
  Config cfg = load_config_opt(o);
  if (o.iterations) {
    cfg.train.max_iterations = *o.iterations;
    cfg.train.decay_iteration = std::min(cfg.train.decay_iteration, *o.iterations);
  }
  if (o.seed) cfg.train.seed = *o.seed;
  const Dataset ds = read_dataset(o.data);
  DetectorModel model = o.init.empty() ? DetectorModel(cfg.model) : load_model(fs::path(o.init));
  const auto start = std::chrono::steady_clock::now();
  const TrainLog log = train(model, ds.samples, cfg.train, [&](const TrainLogEntry& e) {
    if (e.iteration % 50 == 0 || e.iteration == cfg.train.max_iterations) {
      const double secs = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - start).count();
      std::fprintf(stderr, "iter %5d  loss %.4f  conf %.4f  loc %.4f  lr %g  %.0fs\n",
                   e.iteration, e.total, e.conf, e.loc, e.lr, secs);
    }
  });
  save_model(model, fs::path(o.out));
  if (!o.log.empty()) {
    std::ofstream out(o.log, std::ios::binary);
    if (!out) throw ParseError(o.log + ": cannot open for writing");
    write_train_log_csv(out, log);
  }
  return kOk;
}

int cmd_detect(const Options& o) {
  const Config cfg = load_config_opt(o);
  const DetectorModel model = load_model(fs::path(o.model));
  const std::vector<ImageEntry> entries = list_images(o.images);
  const std::vector<Tensor> images = load_images(entries);
  std::vector<std::vector<Detection>> results(entries.size());
  parallel_for(entries.size(), o.jobs, [&](std::size_t i) {
    results[i] = o.multi_scale
                     ? detect_multi_scale(model, images[i], cfg.scales, cfg.detect, inference(o))
                     : detect_single_scale(model, images[i], cfg.detect.score, cfg.detect.nms,
                                           inference(o));
  });
  std::vector<DetectionRecord> records;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    for (const Detection& d : results[i]) {
      records.push_back({entries[i].id, image::width(images[i]), image::height(images[i]), d});
    }
  }
  write_detections(o.out, records);
  return kOk;
}

int cmd_spot(const Options& o) {
  const Config cfg = load_config_opt(o);
  const DetectorModel model = load_model(fs::path(o.model));
  const Lexicon lexicon = read_lexicon(o.lexicon);
  const std::vector<ImageEntry> entries = list_images(o.images);
  const std::vector<Tensor> images = load_images(entries);

  std::map<std::string, std::vector<LabeledBox>> gts;
  std::optional<FileRecognizer> file_recognizer;
  std::string alphabet = SceneSpec{}.alphabet;
  if (o.recognizer == "oracle") {
    const Dataset ds = read_dataset(o.gt.empty() ? o.images : o.gt, false);
    alphabet = ds.spec.alphabet;
    for (const Sample& s : ds.samples) gts[s.id] = labeled_boxes(s);
  } else if (o.recognizer.rfind("file:", 0) == 0) {
    file_recognizer.emplace(read_recognition_records(o.recognizer.substr(5)));
  } else {
    throw InputError("--recognizer must be 'oracle' or 'file:<path>'");
  }
  const int frames = 2 * static_cast<int>(lexicon.max_word_length());

  std::vector<std::vector<Detection>> candidates(entries.size());
  std::vector<std::vector<Detection>> results(entries.size());
  parallel_for(entries.size(), o.jobs, [&](std::size_t i) {
    candidates[i] = generate_candidates(model, images[i], cfg.rescore, cfg.scales, inference(o));
    if (file_recognizer) {
      results[i] = rescore_candidates(images[i], candidates[i], lexicon, *file_recognizer,
                                      cfg.rescore, entries[i].id);
    } else {
      const auto it = gts.find(entries[i].id);
      if (it == gts.end()) throw ParseError("no annotation for image '" + entries[i].id + "'");
      const OracleRecognizer oracle(alphabet, frames, it->second,
                                    cfg.oracle);
      results[i] = rescore_candidates(images[i], candidates[i], lexicon, oracle, cfg.rescore,
                                      entries[i].id);
    }
  });

  auto emit = [&](const std::string& path, const std::vector<std::vector<Detection>>& sets) {
    std::vector<DetectionRecord> records;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      for (const Detection& d : sets[i]) {
        records.push_back({entries[i].id, image::width(images[i]), image::height(images[i]), d});
      }
    }
    write_detections(path, records);
  };
  emit(o.out, results);
  if (!o.candidates_out.empty()) emit(o.candidates_out, candidates);
  return kOk;
}

int cmd_eval(const Options& o) {
  const Config cfg = load_config_opt(o);
  if (o.task != "loc" && o.task != "spot") throw InputError("--task must be loc or spot");
  const bool need_images = !o.overlays.empty();
  const Dataset ds = read_dataset(o.gt, need_images);
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) index[ds.samples[i].id] = i;
  std::vector<std::vector<Detection>> dets(ds.samples.size());
  for (const DetectionRecord& r : read_detections(o.dets)) {
    const auto it = index.find(r.image_id);
    if (it == index.end()) {
      throw ParseError(o.dets + ": image '" + r.image_id + "' is not in " + o.gt);
    }
    dets[it->second].push_back(r.det);
  }
  const std::vector<EvalImage> items = eval_images(ds.samples, dets);
  const EvalReport report =
      o.task == "loc" ? eval_localization(items, cfg.eval) : eval_spotting(items, cfg.eval);
  {
    std::ofstream out(o.out, std::ios::binary);
    if (!out) throw ParseError(o.out + ": cannot open for writing");
    out << report_to_json(report, o.task);
  }
  std::cout << report_to_table(report, o.task == "loc" ? "localization" : "spotting");
  if (need_images) {
    fs::create_directories(o.overlays);
    for (std::size_t i = 0; i < items.size(); ++i) {
      image::write_ppm(fs::path(o.overlays) / (items[i].image_id + ".ppm"),
                       render_overlay(ds.samples[i].image, items[i], report.images[i]));
    }
  }
  return kOk;
}

int cmd_bench(const Options& o) {
  const Config cfg = load_config_opt(o);
  const DetectorModel model = load_model(fs::path(o.model));
  const std::vector<ImageEntry> entries = list_images(o.images);
  const std::vector<Tensor> images = load_images(entries);
  if (images.empty()) throw InputError(o.images + ": no images");
  using clock = std::chrono::steady_clock;
  auto time_per_image = [&](bool multi) {
    const auto t0 = clock::now();
    for (int r = 0; r < o.repeat; ++r) {
      for (const Tensor& img : images) {
        if (multi) {
          (void)detect_multi_scale(model, img, cfg.scales, cfg.detect, inference(o));
        } else {
          (void)detect_single_scale(model, img, cfg.detect.score, cfg.detect.nms, inference(o));
        }
      }
    }
    return std::chrono::duration<double>(clock::now() - t0).count() /
           (static_cast<double>(images.size()) * o.repeat);
  };
  const double single = time_per_image(false);
  const double multi = time_per_image(true);
  std::printf("%-14s | %10s\n", "Mode", "Time/s");
  std::printf("%-14s | %10.4f\n", "single-scale", single);
  std::printf("%-14s | %10.4f\n", "multi-scale", multi);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TextBoxes-style text detector"};
  app.require_subcommand(1);
  Options o;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  gen->add_option("--spec", o.spec_file, "Scene spec JSON file");
  gen->add_option("--preset", o.preset, "pretrain or finetune (when --spec is absent)");
  gen->add_option("--out", o.out, "Output directory")->required();
  gen->add_option("--count", o.count, "Number of images");
  gen->add_option("--seed", o.seed, "Override the spec seed");
  gen->add_option("--first-index", o.first_index, "Index of the first sample");

  auto* tr = app.add_subcommand("train", "Train or finetune a model");
  tr->add_option("--config", o.config, "YAML config; repeat to layer overrides");
  tr->add_option("--data", o.data, "Dataset directory")->required();
  tr->add_option("--init", o.init, "Start from this model instead of a fresh one");
  tr->add_option("--out", o.out, "Output model file")->required();
  tr->add_option("--log", o.log, "Write the loss log as CSV");
  tr->add_option("--iterations", o.iterations, "Override train.max_iterations");
  tr->add_option("--seed", o.seed, "Override train.seed");

  auto* det = app.add_subcommand("detect", "Detect words");
  det->add_option("--config", o.config, "YAML config; repeat to layer overrides");
  det->add_option("--model", o.model, "Model file")->required();
  det->add_option("--images", o.images, "Image or dataset directory")->required();
  det->add_flag("--multi-scale", o.multi_scale, "Aggregate over the configured scales");
  det->add_option("--out", o.out, "Detections JSONL")->required();
  det->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
  det->add_flag("--float32", o.float32, "32-bit storage for inference");

  auto* sp = app.add_subcommand("spot", "Word spotting with lexicon re-scoring");
  sp->add_option("--config", o.config, "YAML config; repeat to layer overrides");
  sp->add_option("--model", o.model, "Model file")->required();
  sp->add_option("--images", o.images, "Image or dataset directory")->required();
  sp->add_option("--lexicon", o.lexicon, "Lexicon file, one word per line")->required();
  sp->add_option("--recognizer", o.recognizer, "oracle or file:<path>");
  sp->add_option("--gt", o.gt, "Dataset with annotations for the oracle recognizer");
  sp->add_option("--out", o.out, "Spotted words JSONL")->required();
  sp->add_option("--candidates-out", o.candidates_out, "Also write the candidates");
  sp->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
  sp->add_flag("--float32", o.float32, "32-bit storage for inference");

  auto* ev = app.add_subcommand("eval", "Evaluate detections against ground truth");
  ev->add_option("--config", o.config, "YAML config; repeat to layer overrides");
  ev->add_option("--gt", o.gt, "Dataset directory")->required();
  ev->add_option("--dets", o.dets, "Detections JSONL")->required();
  ev->add_option("--task", o.task, "loc or spot")->check(CLI::IsMember({"loc", "spot"}));
  ev->add_option("--out", o.out, "Report JSON")->required();
  ev->add_option("--overlays", o.overlays, "Directory for overlay images");

  auto* be = app.add_subcommand("bench", "Per-image time, single vs multi-scale");
  be->add_option("--config", o.config, "YAML config; repeat to layer overrides");
  be->add_option("--model", o.model, "Model file")->required();
  be->add_option("--images", o.images, "Image or dataset directory")->required();
  be->add_option("--repeat", o.repeat, "Passes over the images")->check(CLI::PositiveNumber);
  be->add_flag("--float32", o.float32, "32-bit storage for inference");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return cmd_gen_data(o);
    if (*tr) return cmd_train(o);
    if (*det) return cmd_detect(o);
    if (*sp) return cmd_spot(o);
    if (*ev) return cmd_eval(o);
    if (*be) return cmd_bench(o);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
