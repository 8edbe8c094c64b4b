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

#include "textboxes/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <optional>
#include <sstream>
#include <tuple>

#include "textboxes/errors.hpp"

namespace textboxes {
namespace {

constexpr char kMagic[] = "TBOXMDL1";
// Sanity limits so that corrupt headers fail fast instead of allocating.
constexpr int kMaxChannels = 4096;
constexpr int kMaxKernel = 31;
constexpr std::size_t kMaxLayers = 512;

struct ConvEntry {
  int channels = 0;
  int kh = 0;
  int kw = 0;
};

bool parse_kernel(const std::string& text, int& kh, int& kw) {
  const auto x = text.find('x');
  if (x == std::string::npos) return false;
  try {
    std::size_t used = 0;
    kh = std::stoi(text.substr(0, x), &used);
    if (used != x) return false;
    kw = std::stoi(text.substr(x + 1), &used);
    if (used != text.size() - x - 1) return false;
  } catch (const std::exception&) {
    return false;
  }
  return kh > 0 && kw > 0;
}

ConvEntry parse_conv(const std::string& entry) {
  std::istringstream is(entry);
  std::string word, kernel, extra;
  ConvEntry c;
  if (!(is >> word >> c.channels >> kernel) || (is >> extra) || c.channels < 1 ||
      c.channels > kMaxChannels || !parse_kernel(kernel, c.kh, c.kw) ||
      c.kh > kMaxKernel || c.kw > kMaxKernel) {
    throw InputError("bad backbone entry '" + entry +
                     "' (expected 'conv <channels> <kh>x<kw>')");
  }
  return c;
}

std::string join(const std::vector<double>& values) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) os << ' ';
    os << values[i];
  }
  return os.str();
}

void write_le_doubles(std::ostream& os, const Tensor& t) {
  std::vector<unsigned char> bytes(t.size() * 8);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(t[i]);
    for (int b = 0; b < 8; ++b) bytes[8 * i + b] = (bits >> (8 * b)) & 0xff;
  }
  os.write(reinterpret_cast<const char*>(bytes.data()),
           static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

std::vector<std::string> ModelSpec::default_backbone() {
  return {"conv 16 3x3", "relu", "pool",                 // stride 2
          "conv 16 3x3", "relu", "pool",                 // stride 4
          "conv 32 3x3", "relu", "conv 32 3x3", "relu",  //
          "tap",                                         // head at stride 4
          "pool", "conv 64 3x3", "relu", "tap",          // stride 8
          "pool", "conv 64 3x3", "relu", "tap"};         // stride 16
}

void ModelSpec::validate() const {
  if (input_channels < 1 || input_channels > kMaxChannels) {
    throw InputError("input_channels out of range");
  }
  if (backbone.size() > kMaxLayers) throw InputError("backbone too deep");
  if (aspect_ratios.size() > 64 || vertical_offsets.size() > 8) {
    throw InputError("too many aspect ratios or vertical offsets");
  }
  if (head_kernel_h < 1 || head_kernel_w < 1 || head_kernel_h > kMaxKernel ||
      head_kernel_w > kMaxKernel) {
    throw InputError("head kernel dims must be positive");
  }
  if (head_kernel_h % 2 == 0 || head_kernel_w % 2 == 0) {
    throw InputError("head kernel dims must be odd for same padding");
  }
  if (aspect_ratios.empty()) throw InputError("aspect_ratios must be non-empty");
  for (double a : aspect_ratios) {
    if (!(a > 0.0)) throw InputError("aspect ratios must be positive");
  }
  if (!(background_prior > 0.0 && background_prior < 1.0)) {
    throw InputError("background_prior must be in (0, 1)");
  }
  for (double s : head_scales) {
    if (!(s > 0.0 && s <= 1.0)) throw InputError("head scales must be in (0, 1]");
  }
  if (!std::isfinite(input_mean)) throw InputError("input_mean must be finite");
  if (!(init_gain > 0.0 && std::isfinite(init_gain))) {
    throw InputError("init_gain must be positive");
  }
}

DetectorModel::DetectorModel(ModelSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  build();
  initialize();
}

void DetectorModel::build() {
  int channels = spec_.input_channels;
  for (const std::string& entry : spec_.backbone) {
    std::istringstream is(entry);
    std::string kind;
    is >> kind;
    if (kind == "conv") {
      const ConvEntry c = parse_conv(entry);
      ops_.push_back({OpKind::kConv, static_cast<int>(convs_.size())});
      convs_.emplace_back(channels, c.channels, c.kh, c.kw, 1);
      channels = c.channels;
    } else if (kind == "relu" || kind == "pool" || kind == "tap") {
      std::string extra;
      if (is >> extra) throw InputError("bad backbone entry '" + entry + "'");
      if (kind == "relu") {
        ops_.push_back({OpKind::kRelu, 0});
      } else if (kind == "pool") {
        ops_.push_back({OpKind::kPool, 0});
      } else {
        ops_.push_back({OpKind::kTap, static_cast<int>(heads_.size())});
        GridSpec probe;
        probe.aspect_ratios = spec_.aspect_ratios;
        probe.vertical_offsets = spec_.vertical_offsets;
        heads_.emplace_back(channels, probe.prediction_width(),
                            spec_.head_kernel_h, spec_.head_kernel_w, 1);
      }
    } else {
      throw InputError("unknown backbone entry '" + entry + "'");
    }
  }
  if (heads_.empty()) throw InputError("backbone has no 'tap' entries");
  if (spec_.head_scales.empty()) {
    scales_ = linear_scales(static_cast<int>(heads_.size()));
  } else if (spec_.head_scales.size() != heads_.size()) {
    throw InputError("head_scales has " + std::to_string(spec_.head_scales.size()) +
                     " entries for " + std::to_string(heads_.size()) + " heads");
  } else {
    scales_ = spec_.head_scales;
  }
}

void DetectorModel::initialize() {
  std::mt19937_64 rng(spec_.init_seed);
  for (nn::ConvLayer& c : convs_) nn::glorot_uniform_init(c, rng, spec_.init_gain);
  const double text_logit =
      std::log((1.0 - spec_.background_prior) / spec_.background_prior);
  for (nn::ConvLayer& h : heads_) {
    nn::glorot_uniform_init(h, rng);
    const int priors = h.out_channels() / 6;
    for (int k = 0; k < priors; ++k) h.bias()[2 * k + 1] = text_logit;
  }
}

std::vector<GridSpec> DetectorModel::grids_for(int image_w, int image_h) const {
  std::vector<GridSpec> grids;
  int h = image_h, w = image_w;
  try {
    for (const Op& op : ops_) {
      switch (op.kind) {
        case OpKind::kConv:
          std::tie(h, w) = convs_[op.index].output_size(h, w);
          break;
        case OpKind::kPool:
          h = (h + 1) / 2;
          w = (w + 1) / 2;
          break;
        case OpKind::kTap: {
          heads_[op.index].output_size(h, w);
          GridSpec g;
          g.map_w = w;
          g.map_h = h;
          g.scale = scales_[op.index];
          g.aspect_ratios = spec_.aspect_ratios;
          g.vertical_offsets = spec_.vertical_offsets;
          grids.push_back(std::move(g));
          break;
        }
        case OpKind::kRelu:
          break;
      }
    }
  } catch (const ShapeError& e) {
    throw InputError("image " + std::to_string(image_w) + "x" +
                     std::to_string(image_h) +
                     " is smaller than the backbone minimum: " + e.what());
  }
  return grids;
}

std::vector<DefaultBox> DetectorModel::priors_for(int image_w, int image_h) const {
  const auto grids = grids_for(image_w, image_h);
  return generate_priors(grids);
}

std::vector<GridSpec> ForwardOutput::grids() const {
  std::vector<GridSpec> g;
  for (const HeadOutput& h : heads) g.push_back(h.grid);
  return g;
}

namespace {

Tensor concat_rows(const std::vector<HeadOutput>& heads, bool conf) {
  int rows = 0;
  const int cols = conf ? 2 : 4;
  for (const HeadOutput& h : heads) rows += (conf ? h.conf : h.loc).dim(0);
  Tensor out(Shape{rows, cols});
  std::size_t at = 0;
  for (const HeadOutput& h : heads) {
    const Tensor& t = conf ? h.conf : h.loc;
    std::copy(t.data().begin(), t.data().end(), out.data().begin() + at);
    at += t.size();
  }
  return out;
}

// Head output (1, ppc*6, mh, mw) -> conf (P_h, 2) and loc (P_h, 4).
HeadOutput gather_head(const Tensor& raw, const GridSpec& grid) {
  const int ppc = grid.priors_per_cell();
  const std::size_t hw = static_cast<std::size_t>(grid.map_h) * grid.map_w;
  HeadOutput out{grid, Tensor(Shape{grid.prior_count(), 2}),
                 Tensor(Shape{grid.prior_count(), 4})};
  for (std::size_t cell = 0; cell < hw; ++cell) {
    for (int k = 0; k < ppc; ++k) {
      const std::size_t prior = cell * ppc + k;
      for (int c = 0; c < 2; ++c) {
        out.conf[prior * 2 + c] = raw[(2 * k + c) * hw + cell];
      }
      for (int d = 0; d < 4; ++d) {
        out.loc[prior * 4 + d] = raw[(2 * ppc + 4 * k + d) * hw + cell];
      }
    }
  }
  return out;
}

Tensor scatter_head(const Tensor& grad_conf, const Tensor& grad_loc,
                    std::size_t first_prior, const GridSpec& grid) {
  const int ppc = grid.priors_per_cell();
  const std::size_t hw = static_cast<std::size_t>(grid.map_h) * grid.map_w;
  Tensor raw(Shape{1, ppc * 6, grid.map_h, grid.map_w});
  for (std::size_t cell = 0; cell < hw; ++cell) {
    for (int k = 0; k < ppc; ++k) {
      const std::size_t prior = first_prior + cell * ppc + k;
      for (int c = 0; c < 2; ++c) {
        raw[(2 * k + c) * hw + cell] = grad_conf[prior * 2 + c];
      }
      for (int d = 0; d < 4; ++d) {
        raw[(2 * ppc + 4 * k + d) * hw + cell] = grad_loc[prior * 4 + d];
      }
    }
  }
  return raw;
}

nn::ConvLayer rounded(const nn::ConvLayer& layer) {
  nn::ConvLayer copy = layer;
  copy.kernel().round_to_float32();
  copy.bias().round_to_float32();
  return copy;
}

}  // namespace

Tensor ForwardOutput::flat_conf() const { return concat_rows(heads, true); }
Tensor ForwardOutput::flat_loc() const { return concat_rows(heads, false); }

Tensor DetectorModel::head_input(const Tensor& image) const {
  if (image.rank() != 3 || image.dim(0) != spec_.input_channels) {
    throw ShapeError("detector input must be (" +
                     std::to_string(spec_.input_channels) + ",H,W), got " +
                     shape_to_string(image.shape()));
  }
  grids_for(image.dim(2), image.dim(1));  // size check
  Tensor x = image.reshaped({1, image.dim(0), image.dim(1), image.dim(2)});
  if (spec_.input_mean != 0.0) {
    for (double& v : x.data()) v -= spec_.input_mean;
  }
  return x;
}

ForwardOutput DetectorModel::forward(const Tensor& image,
                                     InferenceOptions options) const {
  Tensor x = head_input(image);
  const bool f32 = options.float32_storage;
  if (f32) x.round_to_float32();
  ForwardOutput out;
  for (const Op& op : ops_) {
    switch (op.kind) {
      case OpKind::kConv:
        x = nn::conv2d_forward(x, f32 ? rounded(convs_[op.index]) : convs_[op.index]);
        break;
      case OpKind::kRelu:
        x = nn::relu_forward(x);
        break;
      case OpKind::kPool:
        x = nn::maxpool2x2_forward(x).output;
        break;
      case OpKind::kTap: {
        const nn::ConvLayer& head = heads_[op.index];
        Tensor raw = nn::conv2d_forward(x, f32 ? rounded(head) : head);
        if (f32) raw.round_to_float32();
        GridSpec g;
        g.map_w = x.dim(3);
        g.map_h = x.dim(2);
        g.scale = scales_[op.index];
        g.aspect_ratios = spec_.aspect_ratios;
        g.vertical_offsets = spec_.vertical_offsets;
        out.heads.push_back(gather_head(raw, g));
        break;
      }
    }
    if (f32) x.round_to_float32();
  }
  return out;
}

ForwardState DetectorModel::forward_train(const Tensor& image) const {
  ForwardState state;
  Tensor x = head_input(image);
  for (const Op& op : ops_) {
    state.op_inputs.push_back(x);
    switch (op.kind) {
      case OpKind::kConv:
        x = nn::conv2d_forward(x, convs_[op.index]);
        break;
      case OpKind::kRelu:
        x = nn::relu_forward(x);
        break;
      case OpKind::kPool: {
        nn::PoolResult r = nn::maxpool2x2_forward(x);
        x = std::move(r.output);
        state.pool_masks.push_back(std::move(r.mask));
        break;
      }
      case OpKind::kTap: {
        state.op_inputs.back() = Tensor();  // taps need no saved input
        const Tensor raw = nn::conv2d_forward(x, heads_[op.index]);
        GridSpec g;
        g.map_w = x.dim(3);
        g.map_h = x.dim(2);
        g.scale = scales_[op.index];
        g.aspect_ratios = spec_.aspect_ratios;
        g.vertical_offsets = spec_.vertical_offsets;
        state.output.heads.push_back(gather_head(raw, g));
        state.tap_features.push_back(x);
        break;
      }
    }
  }
  return state;
}

std::vector<Tensor> DetectorModel::backward(const ForwardState& state,
                                            const Tensor& grad_conf,
                                            const Tensor& grad_loc) const {
  const Tensor conf_ref = state.output.flat_conf();
  require_same_shape(conf_ref, grad_conf, "detector backward conf gradient");
  if (grad_loc.rank() != 2 || grad_loc.dim(0) != conf_ref.dim(0) ||
      grad_loc.dim(1) != 4) {
    throw ShapeError("detector backward loc gradient " +
                     shape_to_string(grad_loc.shape()));
  }

  std::vector<Tensor> grads(2 * (convs_.size() + heads_.size()));
  const std::size_t head_base = 2 * convs_.size();
  std::vector<Tensor> tap_grads(heads_.size());
  std::size_t first_prior = 0;
  for (std::size_t h = 0; h < heads_.size(); ++h) {
    const GridSpec& grid = state.output.heads[h].grid;
    const Tensor raw_grad = scatter_head(grad_conf, grad_loc, first_prior, grid);
    nn::ConvBackward b =
        nn::conv2d_backward(state.tap_features[h], heads_[h], raw_grad);
    grads[head_base + 2 * h] = std::move(b.params.kernel);
    grads[head_base + 2 * h + 1] = std::move(b.params.bias);
    tap_grads[h] = std::move(b.input);
    first_prior += static_cast<std::size_t>(grid.prior_count());
  }

  Tensor grad;  // gradient w.r.t. the output of the current op
  std::size_t pool_index = state.pool_masks.size();
  for (std::size_t i = ops_.size(); i-- > 0;) {
    const Op& op = ops_[i];
    if (op.kind == OpKind::kPool) --pool_index;
    if (op.kind == OpKind::kTap) {
      const Tensor& g = tap_grads[op.index];
      if (grad.empty()) {
        grad = g;
      } else {
        for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += g[k];
      }
      continue;
    }
    if (grad.empty()) continue;  // ops after the last tap
    switch (op.kind) {
      case OpKind::kConv: {
        nn::ConvBackward b = nn::conv2d_backward(state.op_inputs[i],
                                                 convs_[op.index], grad, i > 0);
        grads[2 * op.index] = std::move(b.params.kernel);
        grads[2 * op.index + 1] = std::move(b.params.bias);
        grad = std::move(b.input);
        break;
      }
      case OpKind::kRelu:
        grad = nn::relu_backward(state.op_inputs[i], grad);
        break;
      case OpKind::kPool:
        grad = nn::maxpool2x2_backward(state.pool_masks[pool_index], grad);
        break;
      case OpKind::kTap:
        break;
    }
  }
  // Parameters that received no gradient (after the last tap) get zeros.
  auto params = parameters();
  for (std::size_t k = 0; k < grads.size(); ++k) {
    if (grads[k].empty()) grads[k] = Tensor(params[k]->shape());
  }
  return grads;
}

std::vector<Tensor*> DetectorModel::parameters() {
  std::vector<Tensor*> p;
  for (nn::ConvLayer& c : convs_) {
    p.push_back(&c.kernel());
    p.push_back(&c.bias());
  }
  for (nn::ConvLayer& h : heads_) {
    p.push_back(&h.kernel());
    p.push_back(&h.bias());
  }
  return p;
}

std::vector<const Tensor*> DetectorModel::parameters() const {
  std::vector<const Tensor*> p;
  for (const nn::ConvLayer& c : convs_) {
    p.push_back(&c.kernel());
    p.push_back(&c.bias());
  }
  for (const nn::ConvLayer& h : heads_) {
    p.push_back(&h.kernel());
    p.push_back(&h.bias());
  }
  return p;
}

std::vector<std::string> DetectorModel::parameter_names() const {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    names.push_back("backbone." + std::to_string(i) + ".kernel");
    names.push_back("backbone." + std::to_string(i) + ".bias");
  }
  for (std::size_t i = 0; i < heads_.size(); ++i) {
    names.push_back("head." + std::to_string(i) + ".kernel");
    names.push_back("head." + std::to_string(i) + ".bias");
  }
  return names;
}

bool operator==(const DetectorModel& a, const DetectorModel& b) {
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (!(*pa[i] == *pb[i])) return false;
  }
  return a.spec_.backbone == b.spec_.backbone &&
         a.spec_.aspect_ratios == b.spec_.aspect_ratios &&
         a.spec_.vertical_offsets == b.spec_.vertical_offsets &&
         a.scales_ == b.scales_ && a.spec_.input_mean == b.spec_.input_mean &&
         a.spec_.head_kernel_h == b.spec_.head_kernel_h &&
         a.spec_.head_kernel_w == b.spec_.head_kernel_w;
}

void save_model(const DetectorModel& model, std::ostream& os) {
  const ModelSpec& s = model.spec();
  std::ostringstream header;
  header.precision(17);
  header << kMagic << '\n';
  header << "input_channels " << s.input_channels << '\n';
  header << "head_kernel " << s.head_kernel_h << 'x' << s.head_kernel_w << '\n';
  header << "aspect_ratios " << join(s.aspect_ratios) << '\n';
  header << "vertical_offsets " << join(s.vertical_offsets) << '\n';
  header << "head_scales " << join(model.head_scales()) << '\n';
  header << "background_prior " << s.background_prior << '\n';
  header << "init_seed " << s.init_seed << '\n';
  header << "input_mean " << s.input_mean << '\n';
  header << "init_gain " << s.init_gain << '\n';
  for (const std::string& entry : s.backbone) header << "layer " << entry << '\n';
  const auto params = model.parameters();
  const auto names = model.parameter_names();
  for (std::size_t i = 0; i < params.size(); ++i) {
    header << "param " << names[i];
    for (int d : params[i]->shape()) header << ' ' << d;
    header << '\n';
  }
  header << "end_header\n";
  const std::string text = header.str();
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const Tensor* p : params) write_le_doubles(os, *p);
  if (!os) throw ParseError("model write failed");
}

void save_model(const DetectorModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path.string() + ": cannot open for writing");
  save_model(model, out);
}

DetectorModel load_model(std::istream& is, const std::string& source) {
  auto fail = [&](int line, const std::string& what) -> ParseError {
    return ParseError(source + ":" + std::to_string(line) + ": " + what);
  };
  std::string line;
  int line_no = 1;
  if (!std::getline(is, line) || line != kMagic) {
    throw fail(1, "missing TBOXMDL1 magic");
  }
  ModelSpec spec;
  spec.backbone.clear();
  struct ParamDecl {
    std::string name;
    Shape shape;
  };
  std::vector<ParamDecl> decls;
  bool ended = false;
  auto read_doubles = [&](std::istringstream& ls, int ln) {
    std::vector<double> v;
    double x;
    while (ls >> x) v.push_back(x);
    if (!ls.eof()) throw fail(ln, "expected numbers");
    return v;
  };
  while (std::getline(is, line)) {
    ++line_no;
    if (line == "end_header") {
      ended = true;
      break;
    }
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "input_channels") {
      if (!(ls >> spec.input_channels)) throw fail(line_no, "bad input_channels");
    } else if (key == "head_kernel") {
      std::string k;
      ls >> k;
      if (!parse_kernel(k, spec.head_kernel_h, spec.head_kernel_w)) {
        throw fail(line_no, "bad head_kernel");
      }
    } else if (key == "aspect_ratios") {
      spec.aspect_ratios = read_doubles(ls, line_no);
    } else if (key == "vertical_offsets") {
      spec.vertical_offsets = read_doubles(ls, line_no);
    } else if (key == "head_scales") {
      spec.head_scales = read_doubles(ls, line_no);
    } else if (key == "background_prior") {
      if (!(ls >> spec.background_prior)) throw fail(line_no, "bad background_prior");
    } else if (key == "init_seed") {
      if (!(ls >> spec.init_seed)) throw fail(line_no, "bad init_seed");
    } else if (key == "input_mean") {
      if (!(ls >> spec.input_mean)) throw fail(line_no, "bad input_mean");
    } else if (key == "init_gain") {
      if (!(ls >> spec.init_gain)) throw fail(line_no, "bad init_gain");
    } else if (key == "layer") {
      std::string rest;
      std::getline(ls >> std::ws, rest);
      spec.backbone.push_back(rest);
    } else if (key == "param") {
      ParamDecl d;
      ls >> d.name;
      int dim;
      while (ls >> dim) d.shape.push_back(dim);
      if (d.name.empty() || d.shape.empty()) throw fail(line_no, "bad param line");
      decls.push_back(std::move(d));
    } else {
      throw fail(line_no, "unknown header key '" + key + "'");
    }
  }
  if (!ended) throw fail(line_no, "missing end_header");

  std::optional<DetectorModel> model;
  try {
    model.emplace(spec);
  } catch (const Error& e) {
    throw ParseError(source + ": invalid architecture: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(source + ": invalid architecture: " + e.what());
  }
  auto params = model->parameters();
  const auto names = model->parameter_names();
  if (decls.size() != params.size()) {
    throw ParseError(source + ": header declares " + std::to_string(decls.size()) +
                     " parameters, architecture has " +
                     std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (decls[i].name != names[i] || decls[i].shape != params[i]->shape()) {
      throw ParseError(source + ": parameter " + decls[i].name + " " +
                       shape_to_string(decls[i].shape) + " does not match " +
                       names[i] + " " + shape_to_string(params[i]->shape()));
    }
    std::vector<unsigned char> bytes(params[i]->size() * 8);
    is.read(reinterpret_cast<char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (static_cast<std::size_t>(is.gcount()) != bytes.size()) {
      throw ParseError(source + ": truncated parameter blob for " + names[i]);
    }
    for (std::size_t k = 0; k < params[i]->size(); ++k) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) {
        bits |= static_cast<std::uint64_t>(bytes[8 * k + b]) << (8 * b);
      }
      (*params[i])[k] = std::bit_cast<double>(bits);
    }
    try {
      check_finite(*params[i], source + " parameter " + names[i]);
    } catch (const NumericError& e) {
      throw ParseError(e.what());
    }
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw ParseError(source + ": trailing bytes after parameter blobs");
  }
  return std::move(*model);
}

DetectorModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open");
  return load_model(in, path.string());
}

}  // namespace textboxes
