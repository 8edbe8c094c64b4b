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

#include "textboxes/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

#include "textboxes/errors.hpp"

namespace textboxes::image {
namespace {

void require_image(const Tensor& img, const char* what) {
  if (img.rank() != 3) {
    throw ShapeError(std::string(what) + ": expected (C,H,W) image, got " +
                     shape_to_string(img.shape()));
  }
}

double to_unit(unsigned char v) { return static_cast<double>(v) / 255.0; }

unsigned char to_byte(double v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

// Skip whitespace and '#' comments in a PPM header.
void skip_header_space(std::istream& is) {
  for (;;) {
    const int c = is.peek();
    if (c == '#') {
      std::string ignored;
      std::getline(is, ignored);
    } else if (c == ' ' || c == '\n' || c == '\r' || c == '\t') {
      is.get();
    } else {
      return;
    }
  }
}

}  // namespace

int channels(const Tensor& img) { return img.dim(0); }
int height(const Tensor& img) { return img.dim(1); }
int width(const Tensor& img) { return img.dim(2); }

Tensor resize_bilinear(const Tensor& img, int out_w, int out_h) {
  require_image(img, "resize_bilinear");
  if (out_w < 1 || out_h < 1) throw InputError("resize_bilinear: empty target");
  const int c = channels(img), in_h = height(img), in_w = width(img);
  if (in_h == out_h && in_w == out_w) return img;

  struct Tap {
    int lo, hi;
    double frac;
  };
  auto taps = [](int in, int out) {
    std::vector<Tap> t(static_cast<std::size_t>(out));
    const double scale = static_cast<double>(in) / out;
    for (int o = 0; o < out; ++o) {
      double src = (o + 0.5) * scale - 0.5;
      src = std::clamp(src, 0.0, static_cast<double>(in - 1));
      const int lo = static_cast<int>(std::floor(src));
      const int hi = std::min(lo + 1, in - 1);
      t[o] = {lo, hi, src - lo};
    }
    return t;
  };
  const auto xs = taps(in_w, out_w);
  const auto ys = taps(in_h, out_h);

  Tensor out(Shape{c, out_h, out_w});
  for (int ch = 0; ch < c; ++ch) {
    const double* plane = img.raw() + static_cast<std::size_t>(ch) * in_h * in_w;
    double* dst = out.raw() + static_cast<std::size_t>(ch) * out_h * out_w;
    for (int oy = 0; oy < out_h; ++oy) {
      const Tap& ty = ys[oy];
      const double* r0 = plane + static_cast<std::size_t>(ty.lo) * in_w;
      const double* r1 = plane + static_cast<std::size_t>(ty.hi) * in_w;
      for (int ox = 0; ox < out_w; ++ox) {
        const Tap& tx = xs[ox];
        const double top = r0[tx.lo] + (r0[tx.hi] - r0[tx.lo]) * tx.frac;
        const double bottom = r1[tx.lo] + (r1[tx.hi] - r1[tx.lo]) * tx.frac;
        dst[static_cast<std::size_t>(oy) * out_w + ox] =
            top + (bottom - top) * ty.frac;
      }
    }
  }
  return out;
}

Tensor flip_horizontal(const Tensor& img) {
  require_image(img, "flip_horizontal");
  const int c = channels(img), h = height(img), w = width(img);
  Tensor out(img.shape());
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < h; ++y) {
      const std::size_t row = (static_cast<std::size_t>(ch) * h + y) * w;
      for (int x = 0; x < w; ++x) out[row + x] = img[row + (w - 1 - x)];
    }
  }
  return out;
}

Tensor crop(const Tensor& img, int x0, int y0, int w, int h) {
  require_image(img, "crop");
  if (x0 < 0 || y0 < 0 || w < 1 || h < 1 || x0 + w > width(img) ||
      y0 + h > height(img)) {
    throw InputError("crop: window outside image");
  }
  const int c = channels(img), in_h = height(img), in_w = width(img);
  Tensor out(Shape{c, h, w});
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < h; ++y) {
      const double* src =
          img.raw() + (static_cast<std::size_t>(ch) * in_h + y0 + y) * in_w + x0;
      std::copy(src, src + w,
                out.raw() + (static_cast<std::size_t>(ch) * h + y) * w);
    }
  }
  return out;
}

Tensor read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open");
  std::string magic;
  in >> magic;
  if (magic != "P6") throw ParseError(path.string() + ": not a binary PPM (P6)");
  int w = 0, h = 0, maxval = 0;
  skip_header_space(in);
  in >> w;
  skip_header_space(in);
  in >> h;
  skip_header_space(in);
  in >> maxval;
  if (!in || w < 1 || h < 1 || maxval != 255) {
    throw ParseError(path.string() + ": bad PPM header");
  }
  in.get();  // single whitespace before raster
  const std::size_t count = static_cast<std::size_t>(w) * h * 3;
  std::vector<unsigned char> raster(count);
  in.read(reinterpret_cast<char*>(raster.data()),
          static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(in.gcount()) != count) {
    throw ParseError(path.string() + ": truncated PPM raster (" +
                     std::to_string(in.gcount()) + " of " +
                     std::to_string(count) + " bytes)");
  }
  Tensor img(Shape{3, h, w});
  const std::size_t plane = static_cast<std::size_t>(w) * h;
  for (std::size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < 3; ++c) img[c * plane + i] = to_unit(raster[3 * i + c]);
  }
  return img;
}

void write_ppm(const std::filesystem::path& path, const Tensor& img) {
  require_image(img, "write_ppm");
  if (channels(img) != 3) throw ShapeError("write_ppm: need 3 channels");
  const int h = height(img), w = width(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path.string() + ": cannot open for writing");
  out << "P6\n" << w << ' ' << h << "\n255\n";
  const std::size_t plane = static_cast<std::size_t>(w) * h;
  std::vector<unsigned char> raster(plane * 3);
  for (std::size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < 3; ++c) raster[3 * i + c] = to_byte(img[c * plane + i]);
  }
  out.write(reinterpret_cast<const char*>(raster.data()),
            static_cast<std::streamsize>(raster.size()));
  if (!out) throw ParseError(path.string() + ": write failed");
}

void quantize_u8(Tensor& img) {
  for (double& v : img.data()) v = to_unit(to_byte(v));
}

void draw_rect(Tensor& img, double x0, double y0, double x1, double y1,
               const Color& color, int dash) {
  require_image(img, "draw_rect");
  const int h = height(img), w = width(img);
  const int l = std::clamp(static_cast<int>(std::lround(x0)), 0, w - 1);
  const int r = std::clamp(static_cast<int>(std::lround(x1)) - 1, 0, w - 1);
  const int t = std::clamp(static_cast<int>(std::lround(y0)), 0, h - 1);
  const int b = std::clamp(static_cast<int>(std::lround(y1)) - 1, 0, h - 1);
  const std::size_t plane = static_cast<std::size_t>(w) * h;
  auto put = [&](int x, int y, int step) {
    if (dash > 0 && (step / dash) % 2 == 1) return;
    for (int c = 0; c < 3 && c < channels(img); ++c) {
      img[c * plane + static_cast<std::size_t>(y) * w + x] = color[c];
    }
  };
  for (int x = l; x <= r; ++x) {
    put(x, t, x - l);
    put(x, b, x - l);
  }
  for (int y = t; y <= b; ++y) {
    put(l, y, y - t);
    put(r, y, y - t);
  }
}

}  // namespace textboxes::image
