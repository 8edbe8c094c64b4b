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

#include <array>
#include <filesystem>
#include <string>

#include "textboxes/tensor.hpp"

// Images are (C, H, W) tensors with values in [0, 1].
namespace textboxes::image {

int channels(const Tensor& img);
int height(const Tensor& img);
int width(const Tensor& img);

// Bilinear resampling with half-pixel centers (edge-clamped).
Tensor resize_bilinear(const Tensor& img, int out_w, int out_h);

Tensor flip_horizontal(const Tensor& img);

// Pixel crop [x0, x0+w) x [y0, y0+h); must lie inside the image.
Tensor crop(const Tensor& img, int x0, int y0, int w, int h);

// Binary PPM (P6, maxval 255). Reading yields exact k/255 values;
// writing rounds to the nearest level.
Tensor read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Tensor& img);

// Snap every value to the nearest k/255 level so PPM round trips are exact.
void quantize_u8(Tensor& img);

using Color = std::array<double, 3>;

// Draw a 1-pixel rectangle outline; `dash` > 0 draws dashes of that length.
void draw_rect(Tensor& img, double x0, double y0, double x1, double y1,
               const Color& color, int dash = 0);

}  // namespace textboxes::image
