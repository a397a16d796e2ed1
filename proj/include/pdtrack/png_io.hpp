// Copyright 2026 The pdtrack Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Palette-indexed PNG I/O for label maps: pixel index = object id, 0 is
// background. Writes use fixed compression settings (level 6, filter NONE,
// no interlace) so identical maps produce byte-identical files.

#pragma once

#include <png.h>

#include <array>
#include <cstdio>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdtrack/raster.hpp"

namespace pdtrack {

using Palette = std::vector<std::array<std::uint8_t, 3>>;

/// The conventional 256-entry label palette: entry i spreads the bits of i
/// across the top bits of r/g/b, giving visually distinct colors for small
/// ids. Entry 0 is black (background).
inline Palette default_palette() {
  Palette palette(256);
  for (int i = 0; i < 256; ++i) {
    std::uint8_t r = 0, g = 0, b = 0;
    int c = i;
    for (int j = 0; j < 8 && c != 0; ++j) {
      r = static_cast<std::uint8_t>(r | ((c >> 0) & 1) << (7 - j));
      g = static_cast<std::uint8_t>(g | ((c >> 1) & 1) << (7 - j));
      b = static_cast<std::uint8_t>(b | ((c >> 2) & 1) << (7 - j));
      c >>= 3;
    }
    palette[i] = {r, g, b};
  }
  return palette;
}

struct LabelImage {
  LabelMap labels;
  Palette palette;
};

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw std::runtime_error("cannot open " + path);
  return f;
}

}  // namespace detail

inline void write_label_png(const LabelMap& labels, const Palette& palette,
                            const std::string& path) {
  if (labels.width() < 1 || labels.height() < 1)
    throw std::invalid_argument("write_label_png: empty label map");
  if (palette.empty() || palette.size() > 256)
    throw std::invalid_argument("write_label_png: palette must have 1..256 entries");
  for (int v : labels.labels())
    if (v < 0 || v >= static_cast<int>(palette.size()))
      throw std::invalid_argument("write_label_png: id " + std::to_string(v) +
                                  " exceeds the palette");

  detail::FilePtr file = detail::open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                            nullptr);
  if (!png) throw std::runtime_error("write_label_png: png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("write_label_png: png_create_info_struct failed");
  }
  // Buffers live outside the setjmp scope so the longjmp path stays clean.
  std::vector<png_color> plte(palette.size());
  for (std::size_t i = 0; i < palette.size(); ++i)
    plte[i] = {palette[i][0], palette[i][1], palette[i][2]};
  std::vector<std::uint8_t> row(static_cast<std::size_t>(labels.width()));

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("write_label_png: libpng error writing " + path);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(labels.width()),
               static_cast<png_uint_32>(labels.height()), 8, PNG_COLOR_TYPE_PALETTE,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_PLTE(png, info, plte.data(), static_cast<int>(plte.size()));
  png_set_compression_level(png, 6);
  png_set_filter(png, 0, PNG_FILTER_NONE);
  png_write_info(png, info);
  for (int y = 0; y < labels.height(); ++y) {
    for (int x = 0; x < labels.width(); ++x)
      row[static_cast<std::size_t>(x)] = static_cast<std::uint8_t>(labels.at(x, y));
    png_write_row(png, row.data());
  }
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
}

/// Reads a palette-indexed PNG as labels. Rejects non-indexed color types;
/// sub-byte index depths are unpacked to one index per pixel.
inline LabelImage read_label_png(const std::string& path) {
  detail::FilePtr file = detail::open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                           nullptr);
  if (!png) throw std::runtime_error("read_label_png: png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("read_label_png: png_create_info_struct failed");
  }
  LabelImage out;
  std::vector<std::uint8_t> row;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("read_label_png: libpng error reading " + path);
  }
  png_init_io(png, file.get());
  png_read_info(png, info);

  png_uint_32 width = 0, height = 0;
  int bit_depth = 0, color_type = 0;
  png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type, nullptr, nullptr,
               nullptr);
  if (color_type != PNG_COLOR_TYPE_PALETTE) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("read_label_png: " + path + " is not palette-indexed");
  }
  if (bit_depth < 8) png_set_packing(png);
  png_read_update_info(png, info);

  png_colorp plte = nullptr;
  int plte_size = 0;
  png_get_PLTE(png, info, &plte, &plte_size);
  out.palette.resize(static_cast<std::size_t>(plte_size));
  for (int i = 0; i < plte_size; ++i)
    out.palette[static_cast<std::size_t>(i)] = {plte[i].red, plte[i].green, plte[i].blue};

  out.labels = LabelMap(static_cast<int>(width), static_cast<int>(height));
  row.resize(width);
  for (png_uint_32 y = 0; y < height; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (png_uint_32 x = 0; x < width; ++x)
      out.labels.set(static_cast<int>(x), static_cast<int>(y), row[x]);
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

}  // namespace pdtrack
