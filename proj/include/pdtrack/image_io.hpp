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

// RGB frame I/O: PNG read/write and JPEG read. PNG writes use the same fixed
// settings as the label writer so repeated runs are byte-identical.

#pragma once

#include <jpeglib.h>
#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdtrack/image.hpp"
#include "pdtrack/png_io.hpp"

namespace pdtrack {

inline void write_rgb_png(const RgbImage& image, const std::string& path) {
  if (image.width() < 1 || image.height() < 1)
    throw std::invalid_argument("write_rgb_png: empty image");

  detail::FilePtr file = detail::open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                            nullptr);
  if (!png) throw std::runtime_error("write_rgb_png: png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("write_rgb_png: png_create_info_struct failed");
  }
  std::vector<std::uint8_t> row(static_cast<std::size_t>(image.width()) * 3);

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("write_rgb_png: libpng error writing " + path);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()),
               static_cast<png_uint_32>(image.height()), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_set_filter(png, 0, PNG_FILTER_NONE);
  png_write_info(png, info);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const auto rgb = image.pixel(x, y);
      row[static_cast<std::size_t>(x) * 3 + 0] = rgb[0];
      row[static_cast<std::size_t>(x) * 3 + 1] = rgb[1];
      row[static_cast<std::size_t>(x) * 3 + 2] = rgb[2];
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, info);
  png_destroy_write_struct(&png, &info);
}

/// Reads any PNG as RGB: palette and gray images are expanded, 16-bit
/// channels are reduced, alpha is dropped.
inline RgbImage read_rgb_png(const std::string& path) {
  detail::FilePtr file = detail::open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                           nullptr);
  if (!png) throw std::runtime_error("read_rgb_png: png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("read_rgb_png: png_create_info_struct failed");
  }
  RgbImage out;
  std::vector<std::uint8_t> row;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("read_rgb_png: libpng error reading " + path);
  }
  png_init_io(png, file.get());
  png_read_info(png, info);

  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_set_gray_to_rgb(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  out = RgbImage(static_cast<int>(width), static_cast<int>(height));
  row.resize(static_cast<std::size_t>(width) * 3);
  for (png_uint_32 y = 0; y < height; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (png_uint_32 x = 0; x < width; ++x)
      out.set_pixel(static_cast<int>(x), static_cast<int>(y),
                    {row[x * 3], row[x * 3 + 1], row[x * 3 + 2]});
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

namespace detail {

struct JpegErrorTrap {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
  std::longjmp(static_cast<JpegErrorTrap*>(reinterpret_cast<void*>(cinfo->err))->jump, 1);
}

}  // namespace detail

inline RgbImage read_jpeg(const std::string& path) {
  detail::FilePtr file = detail::open_file(path, "rb");

  jpeg_decompress_struct cinfo;
  detail::JpegErrorTrap trap;
  cinfo.err = jpeg_std_error(&trap.mgr);
  trap.mgr.error_exit = detail::jpeg_error_exit;

  RgbImage out;
  std::vector<std::uint8_t> row;

  if (setjmp(trap.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw std::runtime_error("read_jpeg: libjpeg error reading " + path);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);

  out = RgbImage(static_cast<int>(cinfo.output_width),
                 static_cast<int>(cinfo.output_height));
  row.resize(static_cast<std::size_t>(cinfo.output_width) * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    const int y = static_cast<int>(cinfo.output_scanline);
    JSAMPROW rows[1] = {row.data()};
    jpeg_read_scanlines(&cinfo, rows, 1);
    for (int x = 0; x < out.width(); ++x)
      out.set_pixel(x, y, {row[static_cast<std::size_t>(x) * 3],
                           row[static_cast<std::size_t>(x) * 3 + 1],
                           row[static_cast<std::size_t>(x) * 3 + 2]});
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return out;
}

/// Writes a baseline JPEG. Lossy; intended for previews, not for data that
/// must round-trip exactly (use write_rgb_png for that).
inline void write_jpeg(const RgbImage& image, const std::string& path, int quality = 90) {
  if (image.width() <= 0 || image.height() <= 0)
    throw std::invalid_argument("write_jpeg: empty image");
  if (quality < 1 || quality > 100)
    throw std::invalid_argument("write_jpeg: quality must be in [1, 100]");
  detail::FilePtr file = detail::open_file(path, "wb");

  jpeg_compress_struct cinfo;
  detail::JpegErrorTrap trap;
  cinfo.err = jpeg_std_error(&trap.mgr);
  trap.mgr.error_exit = detail::jpeg_error_exit;

  std::vector<std::uint8_t> row(static_cast<std::size_t>(image.width()) * 3);

  if (setjmp(trap.jump)) {
    jpeg_destroy_compress(&cinfo);
    throw std::runtime_error("write_jpeg: libjpeg error writing " + path);
  }
  jpeg_create_compress(&cinfo);
  jpeg_stdio_dest(&cinfo, file.get());
  cinfo.image_width = static_cast<JDIMENSION>(image.width());
  cinfo.image_height = static_cast<JDIMENSION>(image.height());
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);

  while (cinfo.next_scanline < cinfo.image_height) {
    const int y = static_cast<int>(cinfo.next_scanline);
    for (int x = 0; x < image.width(); ++x) {
      const auto px = image.pixel(x, y);
      row[static_cast<std::size_t>(x) * 3] = px[0];
      row[static_cast<std::size_t>(x) * 3 + 1] = px[1];
      row[static_cast<std::size_t>(x) * 3 + 2] = px[2];
    }
    JSAMPROW rows[1] = {row.data()};
    jpeg_write_scanlines(&cinfo, rows, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
}

}  // namespace pdtrack
