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

// Hand-crafted cell features standing in for a learned image embedding, plus
// the two ways the tracker consumes them: dense correlation of a masked
// template against a whole frame, and pairwise similarity between a template
// and one candidate crop.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pdtrack/image.hpp"
#include "pdtrack/raster.hpp"

namespace pdtrack {

inline constexpr int kFeatureChannels = 12;  // mean RGB + 8 hue bins + gradient

/// Dense cell-feature map of one frame. Cell (cx, cy) covers pixels
/// [cx*stride, min((cx+1)*stride, W)) x [cy*stride, ...); edge cells average
/// over their partial footprint.
class FeatureGrid {
 public:
  FeatureGrid() = default;
  FeatureGrid(int grid_w, int grid_h, int stride, int image_w, int image_h)
      : gw_(grid_w), gh_(grid_h), stride_(stride), image_w_(image_w), image_h_(image_h),
        values_(static_cast<std::size_t>(grid_w) * grid_h * kFeatureChannels, 0.0) {}

  int grid_width() const { return gw_; }
  int grid_height() const { return gh_; }
  int stride() const { return stride_; }
  int image_width() const { return image_w_; }
  int image_height() const { return image_h_; }

  double& at(int cx, int cy, int c) {
    return values_[(static_cast<std::size_t>(cy) * gw_ + cx) * kFeatureChannels + c];
  }
  double at(int cx, int cy, int c) const {
    return values_[(static_cast<std::size_t>(cy) * gw_ + cx) * kFeatureChannels + c];
  }

 private:
  int gw_ = 0, gh_ = 0, stride_ = 0, image_w_ = 0, image_h_ = 0;
  std::vector<double> values_;
};

/// Masked feature crop. Values are zeroed outside the cell mask; the crop
/// remembers which grid cells it came from so correlation peaks can be
/// checked against the source position.
struct TemplateEmbedding {
  int stride = 0;
  int width = 0;   // cells
  int height = 0;  // cells
  int cell_x0 = 0;
  int cell_y0 = 0;
  Box source_box = Box::empty();
  std::vector<double> values;      // width*height*kFeatureChannels
  std::vector<std::uint8_t> cell_mask;  // width*height

  bool degenerate() const {
    for (std::uint8_t m : cell_mask)
      if (m) return false;
    return true;
  }
  double value(int cx, int cy, int c) const {
    return values[(static_cast<std::size_t>(cy) * width + cx) * kFeatureChannels + c];
  }
  bool masked(int cx, int cy) const {
    return cell_mask[static_cast<std::size_t>(cy) * width + cx] != 0;
  }
};

/// Similarity between a template and one candidate crop. mean_cell_score is
/// the average per-cell cosine over the commonly masked cells of the best
/// shift; it is the size-independent variant used in diagnostics.
struct CropScore {
  double score = 0.0;
  double mean_cell_score = 0.0;
  int common_cells = 0;
  bool degenerate = false;
};

namespace detail {

inline double luminance(std::array<std::uint8_t, 3> rgb) {
  return (static_cast<double>(rgb[0]) + rgb[1] + rgb[2]) / 3.0;
}

// Hue bin in [0, 8): 45-degree sectors of the HSV hue circle. Achromatic
// pixels (max == min) land in bin 0.
inline int hue_bin(std::array<std::uint8_t, 3> rgb) {
  const double r = rgb[0], g = rgb[1], b = rgb[2];
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  if (mx == mn) return 0;
  const double d = mx - mn;
  double hue;
  if (mx == r)
    hue = 60.0 * std::fmod((g - b) / d + 6.0, 6.0);
  else if (mx == g)
    hue = 60.0 * ((b - r) / d + 2.0);
  else
    hue = 60.0 * ((r - g) / d + 4.0);
  int bin = static_cast<int>(hue / 45.0);
  return std::clamp(bin, 0, 7);
}

}  // namespace detail

/// Encode a frame into cell features: mean RGB, a normalized 8-bin hue
/// histogram, and mean gradient magnitude (central differences on luminance,
/// borders replicated).
inline FeatureGrid encode(const RgbImage& image, int stride) {
  if (stride < 1) throw std::invalid_argument("encode: stride must be >= 1");
  const int w = image.width();
  const int h = image.height();
  const int gw = (w + stride - 1) / stride;
  const int gh = (h + stride - 1) / stride;
  FeatureGrid grid(gw, gh, stride, w, h);

  std::vector<double> lum(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      lum[static_cast<std::size_t>(y) * w + x] = detail::luminance(image.pixel(x, y));
  auto lum_at = [&](int x, int y) {
    x = std::clamp(x, 0, w - 1);
    y = std::clamp(y, 0, h - 1);
    return lum[static_cast<std::size_t>(y) * w + x];
  };

  for (int cy = 0; cy < gh; ++cy)
    for (int cx = 0; cx < gw; ++cx) {
      const int x0 = cx * stride, x1 = std::min((cx + 1) * stride, w);
      const int y0 = cy * stride, y1 = std::min((cy + 1) * stride, h);
      double sum_r = 0, sum_g = 0, sum_b = 0, sum_grad = 0;
      double hist[8] = {0, 0, 0, 0, 0, 0, 0, 0};
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
          const auto rgb = image.pixel(x, y);
          sum_r += rgb[0];
          sum_g += rgb[1];
          sum_b += rgb[2];
          hist[detail::hue_bin(rgb)] += 1.0;
          const double gx = (lum_at(x + 1, y) - lum_at(x - 1, y)) / 2.0;
          const double gy = (lum_at(x, y + 1) - lum_at(x, y - 1)) / 2.0;
          sum_grad += std::sqrt(gx * gx + gy * gy);
        }
      const double n = static_cast<double>(x1 - x0) * (y1 - y0);
      grid.at(cx, cy, 0) = sum_r / n;
      grid.at(cx, cy, 1) = sum_g / n;
      grid.at(cx, cy, 2) = sum_b / n;
      for (int k = 0; k < 8; ++k) grid.at(cx, cy, 3 + k) = hist[k] / n;
      grid.at(cx, cy, 11) = sum_grad / n;
    }
  return grid;
}

/// Crop the cells intersecting `box` and mark the cells where at least half
/// of the box-interior pixels are foreground in `mask`. Values outside the
/// cell mask are zeroed. An empty mask yields an all-zero degenerate crop.
inline TemplateEmbedding extract_template(const FeatureGrid& grid, const Box& box,
                                          const BinaryMask& mask) {
  if (box.is_empty()) throw std::invalid_argument("extract_template: empty box");
  if (box.x0 < 0 || box.y0 < 0 || box.x1 > grid.image_width() ||
      box.y1 > grid.image_height())
    throw std::invalid_argument("extract_template: box outside the image");
  if (mask.width() != grid.image_width() || mask.height() != grid.image_height())
    throw std::invalid_argument("extract_template: mask/grid dimension mismatch");

  const int stride = grid.stride();
  const int cx0 = box.x0 / stride;
  const int cy0 = box.y0 / stride;
  const int cx1 = (box.x1 - 1) / stride + 1;
  const int cy1 = (box.y1 - 1) / stride + 1;

  TemplateEmbedding tmpl;
  tmpl.stride = stride;
  tmpl.width = cx1 - cx0;
  tmpl.height = cy1 - cy0;
  tmpl.cell_x0 = cx0;
  tmpl.cell_y0 = cy0;
  tmpl.source_box = box;
  tmpl.values.assign(static_cast<std::size_t>(tmpl.width) * tmpl.height * kFeatureChannels,
                     0.0);
  tmpl.cell_mask.assign(static_cast<std::size_t>(tmpl.width) * tmpl.height, 0);

  for (int cy = cy0; cy < cy1; ++cy)
    for (int cx = cx0; cx < cx1; ++cx) {
      const int px0 = std::max(cx * stride, box.x0);
      const int px1 = std::min((cx + 1) * stride, box.x1);
      const int py0 = std::max(cy * stride, box.y0);
      const int py1 = std::min((cy + 1) * stride, box.y1);
      int total = 0, fg = 0;
      for (int y = py0; y < py1; ++y)
        for (int x = px0; x < px1; ++x) {
          ++total;
          if (mask.at(x, y)) ++fg;
        }
      if (total == 0 || fg * 2 < total) continue;
      const std::size_t ci =
          static_cast<std::size_t>(cy - cy0) * tmpl.width + (cx - cx0);
      tmpl.cell_mask[ci] = 1;
      for (int c = 0; c < kFeatureChannels; ++c)
        tmpl.values[ci * kFeatureChannels + c] = grid.at(cx, cy, c);
    }
  return tmpl;
}

/// Correlate a masked template against a frame grid at every valid offset.
/// Scores are cosine similarities over the template's masked cells, so a
/// frame containing the template's content peaks at the source position.
inline Grid<double> heatmap_correlate(const TemplateEmbedding& tmpl,
                                      const FeatureGrid& grid) {
  if (tmpl.stride != grid.stride())
    throw std::invalid_argument("heatmap_correlate: stride mismatch");
  if (tmpl.degenerate())
    throw std::invalid_argument("heatmap_correlate: degenerate template");
  if (tmpl.width > grid.grid_width() || tmpl.height > grid.grid_height())
    throw std::invalid_argument("heatmap_correlate: template larger than grid");

  double tmpl_norm_sq = 0.0;
  for (int cy = 0; cy < tmpl.height; ++cy)
    for (int cx = 0; cx < tmpl.width; ++cx) {
      if (!tmpl.masked(cx, cy)) continue;
      for (int c = 0; c < kFeatureChannels; ++c) {
        const double v = tmpl.value(cx, cy, c);
        tmpl_norm_sq += v * v;
      }
    }
  const double tmpl_norm = std::sqrt(tmpl_norm_sq);

  const int out_w = grid.grid_width() - tmpl.width + 1;
  const int out_h = grid.grid_height() - tmpl.height + 1;
  Grid<double> heat(out_w, out_h, 0.0);
  for (int oy = 0; oy < out_h; ++oy)
    for (int ox = 0; ox < out_w; ++ox) {
      double dot = 0.0, norm_sq = 0.0;
      for (int cy = 0; cy < tmpl.height; ++cy)
        for (int cx = 0; cx < tmpl.width; ++cx) {
          if (!tmpl.masked(cx, cy)) continue;
          for (int c = 0; c < kFeatureChannels; ++c) {
            const double g = grid.at(ox + cx, oy + cy, c);
            dot += tmpl.value(cx, cy, c) * g;
            norm_sq += g * g;
          }
        }
      const double denom = tmpl_norm * std::sqrt(norm_sq);
      heat(ox, oy) = denom > 0.0 ? std::clamp(dot / denom, -1.0, 1.0) : 0.0;
    }
  return heat;
}

namespace detail {

// Bilinear lookup with clamped edges over a cell crop; channel -1 addresses
// the 0/1 cell mask.
struct ResampledCrop {
  int width = 0, height = 0;
  std::vector<double> values;  // width*height*kFeatureChannels
  std::vector<std::uint8_t> mask;

  double value(int cx, int cy, int c) const {
    return values[(static_cast<std::size_t>(cy) * width + cx) * kFeatureChannels + c];
  }
  bool masked(int cx, int cy) const {
    return mask[static_cast<std::size_t>(cy) * width + cx] != 0;
  }
};

inline ResampledCrop resample_to(const TemplateEmbedding& src, int out_w, int out_h) {
  ResampledCrop out;
  out.width = out_w;
  out.height = out_h;
  out.values.assign(static_cast<std::size_t>(out_w) * out_h * kFeatureChannels, 0.0);
  out.mask.assign(static_cast<std::size_t>(out_w) * out_h, 0);

  auto src_value = [&](int cx, int cy, int c) {
    cx = std::clamp(cx, 0, src.width - 1);
    cy = std::clamp(cy, 0, src.height - 1);
    return src.value(cx, cy, c);
  };
  auto src_mask = [&](int cx, int cy) {
    cx = std::clamp(cx, 0, src.width - 1);
    cy = std::clamp(cy, 0, src.height - 1);
    return src.masked(cx, cy) ? 1.0 : 0.0;
  };

  for (int v = 0; v < out_h; ++v)
    for (int u = 0; u < out_w; ++u) {
      const double su = (u + 0.5) * src.width / out_w - 0.5;
      const double sv = (v + 0.5) * src.height / out_h - 0.5;
      const int u0 = static_cast<int>(std::floor(su));
      const int v0 = static_cast<int>(std::floor(sv));
      const double fu = su - u0;
      const double fv = sv - v0;
      const double w00 = (1 - fu) * (1 - fv), w10 = fu * (1 - fv);
      const double w01 = (1 - fu) * fv, w11 = fu * fv;
      const std::size_t oi = static_cast<std::size_t>(v) * out_w + u;
      for (int c = 0; c < kFeatureChannels; ++c)
        out.values[oi * kFeatureChannels + c] =
            w00 * src_value(u0, v0, c) + w10 * src_value(u0 + 1, v0, c) +
            w01 * src_value(u0, v0 + 1, c) + w11 * src_value(u0 + 1, v0 + 1, c);
      const double soft = w00 * src_mask(u0, v0) + w10 * src_mask(u0 + 1, v0) +
                          w01 * src_mask(u0, v0 + 1) + w11 * src_mask(u0 + 1, v0 + 1);
      out.mask[oi] = soft >= 0.5 ? 1 : 0;
    }
  return out;
}

}  // namespace detail

/// Similarity between the template and the crop at (box, mask) in `grid`.
/// The candidate crop is resampled to the template's cell size (its cell mask
/// travels along as a soft weight, re-thresholded at 0.5) and compared by
/// cosine over the cells masked in both, maximized over the center position
/// and its 8 one-cell shifts. No commonly masked cells anywhere -> score 0,
/// flagged degenerate.
inline CropScore crop_similarity(const TemplateEmbedding& tmpl, const FeatureGrid& grid,
                                 const Box& box, const BinaryMask& mask) {
  if (tmpl.stride != grid.stride())
    throw std::invalid_argument("crop_similarity: stride mismatch");
  TemplateEmbedding cand = extract_template(grid, box, mask);
  if (tmpl.degenerate() || cand.degenerate()) return CropScore{0.0, 0.0, 0, true};

  const detail::ResampledCrop re = detail::resample_to(cand, tmpl.width, tmpl.height);

  CropScore best{0.0, 0.0, 0, true};
  for (int sy = -1; sy <= 1; ++sy)
    for (int sx = -1; sx <= 1; ++sx) {
      double dot = 0.0, na = 0.0, nb = 0.0, cell_cos_sum = 0.0;
      int common = 0;
      for (int cy = 0; cy < tmpl.height; ++cy)
        for (int cx = 0; cx < tmpl.width; ++cx) {
          const int qx = cx - sx, qy = cy - sy;
          if (qx < 0 || qy < 0 || qx >= tmpl.width || qy >= tmpl.height) continue;
          if (!tmpl.masked(cx, cy) || !re.masked(qx, qy)) continue;
          ++common;
          double cdot = 0.0, cna = 0.0, cnb = 0.0;
          for (int c = 0; c < kFeatureChannels; ++c) {
            const double a = tmpl.value(cx, cy, c);
            const double b = re.value(qx, qy, c);
            dot += a * b;
            na += a * a;
            nb += b * b;
            cdot += a * b;
            cna += a * a;
            cnb += b * b;
          }
          const double cdenom = std::sqrt(cna) * std::sqrt(cnb);
          cell_cos_sum += cdenom > 0.0 ? cdot / cdenom : 0.0;
        }
      if (common == 0) continue;
      const double denom = std::sqrt(na) * std::sqrt(nb);
      const double score = denom > 0.0 ? std::clamp(dot / denom, -1.0, 1.0) : 0.0;
      if (best.degenerate || score > best.score) {
        best.score = score;
        best.mean_cell_score = cell_cos_sum / common;
        best.common_cells = common;
        best.degenerate = false;
      }
    }
  return best;
}

}  // namespace pdtrack
