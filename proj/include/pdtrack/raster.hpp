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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pdtrack {

/// Integer pixel position. Coordinates address pixel centers.
struct Point {
  int x = 0;
  int y = 0;
  friend constexpr bool operator==(const Point&, const Point&) = default;
};

namespace detail {

inline std::size_t checked_cell_count(int width, int height, const char* what) {
  if (width < 1 || height < 1)
    throw std::invalid_argument(std::string(what) + ": dimensions must be at least 1x1");
  return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
}

}  // namespace detail

/// Row-major 2-D grid of values. Accessors are unchecked; callers stay in bounds.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width),
        height_(height),
        cells_(detail::checked_cell_count(width, height, "Grid"), fill) {}

  int width() const { return width_; }
  int height() const { return height_; }

  T& operator()(int x, int y) { return cells_[static_cast<std::size_t>(y) * width_ + x]; }
  const T& operator()(int x, int y) const {
    return cells_[static_cast<std::size_t>(y) * width_ + x];
  }

  std::vector<T>& cells() { return cells_; }
  const std::vector<T>& cells() const { return cells_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> cells_;
};

/// Dense binary raster, row-major, one byte per pixel.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int width, int height, bool fill = false)
      : width_(width),
        height_(height),
        bits_(detail::checked_cell_count(width, height, "BinaryMask"), fill ? 1 : 0) {}

  int width() const { return width_; }
  int height() const { return height_; }

  bool at(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int x, int y, bool value) {
    bits_[static_cast<std::size_t>(y) * width_ + x] = value ? 1 : 0;
  }

  bool in_bounds(int x, int y) const { return x >= 0 && x < width_ && y >= 0 && y < height_; }

  long long area() const {
    long long n = 0;
    for (unsigned char b : bits_) n += b;
    return n;
  }

  bool empty() const {
    for (unsigned char b : bits_)
      if (b) return false;
    return true;
  }

  const std::vector<std::uint8_t>& bits() const { return bits_; }
  std::vector<std::uint8_t>& bits() { return bits_; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Half-open axis-aligned box: pixels with x0 <= x < x1 and y0 <= y < y1.
/// Any box with x0 >= x1 or y0 >= y1 is empty; Box::empty() is the canonical
/// empty value and functions here return it rather than other degenerate forms.
struct Box {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  static constexpr Box empty() { return Box{0, 0, 0, 0}; }

  constexpr bool is_empty() const { return x0 >= x1 || y0 >= y1; }
  constexpr int width() const { return is_empty() ? 0 : x1 - x0; }
  constexpr int height() const { return is_empty() ? 0 : y1 - y0; }
  constexpr long long area() const {
    return is_empty() ? 0 : static_cast<long long>(x1 - x0) * (y1 - y0);
  }
  constexpr bool contains(Point p) const {
    return p.x >= x0 && p.x < x1 && p.y >= y0 && p.y < y1;
  }

  friend constexpr bool operator==(const Box&, const Box&) = default;
};

/// Integer label raster; 0 is background, positive values are object ids.
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(int width, int height, int fill = 0)
      : width_(width),
        height_(height),
        labels_(detail::checked_cell_count(width, height, "LabelMap"), fill) {}

  int width() const { return width_; }
  int height() const { return height_; }

  int at(int x, int y) const { return labels_[static_cast<std::size_t>(y) * width_ + x]; }
  void set(int x, int y, int id) { labels_[static_cast<std::size_t>(y) * width_ + x] = id; }

  const std::vector<int>& labels() const { return labels_; }
  std::vector<int>& labels() { return labels_; }

  /// Distinct nonzero ids, ascending.
  std::vector<int> ids() const {
    std::vector<int> out(labels_.begin(), labels_.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    if (!out.empty() && out.front() == 0) out.erase(out.begin());
    return out;
  }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<int> labels_;
};

/// Binary mask of the cells labeled `id`.
inline BinaryMask mask_of(const LabelMap& labels, int id) {
  BinaryMask out(labels.width(), labels.height(), false);
  for (int y = 0; y < labels.height(); ++y)
    for (int x = 0; x < labels.width(); ++x)
      if (labels.at(x, y) == id) out.set(x, y, true);
  return out;
}

namespace detail {

inline void require_same_dims(const BinaryMask& a, const BinaryMask& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height())
    throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

inline constexpr std::int64_t kDistInf = std::int64_t{1} << 60;

// 1-D squared-distance lower envelope (Felzenszwalb-Huttenlocher). Values in
// f are exact integers, so the final distances computed at integer sample
// points are exact; doubles are used only to place envelope boundaries.
inline void edt_pass(const std::int64_t* f, std::int64_t* d, int n, int* v, double* z) {
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < n; ++q) {
    double fq = static_cast<double>(f[q]) + static_cast<double>(q) * q;
    double s;
    for (;;) {
      int p = v[k];
      double fp = static_cast<double>(f[p]) + static_cast<double>(p) * p;
      s = (fq - fp) / (2.0 * (q - p));
      if (s > z[k]) break;
      --k;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    std::int64_t dx = q - v[k];
    std::int64_t base = f[v[k]];
    d[q] = base >= kDistInf ? kDistInf : dx * dx + base;
  }
}

// Exact squared Euclidean distance from every cell to the nearest source
// cell. Sources are given as a 0/1 grid that may be padded; callers crop.
inline Grid<std::int64_t> squared_edt(Grid<std::int64_t>&& field) {
  const int w = field.width();
  const int h = field.height();
  const int n = std::max(w, h);
  std::vector<std::int64_t> f(n), d(n);
  std::vector<int> v(n);
  std::vector<double> z(n + 1);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[y] = field(x, y);
    edt_pass(f.data(), d.data(), h, v.data(), z.data());
    for (int y = 0; y < h; ++y) field(x, y) = d[y];
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f[x] = field(x, y);
    edt_pass(f.data(), d.data(), w, v.data(), z.data());
    for (int x = 0; x < w; ++x) field(x, y) = d[x];
  }
  return std::move(field);
}

}  // namespace detail

/// Tight bounding box of the true pixels; Box::empty() for an all-false mask.
inline Box bbox(const BinaryMask& mask) {
  int minx = mask.width(), miny = mask.height(), maxx = -1, maxy = -1;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (mask.at(x, y)) {
        minx = std::min(minx, x);
        miny = std::min(miny, y);
        maxx = std::max(maxx, x);
        maxy = std::max(maxy, y);
      }
  if (maxx < 0) return Box::empty();
  return Box{minx, miny, maxx + 1, maxy + 1};
}

/// Intersection-over-union of two same-sized masks. Both empty -> 1.0.
inline double iou(const BinaryMask& a, const BinaryMask& b) {
  detail::require_same_dims(a, b, "iou");
  long long inter = 0, uni = 0;
  const auto& ab = a.bits();
  const auto& bb = b.bits();
  for (std::size_t i = 0; i < ab.size(); ++i) {
    inter += ab[i] & bb[i];
    uni += ab[i] | bb[i];
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

/// Intersection-over-union of two boxes. Both empty -> 1.0; one empty -> 0.0;
/// boxes that only share an edge have zero intersection area.
inline double box_iou(const Box& a, const Box& b) {
  if (a.is_empty() && b.is_empty()) return 1.0;
  if (a.is_empty() || b.is_empty()) return 0.0;
  const long long ix0 = std::max(a.x0, b.x0);
  const long long iy0 = std::max(a.y0, b.y0);
  const long long ix1 = std::min(a.x1, b.x1);
  const long long iy1 = std::min(a.y1, b.y1);
  const long long inter =
      std::max<long long>(0, ix1 - ix0) * std::max<long long>(0, iy1 - iy0);
  const long long uni = a.area() + b.area() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

/// Exact squared Euclidean distance from every pixel to the nearest background
/// pixel. The image border counts as background: a foreground pixel on the
/// image edge is 1 px away from the (virtual) background ring just outside.
/// Background pixels map to 0.
inline Grid<std::int64_t> squared_distance_to_background(const BinaryMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  Grid<std::int64_t> padded(w + 2, h + 2, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      padded(x + 1, y + 1) = mask.at(x, y) ? detail::kDistInf : 0;
  Grid<std::int64_t> dist = detail::squared_edt(std::move(padded));
  Grid<std::int64_t> out(w, h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out(x, y) = dist(x + 1, y + 1);
  return out;
}

/// Exact Euclidean distance-to-background field (see
/// squared_distance_to_background for the border convention).
inline Grid<double> distance_transform(const BinaryMask& mask) {
  Grid<std::int64_t> sq = squared_distance_to_background(mask);
  Grid<double> out(mask.width(), mask.height(), 0.0);
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      out(x, y) = std::sqrt(static_cast<double>(sq(x, y)));
  return out;
}

/// Foreground pixel farthest from the background (deepest interior point).
/// Ties resolve to the smallest row-major index. Throws on an empty mask.
inline Point farthest_interior_point(const BinaryMask& mask) {
  if (mask.empty())
    throw std::invalid_argument("farthest_interior_point: mask has no foreground");
  Grid<std::int64_t> sq = squared_distance_to_background(mask);
  Point best{0, 0};
  std::int64_t best_d = -1;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (sq(x, y) > best_d) {
        best_d = sq(x, y);
        best = Point{x, y};
      }
  return best;
}

/// Foreground pixels with at least one background 4-neighbour; neighbours
/// outside the image count as background.
inline BinaryMask boundary_pixels(const BinaryMask& mask) {
  BinaryMask out(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(x, y)) continue;
      const bool edge = x == 0 || y == 0 || x == mask.width() - 1 || y == mask.height() - 1;
      if (edge || !mask.at(x - 1, y) || !mask.at(x + 1, y) || !mask.at(x, y - 1) ||
          !mask.at(x, y + 1))
        out.set(x, y, true);
    }
  return out;
}

/// Morphological dilation by a Euclidean disk: every pixel within `radius`
/// (pixel-center distance) of a true pixel becomes true. radius 0 is identity.
inline BinaryMask dilate(const BinaryMask& mask, double radius) {
  if (radius < 0.0) throw std::invalid_argument("dilate: radius must be nonnegative");
  if (mask.empty()) return mask;
  const int w = mask.width();
  const int h = mask.height();
  Grid<std::int64_t> field(w, h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) field(x, y) = mask.at(x, y) ? 0 : detail::kDistInf;
  Grid<std::int64_t> dist = detail::squared_edt(std::move(field));
  BinaryMask out(w, h);
  const double r2 = radius * radius;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (static_cast<double>(dist(x, y)) <= r2) out.set(x, y, true);
  return out;
}

/// Per-id binary masks of a label map, ascending by id. Background-only maps
/// yield an empty list.
inline std::vector<std::pair<int, BinaryMask>> split_label_map(const LabelMap& labels) {
  std::vector<int> ids = labels.ids();
  std::vector<std::pair<int, BinaryMask>> out;
  out.reserve(ids.size());
  for (int id : ids) out.emplace_back(id, BinaryMask(labels.width(), labels.height()));
  for (int y = 0; y < labels.height(); ++y)
    for (int x = 0; x < labels.width(); ++x) {
      const int id = labels.at(x, y);
      if (id == 0) continue;
      const auto it = std::lower_bound(
          ids.begin(), ids.end(), id);
      out[static_cast<std::size_t>(it - ids.begin())].second.set(x, y, true);
    }
  return out;
}

/// Flatten possibly overlapping per-id masks into one label map. A pixel
/// claimed by several masks goes to the highest score; score ties go to the
/// lower id. Requires same-sized masks, distinct ids >= 1, one score each.
inline LabelMap merge_masks(const std::vector<std::pair<int, BinaryMask>>& masks,
                            const std::vector<double>& scores) {
  if (masks.empty()) throw std::invalid_argument("merge_masks: no masks given");
  if (scores.size() != masks.size())
    throw std::invalid_argument("merge_masks: one score per mask required");
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (masks[i].first < 1) throw std::invalid_argument("merge_masks: ids must be >= 1");
    detail::require_same_dims(masks[0].second, masks[i].second, "merge_masks");
    for (std::size_t j = i + 1; j < masks.size(); ++j)
      if (masks[i].first == masks[j].first)
        throw std::invalid_argument("merge_masks: duplicate ids");
  }
  const int w = masks[0].second.width();
  const int h = masks[0].second.height();
  LabelMap out(w, h, 0);
  Grid<double> best_score(w, h, 0.0);
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const int id = masks[i].first;
    const BinaryMask& mask = masks[i].second;
    const double score = scores[i];
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (!mask.at(x, y)) continue;
        const int cur = out.at(x, y);
        if (cur == 0 || score > best_score(x, y) ||
            (score == best_score(x, y) && id < cur)) {
          out.set(x, y, id);
          best_score(x, y) = score;
        }
      }
  }
  return out;
}

}  // namespace pdtrack
