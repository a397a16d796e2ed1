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

// Slow reference implementations used only by the test suite. Each oracle is
// written from the operation's definition, with none of the library's
// shortcuts, so agreement is meaningful.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "pdtrack/raster.hpp"

namespace oracles {

// Nearest-background search by full enumeration. The image border counts as
// background: for pixel (x, y) the nearest virtual background pixel outside
// the image is min(x + 1, w - x, y + 1, h - y) away.
inline pdtrack::Grid<std::int64_t> brute_squared_dt(const pdtrack::BinaryMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  pdtrack::Grid<std::int64_t> out(w, h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y)) continue;
      std::int64_t ring = std::min(std::min(x + 1, w - x), std::min(y + 1, h - y));
      std::int64_t best = ring * ring;
      for (int by = 0; by < h; ++by)
        for (int bx = 0; bx < w; ++bx) {
          if (mask.at(bx, by)) continue;
          std::int64_t dx = x - bx, dy = y - by;
          best = std::min(best, dx * dx + dy * dy);
        }
      out(x, y) = best;
    }
  return out;
}

// Row-major argmax over the brute-force field (first maximum wins).
inline pdtrack::Point brute_farthest_point(const pdtrack::BinaryMask& mask) {
  pdtrack::Grid<std::int64_t> dt = brute_squared_dt(mask);
  pdtrack::Point best{0, 0};
  std::int64_t best_d = -1;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (mask.at(x, y) && dt(x, y) > best_d) {
        best_d = dt(x, y);
        best = pdtrack::Point{x, y};
      }
  return best;
}

// Pixel-counting IoU, no shared code with the library implementation.
inline double counting_iou(const pdtrack::BinaryMask& a, const pdtrack::BinaryMask& b) {
  long long inter = 0, uni = 0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      const bool pa = a.at(x, y), pb = b.at(x, y);
      if (pa && pb) ++inter;
      if (pa || pb) ++uni;
    }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Random blobby mask: a few filled rectangles and discs plus salt noise.
inline pdtrack::BinaryMask random_mask(std::mt19937_64& rng, int w, int h) {
  pdtrack::BinaryMask mask(w, h);
  std::uniform_int_distribution<int> shape_count(0, 4);
  std::uniform_int_distribution<int> px(0, w - 1), py(0, h - 1);
  std::uniform_int_distribution<int> extent(1, std::max(2, w / 3));
  const int shapes = shape_count(rng);
  for (int s = 0; s < shapes; ++s) {
    const bool disc = (rng() & 1) != 0;
    const int cx = px(rng), cy = py(rng), r = extent(rng);
    for (int y = std::max(0, cy - r); y < std::min(h, cy + r + 1); ++y)
      for (int x = std::max(0, cx - r); x < std::min(w, cx + r + 1); ++x) {
        if (disc) {
          const long long dx = x - cx, dy = y - cy;
          if (dx * dx + dy * dy <= static_cast<long long>(r) * r) mask.set(x, y, true);
        } else {
          mask.set(x, y, true);
        }
      }
  }
  std::uniform_int_distribution<int> salt(0, 19);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (salt(rng) == 0) mask.set(x, y, !mask.at(x, y));
  return mask;
}

}  // namespace oracles
