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

#include <cmath>
#include <stdexcept>
#include <vector>

#include "pdtrack/raster.hpp"

namespace pdtrack {

/// A box denoising hypothesis: translate by (tx * width, ty * height), then
/// scale by `scale` about the translated center.
struct Perturbation {
  double tx = 0.0;
  double ty = 0.0;
  double scale = 1.0;
};

/// One propagated box plus the jittered instances derived from it.
struct BoxPromptGroup {
  Box origin;                // the unjittered propagated box
  std::vector<Box> members;  // scale-major, then row-major grid offsets
};

/// Intersect with the image rectangle [0, width) x [0, height).
inline Box clamp_box(const Box& b, int width, int height) {
  if (b.is_empty()) return Box::empty();
  Box out{std::max(b.x0, 0), std::max(b.y0, 0), std::min(b.x1, width),
          std::min(b.y1, height)};
  if (out.is_empty()) return Box::empty();
  return out;
}

/// Apply a perturbation to a box. Corners are computed in floating point and
/// rounded half away from zero, then the result is clamped to the image.
inline Box perturb_box(const Box& b, const Perturbation& p, int width, int height) {
  if (b.is_empty()) throw std::invalid_argument("perturb_box: empty box");
  if (p.scale <= 0.0) throw std::invalid_argument("perturb_box: scale must be positive");
  const double w = b.x1 - b.x0;
  const double h = b.y1 - b.y0;
  const double dx = p.tx * w;
  const double dy = p.ty * h;
  const double cx = (b.x0 + b.x1) / 2.0 + dx;
  const double cy = (b.y0 + b.y1) / 2.0 + dy;
  const double x0 = cx + p.scale * (b.x0 + dx - cx);
  const double x1 = cx + p.scale * (b.x1 + dx - cx);
  const double y0 = cy + p.scale * (b.y0 + dy - cy);
  const double y1 = cy + p.scale * (b.y1 + dy - cy);
  const Box scaled{static_cast<int>(std::round(x0)), static_cast<int>(std::round(y0)),
                   static_cast<int>(std::round(x1)), static_cast<int>(std::round(y1))};
  return clamp_box(scaled, width, height);
}

/// Jittered prompt group around `origin`: a grid_n x grid_n lattice of
/// translations in steps of step_frac * side, each instantiated at every
/// scale. Member order is scale-major (scales in the given order), then
/// row-major over grid offsets. Every member is clamped to the image;
/// members that clamp away entirely stay in the list as empty boxes so the
/// group size is always grid_n^2 * |scales|.
inline BoxPromptGroup jitter_grid(const Box& origin, int grid_n, double step_frac,
                                  const std::vector<double>& scales, int width,
                                  int height) {
  if (origin.is_empty()) throw std::invalid_argument("jitter_grid: empty origin box");
  if (grid_n < 1 || grid_n % 2 == 0)
    throw std::invalid_argument("jitter_grid: grid_n must be odd and >= 1");
  if (step_frac < 0.0) throw std::invalid_argument("jitter_grid: step_frac must be >= 0");
  if (scales.empty()) throw std::invalid_argument("jitter_grid: scales must be nonempty");
  for (double s : scales)
    if (s <= 0.0) throw std::invalid_argument("jitter_grid: scales must be positive");

  BoxPromptGroup group;
  group.origin = origin;
  group.members.reserve(static_cast<std::size_t>(grid_n) * grid_n * scales.size());
  const int k = (grid_n - 1) / 2;
  for (double s : scales)
    for (int j = -k; j <= k; ++j)
      for (int i = -k; i <= k; ++i)
        group.members.push_back(
            perturb_box(origin, Perturbation{i * step_frac, j * step_frac, s}, width,
                        height));
  return group;
}

}  // namespace pdtrack
