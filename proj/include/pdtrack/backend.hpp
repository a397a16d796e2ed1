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

// Promptable segmentation behind an abstract interface. A box prompt yields
// exactly one mask; a point prompt yields exactly three (whole / part /
// subpart granularity), each with a predicted IoU. The base class enforces
// those cardinalities and input validity for every implementation.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdtrack/image.hpp"
#include "pdtrack/raster.hpp"

namespace pdtrack {

/// Opaque reference to an encoded frame. Handles are only valid on the
/// backend instance that produced them.
struct FrameHandle {
  std::uint64_t backend_id = 0;
  int frame_index = -1;
  int width = 0;
  int height = 0;

  bool valid() const { return backend_id != 0; }
};

struct SegmentationResult {
  std::vector<BinaryMask> masks;
  std::vector<double> iou_predictions;  // one per mask, in [0, 1]
};

namespace detail {

inline std::uint64_t next_backend_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}

}  // namespace detail

class SegmentationBackend {
 public:
  SegmentationBackend() : id_(detail::next_backend_id()) {}
  virtual ~SegmentationBackend() = default;
  SegmentationBackend(const SegmentationBackend&) = delete;
  SegmentationBackend& operator=(const SegmentationBackend&) = delete;

  std::uint64_t id() const { return id_; }

  /// Whether queries may be issued from multiple threads at once.
  virtual bool supports_concurrent_queries() const { return false; }

  FrameHandle encode_frame(const RgbImage& image, int frame_index) {
    if (frame_index < 0)
      throw std::invalid_argument("encode_frame: frame index must be >= 0");
    FrameHandle h = do_encode_frame(image, frame_index);
    h.backend_id = id_;
    return h;
  }

  /// One mask for a box prompt, optionally repelled by negative points.
  SegmentationResult segment_box(const FrameHandle& frame, const Box& box,
                                 const std::vector<Point>& negatives = {}) {
    check_handle(frame);
    if (box.is_empty()) throw std::invalid_argument("segment_box: empty box");
    if (box.x0 < 0 || box.y0 < 0 || box.x1 > frame.width || box.y1 > frame.height)
      throw std::invalid_argument("segment_box: box outside the frame");
    check_points(frame, negatives, "segment_box");
    SegmentationResult r = do_segment_box(frame, box, negatives);
    check_result(frame, r, 1, "segment_box");
    return r;
  }

  /// Three granularity hypotheses for a point prompt.
  SegmentationResult segment_points(const FrameHandle& frame,
                                    const std::vector<Point>& positives,
                                    const std::vector<Point>& negatives = {}) {
    check_handle(frame);
    if (positives.empty())
      throw std::invalid_argument("segment_points: at least one positive point");
    check_points(frame, positives, "segment_points");
    check_points(frame, negatives, "segment_points");
    SegmentationResult r = do_segment_points(frame, positives, negatives);
    check_result(frame, r, 3, "segment_points");
    return r;
  }

 protected:
  virtual FrameHandle do_encode_frame(const RgbImage& image, int frame_index) = 0;
  virtual SegmentationResult do_segment_box(const FrameHandle& frame, const Box& box,
                                            const std::vector<Point>& negatives) = 0;
  virtual SegmentationResult do_segment_points(const FrameHandle& frame,
                                               const std::vector<Point>& positives,
                                               const std::vector<Point>& negatives) = 0;

 private:
  void check_handle(const FrameHandle& h) const {
    if (!h.valid() || h.backend_id != id_)
      throw std::invalid_argument("frame handle does not belong to this backend");
  }
  static void check_points(const FrameHandle& frame, const std::vector<Point>& pts,
                           const char* what) {
    for (const Point& p : pts)
      if (p.x < 0 || p.y < 0 || p.x >= frame.width || p.y >= frame.height)
        throw std::invalid_argument(std::string(what) + ": point outside the frame");
  }
  static void check_result(const FrameHandle& frame, const SegmentationResult& r,
                           std::size_t expected, const char* what) {
    if (r.masks.size() != expected || r.iou_predictions.size() != expected)
      throw std::logic_error(std::string(what) + ": backend broke the mask-count contract");
    for (const BinaryMask& m : r.masks)
      if (m.width() != frame.width || m.height() != frame.height)
        throw std::logic_error(std::string(what) + ": mask dimensions differ from frame");
  }

  std::uint64_t id_;
};

/// Canonical text form of a box query; hashed for replay-cache keys and for
/// the synthetic backend's per-query noise.
inline std::string serialize_box_query(const Box& box, const std::vector<Point>& negatives) {
  std::string s = "B:" + std::to_string(box.x0) + "," + std::to_string(box.y0) + "," +
                  std::to_string(box.x1) + "," + std::to_string(box.y1) + "|N:";
  for (std::size_t i = 0; i < negatives.size(); ++i) {
    if (i) s += ";";
    s += std::to_string(negatives[i].x) + "," + std::to_string(negatives[i].y);
  }
  return s;
}

/// Canonical text form of a point query (positives then negatives, in order).
inline std::string serialize_point_query(const std::vector<Point>& positives,
                                         const std::vector<Point>& negatives) {
  std::string s = "P:";
  for (std::size_t i = 0; i < positives.size(); ++i) {
    if (i) s += ";";
    s += std::to_string(positives[i].x) + "," + std::to_string(positives[i].y);
  }
  s += "|N:";
  for (std::size_t i = 0; i < negatives.size(); ++i) {
    if (i) s += ";";
    s += std::to_string(negatives[i].x) + "," + std::to_string(negatives[i].y);
  }
  return s;
}

/// FNV-1a over the canonical serialization, as a fixed-width lowercase hex key.
inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string query_key(const std::string& serialized) {
  static const char* hex = "0123456789abcdef";
  std::uint64_t h = fnv1a64(serialized);
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = hex[h & 0xf];
    h >>= 4;
  }
  return out;
}

struct GeneratedMask {
  BinaryMask mask;
  double score = 0.0;
};

/// Automatic mask generation: probe an even point lattice with single-point
/// queries, pool every returned mask with its predicted IoU as score, then
/// greedy-NMS (IoU >= nms_iou suppresses, higher score kept, score ties kept
/// in generation order) and truncate to max_masks.
inline std::vector<GeneratedMask> auto_generate(SegmentationBackend& backend,
                                                const FrameHandle& frame,
                                                int grid_points_per_side, int max_masks,
                                                double nms_iou) {
  if (grid_points_per_side < 1)
    throw std::invalid_argument("auto_generate: grid_points_per_side must be >= 1");
  if (max_masks < 0) throw std::invalid_argument("auto_generate: max_masks must be >= 0");
  if (nms_iou < 0.0 || nms_iou > 1.0)
    throw std::invalid_argument("auto_generate: nms_iou must be in [0, 1]");

  struct Pooled {
    BinaryMask mask;
    double score;
    Box box;
  };
  std::vector<Pooled> pool;
  const int n = grid_points_per_side;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const Point p{static_cast<int>((i + 0.5) * frame.width / n),
                    static_cast<int>((j + 0.5) * frame.height / n)};
      SegmentationResult r = backend.segment_points(frame, {p});
      for (std::size_t m = 0; m < r.masks.size(); ++m) {
        if (r.masks[m].empty()) continue;
        Box b = bbox(r.masks[m]);
        pool.push_back(Pooled{std::move(r.masks[m]), r.iou_predictions[m], b});
      }
    }

  std::stable_sort(pool.begin(), pool.end(),
                   [](const Pooled& a, const Pooled& b) { return a.score > b.score; });

  std::vector<GeneratedMask> kept;
  std::vector<Box> kept_boxes;
  for (Pooled& cand : pool) {
    if (static_cast<int>(kept.size()) >= max_masks) break;
    bool suppressed = false;
    for (std::size_t k = 0; k < kept.size() && !suppressed; ++k) {
      if (box_iou(kept_boxes[k], cand.box) == 0.0) continue;  // disjoint, IoU 0
      if (iou(kept[k].mask, cand.mask) >= nms_iou) suppressed = true;
    }
    if (!suppressed) {
      kept_boxes.push_back(cand.box);
      kept.push_back(GeneratedMask{std::move(cand.mask), cand.score});
    }
  }
  return kept;
}

}  // namespace pdtrack
