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

// Scripted scenes with exact ground truth, and a deterministic segmenter over
// them. The segmenter behaves like an idealized promptable model with two
// deliberate imperfections: masks are clipped to the prompt box plus a small
// slack (so over-tight boxes truncate the object), and predicted IoUs carry
// hash-seeded noise (so scores are plausible rather than exact). Everything
// is a pure function of the script and the query; there is no shared random
// state.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pdtrack/backend.hpp"
#include "pdtrack/image.hpp"
#include "pdtrack/raster.hpp"

namespace pdtrack {

enum class ShapeKind { kRectangle, kEllipse, kConvexPolygon };

struct Keyframe {
  int frame = 0;
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Keyframe&, const Keyframe&) = default;
};

struct ScaleKey {
  int frame = 0;
  double scale = 1.0;
  friend bool operator==(const ScaleKey&, const ScaleKey&) = default;
};

struct SceneObject {
  int id = 1;  // unique, >= 1
  ShapeKind shape = ShapeKind::kRectangle;
  std::array<std::uint8_t, 3> color{255, 255, 255};
  double base_size = 10.0;               // characteristic diameter in pixels
  std::vector<Keyframe> trajectory;      // piecewise linear, sorted by frame
  std::vector<ScaleKey> scale_curve;     // piecewise linear; empty means 1.0
  int depth = 0;                         // higher depth occludes lower
  std::vector<std::pair<int, int>> absent;  // half-open [begin, end) frame ranges
  std::vector<std::array<double, 2>> polygon;  // CCW unit vertices, polygons only

  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

struct SceneScript {
  int width = 0;
  int height = 0;
  int frame_count = 0;
  std::array<std::uint8_t, 3> background{0, 0, 0};
  std::vector<SceneObject> objects;

  friend bool operator==(const SceneScript&, const SceneScript&) = default;
};

namespace detail {

inline double interp_position(const std::vector<Keyframe>& keys, int t, bool y_axis) {
  if (keys.empty()) throw std::invalid_argument("scene object has no trajectory");
  auto value = [&](const Keyframe& k) { return y_axis ? k.y : k.x; };
  if (t <= keys.front().frame) return value(keys.front());
  if (t >= keys.back().frame) return value(keys.back());
  for (std::size_t i = 1; i < keys.size(); ++i)
    if (t <= keys[i].frame) {
      const Keyframe& a = keys[i - 1];
      const Keyframe& b = keys[i];
      const double f = static_cast<double>(t - a.frame) / (b.frame - a.frame);
      return value(a) + f * (value(b) - value(a));
    }
  return value(keys.back());
}

inline double interp_scale(const std::vector<ScaleKey>& keys, int t) {
  if (keys.empty()) return 1.0;
  if (t <= keys.front().frame) return keys.front().scale;
  if (t >= keys.back().frame) return keys.back().scale;
  for (std::size_t i = 1; i < keys.size(); ++i)
    if (t <= keys[i].frame) {
      const ScaleKey& a = keys[i - 1];
      const ScaleKey& b = keys[i];
      const double f = static_cast<double>(t - a.frame) / (b.frame - a.frame);
      return a.scale + f * (b.scale - a.scale);
    }
  return keys.back().scale;
}

}  // namespace detail

inline bool object_visible_at(const SceneObject& obj, int t) {
  for (const auto& [begin, end] : obj.absent)
    if (t >= begin && t < end) return false;
  return true;
}

inline void validate_script(const SceneScript& script) {
  if (script.width < 1 || script.height < 1)
    throw std::invalid_argument("scene script: dimensions must be positive");
  if (script.frame_count < 1)
    throw std::invalid_argument("scene script: frame_count must be >= 1");
  for (std::size_t i = 0; i < script.objects.size(); ++i) {
    const SceneObject& o = script.objects[i];
    if (o.id < 1) throw std::invalid_argument("scene script: object ids must be >= 1");
    if (o.base_size <= 0.0)
      throw std::invalid_argument("scene script: base_size must be positive");
    if (o.trajectory.empty())
      throw std::invalid_argument("scene script: object needs a trajectory");
    if (o.shape == ShapeKind::kConvexPolygon && o.polygon.size() < 3)
      throw std::invalid_argument("scene script: polygon needs >= 3 vertices");
    for (std::size_t j = i + 1; j < script.objects.size(); ++j)
      if (script.objects[j].id == o.id)
        throw std::invalid_argument("scene script: duplicate object id");
  }
}

/// Rasterize frame t: RGB image plus the label map of visible (post
/// occlusion) pixels. Objects draw in ascending (depth, id) order, so higher
/// depth overwrites lower.
inline std::pair<RgbImage, LabelMap> render_frame(const SceneScript& script, int t) {
  validate_script(script);
  if (t < 0 || t >= script.frame_count)
    throw std::invalid_argument("render_frame: frame index out of range");

  RgbImage img(script.width, script.height, script.background);
  LabelMap labels(script.width, script.height, 0);

  std::vector<const SceneObject*> order;
  order.reserve(script.objects.size());
  for (const SceneObject& o : script.objects) order.push_back(&o);
  std::sort(order.begin(), order.end(), [](const SceneObject* a, const SceneObject* b) {
    return a->depth != b->depth ? a->depth < b->depth : a->id < b->id;
  });

  for (const SceneObject* obj : order) {
    if (!object_visible_at(*obj, t)) continue;
    const double cx = detail::interp_position(obj->trajectory, t, false);
    const double cy = detail::interp_position(obj->trajectory, t, true);
    const double size = obj->base_size * detail::interp_scale(obj->scale_curve, t);
    const double half = size / 2.0;

    const int x_lo = std::max(0, static_cast<int>(std::floor(cx - half)) - 1);
    const int x_hi = std::min(script.width - 1, static_cast<int>(std::ceil(cx + half)) + 1);
    const int y_lo = std::max(0, static_cast<int>(std::floor(cy - half)) - 1);
    const int y_hi = std::min(script.height - 1, static_cast<int>(std::ceil(cy + half)) + 1);

    auto covers = [&](int x, int y) -> bool {
      switch (obj->shape) {
        case ShapeKind::kRectangle: {
          const int bx0 = static_cast<int>(std::round(cx - half));
          const int bx1 = static_cast<int>(std::round(cx + half));
          const int by0 = static_cast<int>(std::round(cy - half));
          const int by1 = static_cast<int>(std::round(cy + half));
          return x >= bx0 && x < bx1 && y >= by0 && y < by1;
        }
        case ShapeKind::kEllipse: {
          const double dx = (x - cx) / half;
          const double dy = (y - cy) / half;
          return dx * dx + dy * dy <= 1.0;
        }
        case ShapeKind::kConvexPolygon: {
          // CCW winding, boundary inclusive.
          const std::size_t n = obj->polygon.size();
          for (std::size_t i = 0; i < n; ++i) {
            const double ax = cx + half * obj->polygon[i][0];
            const double ay = cy + half * obj->polygon[i][1];
            const double bx = cx + half * obj->polygon[(i + 1) % n][0];
            const double by = cy + half * obj->polygon[(i + 1) % n][1];
            if ((bx - ax) * (y - ay) - (by - ay) * (x - ax) < 0.0) return false;
          }
          return true;
        }
      }
      return false;
    };

    for (int y = y_lo; y <= y_hi; ++y)
      for (int x = x_lo; x <= x_hi; ++x)
        if (covers(x, y)) {
          img.set_pixel(x, y, obj->color);
          labels.set(x, y, obj->id);
        }
  }
  return {std::move(img), std::move(labels)};
}

struct OracleParams {
  double match_threshold = 0.1;     // min box IoU between prompt and object bbox
  int clip_slack = 2;               // pixels of box expansion before clipping
  double iou_noise_amplitude = 0.05;

  friend bool operator==(const OracleParams&, const OracleParams&) = default;
};

/// Deterministic segmenter over a scene script. Ground truth is the script's
/// visible label map; see the file comment for the imperfection model.
class SyntheticOracleBackend : public SegmentationBackend {
 public:
  explicit SyntheticOracleBackend(SceneScript script, OracleParams params = {})
      : script_(std::move(script)), params_(params) {
    validate_script(script_);
    if (params_.match_threshold < 0.0 || params_.match_threshold > 1.0)
      throw std::invalid_argument("oracle: match_threshold must be in [0, 1]");
    if (params_.clip_slack < 0)
      throw std::invalid_argument("oracle: clip_slack must be >= 0");
    if (params_.iou_noise_amplitude < 0.0)
      throw std::invalid_argument("oracle: iou_noise_amplitude must be >= 0");
    frames_.resize(script_.frame_count);
  }

  bool supports_concurrent_queries() const override { return false; }

  const SceneScript& script() const { return script_; }
  const OracleParams& params() const { return params_; }

  /// Visible ground-truth label map of one frame (for tests and evaluation).
  const LabelMap& ground_truth(int t) { return frame(t).labels; }

 protected:
  FrameHandle do_encode_frame(const RgbImage& image, int frame_index) override {
    if (frame_index >= script_.frame_count)
      throw std::invalid_argument("encode_frame: frame index past the script");
    if (image.width() != script_.width || image.height() != script_.height)
      throw std::invalid_argument("encode_frame: image does not match the script");
    FrameHandle h;
    h.frame_index = frame_index;
    h.width = script_.width;
    h.height = script_.height;
    return h;
  }

  SegmentationResult do_segment_box(const FrameHandle& fh, const Box& box,
                                    const std::vector<Point>& negatives) override {
    const FrameData& fd = frame(fh.frame_index);
    const std::string serial = serialize_box_query(box, negatives);

    int best_id = 0;
    double best_iou = -1.0;
    for (const auto& [id, mask] : fd.visible) {
      bool vetoed = false;
      for (const Point& n : negatives)
        if (mask.at(n.x, n.y)) {
          vetoed = true;
          break;
        }
      if (vetoed) continue;
      const double bi = box_iou(fd.boxes.at(id), box);
      if (bi < params_.match_threshold) continue;
      if (bi > best_iou) {
        best_iou = bi;
        best_id = id;
      }
    }

    SegmentationResult r;
    if (best_id == 0) {
      r.masks.emplace_back(fh.width, fh.height);
      r.iou_predictions.push_back(low_prediction(fh.frame_index, serial, 0));
      return r;
    }

    const BinaryMask& visible = fd.visible.at(best_id);
    const Box clip{box.x0 - params_.clip_slack, box.y0 - params_.clip_slack,
                   box.x1 + params_.clip_slack, box.y1 + params_.clip_slack};
    BinaryMask out(fh.width, fh.height);
    for (int y = std::max(0, clip.y0); y < std::min(fh.height, clip.y1); ++y)
      for (int x = std::max(0, clip.x0); x < std::min(fh.width, clip.x1); ++x)
        if (visible.at(x, y)) out.set(x, y, true);

    const double true_iou = iou(out, visible);
    r.iou_predictions.push_back(
        std::clamp(true_iou + noise_offset(fh.frame_index, serial, 0), 0.0, 1.0));
    r.masks.push_back(std::move(out));
    return r;
  }

  SegmentationResult do_segment_points(const FrameHandle& fh,
                                       const std::vector<Point>& positives,
                                       const std::vector<Point>& negatives) override {
    const FrameData& fd = frame(fh.frame_index);
    const std::string serial = serialize_point_query(positives, negatives);
    const Point p0 = positives.front();

    int id = fd.labels.at(p0.x, p0.y);
    if (id != 0) {
      // Objects holding a negative point are excluded, the anchor included.
      const BinaryMask& mask = fd.visible.at(id);
      for (const Point& n : negatives)
        if (mask.at(n.x, n.y)) {
          id = 0;
          break;
        }
    }

    SegmentationResult r;
    if (id == 0) {
      for (int m = 0; m < 3; ++m) {
        r.masks.emplace_back(fh.width, fh.height);
        r.iou_predictions.push_back(low_prediction(fh.frame_index, serial, m));
      }
      return r;
    }

    const BinaryMask& whole = fd.visible.at(id);
    const Box b = fd.boxes.at(id);
    const int xm = b.x0 + b.width() / 2;
    const int ym = b.y0 + b.height() / 2;

    // Part: the bbox half holding the anchor (upper by default). Subpart:
    // the quadrant holding it. Both always contain p0, so nesting holds.
    const bool upper = p0.y < ym;
    const Box part_box{b.x0, upper ? b.y0 : ym, b.x1, upper ? ym : b.y1};
    const Box sub_box{p0.x < xm ? b.x0 : xm, part_box.y0,
                      p0.x < xm ? xm : b.x1, part_box.y1};

    auto clip_to = [&](const Box& cb) {
      BinaryMask m(fh.width, fh.height);
      for (int y = std::max(0, cb.y0); y < std::min(fh.height, cb.y1); ++y)
        for (int x = std::max(0, cb.x0); x < std::min(fh.width, cb.x1); ++x)
          if (whole.at(x, y)) m.set(x, y, true);
      return m;
    };

    r.masks.push_back(whole);
    r.masks.push_back(clip_to(part_box));
    r.masks.push_back(clip_to(sub_box));
    const double base[3] = {0.9, 0.6, 0.4};
    for (int m = 0; m < 3; ++m)
      r.iou_predictions.push_back(
          std::clamp(base[m] + noise_offset(fh.frame_index, serial, m), 0.0, 1.0));
    return r;
  }

 private:
  struct FrameData {
    bool ready = false;
    LabelMap labels;
    std::map<int, BinaryMask> visible;
    std::map<int, Box> boxes;
  };

  const FrameData& frame(int t) {
    FrameData& fd = frames_.at(static_cast<std::size_t>(t));
    if (!fd.ready) {
      auto [img, labels] = render_frame(script_, t);
      fd.labels = std::move(labels);
      for (auto& [id, mask] : split_label_map(fd.labels)) {
        fd.boxes[id] = bbox(mask);
        fd.visible[id] = std::move(mask);
      }
      fd.ready = true;
    }
    return fd;
  }

  // Hash-seeded offset in [-amplitude, +amplitude], a pure function of the
  // query (frame, prompt, mask slot).
  double noise_offset(int frame_index, const std::string& serial, int mask_index) const {
    const std::string tagged = "F:" + std::to_string(frame_index) + "|" + serial +
                               "|M:" + std::to_string(mask_index);
    const std::uint64_t h = fnv1a64(tagged);
    const double unit = static_cast<double>(h >> 11) * 0x1.0p-53;  // [0, 1)
    return (2.0 * unit - 1.0) * params_.iou_noise_amplitude;
  }

  // No-candidate predictions stay at or below 0.1.
  double low_prediction(int frame_index, const std::string& serial, int mask_index) const {
    return std::clamp(0.05 + noise_offset(frame_index, serial, mask_index), 0.0, 0.1);
  }

  SceneScript script_;
  OracleParams params_;
  std::vector<FrameData> frames_;
};

namespace detail {

inline std::array<std::uint8_t, 3> hsv_color(double hue_deg, double s, double v) {
  const double c = v * s;
  const double hp = hue_deg / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1)
    r = c, g = x;
  else if (hp < 2)
    r = x, g = c;
  else if (hp < 3)
    g = c, b = x;
  else if (hp < 4)
    g = x, b = c;
  else if (hp < 5)
    r = x, b = c;
  else
    r = c, b = x;
  const double m = v - c;
  auto to8 = [&](double q) { return static_cast<std::uint8_t>(std::lround((q + m) * 255.0)); };
  return {to8(r), to8(g), to8(b)};
}

}  // namespace detail

/// Named benchmark scripts with distinct motion regimes. Geometry is fixed
/// (tests rely on it); the seed only varies colors.
inline std::map<std::string, SceneScript> make_benchmark_scripts(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> hue(0.0, 360.0);
  auto color = [&]() { return detail::hsv_color(hue(rng), 0.8, 0.9); };
  const std::array<std::uint8_t, 3> bg{16, 16, 20};

  std::map<std::string, SceneScript> suite;

  {  // One rigid square drifting at most 5% of its side per frame.
    SceneScript s;
    s.width = 320;
    s.height = 240;
    s.frame_count = 60;
    s.background = bg;
    SceneObject o;
    o.id = 1;
    o.shape = ShapeKind::kRectangle;
    o.color = color();
    o.base_size = 80;
    o.trajectory = {{0, 60, 80}, {59, 237, 139}};
    s.objects.push_back(std::move(o));
    suite["slow-rigid"] = std::move(s);
  }

  {  // One square bouncing at 12% of its side per frame.
    SceneScript s;
    s.width = 640;
    s.height = 240;
    s.frame_count = 60;
    s.background = bg;
    SceneObject o;
    o.id = 1;
    o.shape = ShapeKind::kRectangle;
    o.color = color();
    o.base_size = 100;
    o.trajectory = {{0, 90, 120}, {37, 534, 120}, {59, 270, 120}};
    s.objects.push_back(std::move(o));
    suite["fast-shift"] = std::move(s);
  }

  {  // One static disc whose size oscillates by +-8%.
    SceneScript s;
    s.width = 320;
    s.height = 240;
    s.frame_count = 60;
    s.background = bg;
    SceneObject o;
    o.id = 1;
    o.shape = ShapeKind::kEllipse;
    o.color = color();
    o.base_size = 90;
    o.trajectory = {{0, 160, 120}};
    o.scale_curve = {{0, 1.0}, {15, 1.08}, {30, 0.92}, {45, 1.08}, {59, 1.0}};
    s.objects.push_back(std::move(o));
    suite["grow-shrink"] = std::move(s);
  }

  {  // Two objects crossing; the disc passes in front of the square.
    SceneScript s;
    s.width = 320;
    s.height = 240;
    s.frame_count = 60;
    s.background = bg;
    SceneObject a;
    a.id = 1;
    a.shape = ShapeKind::kRectangle;
    a.color = color();
    a.base_size = 70;
    a.depth = 0;
    a.trajectory = {{0, 70, 120}, {59, 250, 120}};
    SceneObject b;
    b.id = 2;
    b.shape = ShapeKind::kEllipse;
    b.color = color();
    b.base_size = 80;
    b.depth = 1;
    b.trajectory = {{0, 250, 120}, {59, 70, 120}};
    s.objects.push_back(std::move(a));
    s.objects.push_back(std::move(b));
    suite["partial-occlusion"] = std::move(s);
  }

  {  // Three same-colored discs on nearby rows.
    SceneScript s;
    s.width = 320;
    s.height = 240;
    s.frame_count = 60;
    s.background = bg;
    const auto shared = color();
    const double rows[3] = {80, 120, 160};
    const double x0[3] = {70, 250, 90};
    const double x1[3] = {250, 70, 230};
    for (int i = 0; i < 3; ++i) {
      SceneObject o;
      o.id = i + 1;
      o.shape = ShapeKind::kEllipse;
      o.color = shared;
      o.base_size = 60;
      o.depth = i;
      o.trajectory = {{0, x0[i], rows[i]}, {59, x1[i], rows[i]}};
      s.objects.push_back(std::move(o));
    }
    suite["multi-similar"] = std::move(s);
  }

  return suite;
}

}  // namespace pdtrack
