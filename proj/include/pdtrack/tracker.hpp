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

// Multi-object mask tracking by iterative prompt denoising. Each frame, every
// tracked object's previous box spawns a grid of jittered box prompts; the
// segmenter answers each; the best candidate is chosen either by semantic
// similarity to a frozen first-frame template or by overlap with the previous
// mask. A point-refinement pass then re-queries with the mask's most interior
// pixel (other objects' interior pixels as negatives) and keeps the best of
// the three granularity hypotheses. Overlaps resolve by predicted quality,
// and per-object score trails are recorded for diagnostics.
//
// Loss policy: an object whose every candidate comes back empty keeps its
// last box as the next frame's prompt, emits empty masks, contributes no
// negative points, and re-acquires as soon as a candidate matches again.

#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pdtrack/backend.hpp"
#include "pdtrack/features.hpp"
#include "pdtrack/image.hpp"
#include "pdtrack/prompts.hpp"
#include "pdtrack/raster.hpp"

namespace pdtrack {

enum class SelectionMode { kSemantic, kIouPrev };
enum class RefineMode { kMaxArea, kMaxIouPrev };

struct TrackerConfig {
  int grid_n = 3;                      // jitter grid side (odd)
  double step_frac = 0.10;             // jitter step, fraction of box size
  std::vector<double> scales{1.0, 1.05};
  SelectionMode selection_mode = SelectionMode::kSemantic;
  RefineMode refine_mode = RefineMode::kMaxArea;
  bool use_neg_in_multiprompt = true;
  bool use_neg_in_refine = true;
  bool enable_multiprompt = true;
  bool enable_refine = true;
  int feature_stride = 16;
  int vis_grid_points = 32;            // automatic-init probe lattice side
  int vis_max_masks = 100;             // automatic-init trajectory cap
  double vis_nms_iou = 0.7;

  friend bool operator==(const TrackerConfig&, const TrackerConfig&) = default;
};

inline void validate_config(const TrackerConfig& c) {
  if (c.grid_n < 1 || c.grid_n % 2 == 0)
    throw std::invalid_argument("tracker config: grid_n must be odd and >= 1");
  if (c.step_frac < 0.0)
    throw std::invalid_argument("tracker config: step_frac must be >= 0");
  if (c.scales.empty())
    throw std::invalid_argument("tracker config: scales must be non-empty");
  for (double s : c.scales)
    if (s <= 0.0) throw std::invalid_argument("tracker config: scales must be positive");
  if (c.feature_stride < 1)
    throw std::invalid_argument("tracker config: feature_stride must be >= 1");
  if (c.vis_grid_points < 1)
    throw std::invalid_argument("tracker config: vis_grid_points must be >= 1");
  if (c.vis_max_masks < 0)
    throw std::invalid_argument("tracker config: vis_max_masks must be >= 0");
  if (c.vis_nms_iou < 0.0 || c.vis_nms_iou > 1.0)
    throw std::invalid_argument("tracker config: vis_nms_iou must be in [0, 1]");
}

enum class ObjectStatus { kPending, kActive, kLost };

/// Scores recorded for one object on one frame: the winning candidate's
/// template similarity, its mean per-cell similarity, and the segmenter's
/// predicted IoU for the emitted mask. Zero when no query produced a mask.
struct ObjectDiagnostics {
  double semantic_score = 0.0;
  double area_normalized_score = 0.0;
  double iou_prediction = 0.0;

  friend bool operator==(const ObjectDiagnostics&, const ObjectDiagnostics&) = default;
};

struct TrackedObject {
  int id = 0;
  ObjectStatus status = ObjectStatus::kPending;
  int first_frame = 0;
  BinaryMask pending_mask;  // the provided mask, consumed on activation
  BinaryMask last_mask;
  Box last_box = Box::empty();
  TemplateEmbedding templ;  // frozen at activation, never updated
};

struct TrackerState {
  std::vector<TrackedObject> objects;  // ascending id
  int width = 0;
  int height = 0;
  int last_frame_index = 0;
};

struct FrameOutput {
  int frame_index = 0;
  LabelMap label_map;
  std::map<int, BinaryMask> masks;  // one entry per object, possibly empty
  std::map<int, ObjectDiagnostics> diagnostics;
};

struct InitObject {
  int id = 0;
  BinaryMask mask;
  int first_frame = 0;
};

/// Pixel ownership for overlapping masks: each contested pixel goes to the
/// mask with the higher score, ties to the lower id. No masks: background.
inline LabelMap resolve_overlaps(const std::vector<std::pair<int, BinaryMask>>& masks,
                                 const std::vector<double>& iou_predictions,
                                 int width, int height) {
  if (masks.empty()) return LabelMap(width, height, 0);
  return merge_masks(masks, iou_predictions);
}

namespace detail {

inline void activate_object(TrackedObject& obj, const FeatureGrid& grid,
                            BinaryMask mask) {
  const Box box = bbox(mask);
  obj.templ = extract_template(grid, box, mask);
  obj.last_mask = std::move(mask);
  obj.last_box = box;
  obj.status = ObjectStatus::kActive;
  obj.pending_mask = BinaryMask();
}

}  // namespace detail

/// Starts tracking from user-provided masks. Objects whose first frame is
/// later stay pending and activate, mask emitted verbatim, when stepping
/// reaches that frame.
inline TrackerState init_from_masks(const RgbImage& first_frame,
                                    const std::vector<InitObject>& objects,
                                    const TrackerConfig& config) {
  validate_config(config);
  TrackerState state;
  state.width = first_frame.width();
  state.height = first_frame.height();

  const FeatureGrid grid = encode(first_frame, config.feature_stride);
  for (const InitObject& init : objects) {
    if (init.id < 1)
      throw std::invalid_argument("init_from_masks: object ids must be >= 1");
    for (const TrackedObject& existing : state.objects)
      if (existing.id == init.id)
        throw std::invalid_argument("init_from_masks: duplicate object id " +
                                    std::to_string(init.id));
    if (init.mask.empty())
      throw std::invalid_argument("init_from_masks: empty initial mask for object " +
                                  std::to_string(init.id));
    if (init.mask.width() != state.width || init.mask.height() != state.height)
      throw std::invalid_argument("init_from_masks: mask dimensions for object " +
                                  std::to_string(init.id) + " do not match the frame");
    if (init.first_frame < 0)
      throw std::invalid_argument("init_from_masks: negative first frame for object " +
                                  std::to_string(init.id));

    TrackedObject obj;
    obj.id = init.id;
    obj.first_frame = init.first_frame;
    if (init.first_frame == 0) {
      detail::activate_object(obj, grid, init.mask);
    } else {
      obj.status = ObjectStatus::kPending;
      obj.pending_mask = init.mask;
    }
    state.objects.push_back(std::move(obj));
  }
  std::sort(state.objects.begin(), state.objects.end(),
            [](const TrackedObject& a, const TrackedObject& b) { return a.id < b.id; });
  return state;
}

/// Starts tracking from automatically generated first-frame masks: the
/// survivors of lattice probing plus non-maximum suppression become objects
/// 1..K in score order. No new trajectories are spawned afterwards.
inline TrackerState init_automatic(const RgbImage& first_frame,
                                   SegmentationBackend& backend,
                                   const TrackerConfig& config) {
  validate_config(config);
  TrackerState state;
  state.width = first_frame.width();
  state.height = first_frame.height();

  const FrameHandle fh = backend.encode_frame(first_frame, 0);
  std::vector<GeneratedMask> generated =
      auto_generate(backend, fh, config.vis_grid_points, config.vis_max_masks,
                    config.vis_nms_iou);
  const FeatureGrid grid = encode(first_frame, config.feature_stride);
  for (std::size_t i = 0; i < generated.size(); ++i) {
    TrackedObject obj;
    obj.id = static_cast<int>(i) + 1;
    obj.first_frame = 0;
    detail::activate_object(obj, grid, std::move(generated[i].mask));
    state.objects.push_back(std::move(obj));
  }
  return state;
}

/// The frame-0 output: activated objects' masks verbatim, everyone else empty.
inline FrameOutput initial_output(const TrackerState& state) {
  FrameOutput out;
  out.frame_index = 0;
  std::vector<std::pair<int, BinaryMask>> masks;
  std::vector<double> scores;
  for (const TrackedObject& obj : state.objects) {
    BinaryMask m = obj.status == ObjectStatus::kActive
                       ? obj.last_mask
                       : BinaryMask(state.width, state.height);
    out.masks.emplace(obj.id, m);
    out.diagnostics.emplace(obj.id, ObjectDiagnostics{});
    masks.emplace_back(obj.id, std::move(m));
    scores.push_back(0.0);
  }
  out.label_map = resolve_overlaps(masks, scores, state.width, state.height);
  return out;
}

/// Advances tracking to `frame_index`. Stages per tracked object: (A) box
/// prompts jittered from the previous box, (B) candidate selection, (C) point
/// refinement, (D) loss handling, overlap resolution, and state update.
inline FrameOutput track_step(TrackerState& state, const RgbImage& frame,
                              int frame_index, SegmentationBackend& backend,
                              const TrackerConfig& config) {
  validate_config(config);
  if (frame_index <= state.last_frame_index)
    throw std::invalid_argument("track_step: frame indices must strictly increase");
  if (frame.width() != state.width || frame.height() != state.height)
    throw std::invalid_argument("track_step: frame dimensions changed mid-sequence");

  const FrameHandle fh = backend.encode_frame(frame, frame_index);
  const FeatureGrid grid = encode(frame, config.feature_stride);
  const std::size_t n = state.objects.size();

  // Pending objects whose frame has arrived emit their provided mask
  // verbatim this frame and join tracking from the next one.
  std::vector<bool> just_activated(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    TrackedObject& obj = state.objects[i];
    if (obj.status == ObjectStatus::kPending && frame_index >= obj.first_frame) {
      detail::activate_object(obj, grid, std::move(obj.pending_mask));
      just_activated[i] = true;
    }
  }

  // Frame-start snapshot: negative points come from the previous frame's
  // masks, so later objects must not see earlier objects' current results.
  std::vector<bool> has_neg(n, false);
  std::vector<Point> neg_point(n);
  for (std::size_t i = 0; i < n; ++i) {
    const TrackedObject& obj = state.objects[i];
    if (obj.status == ObjectStatus::kActive && !just_activated[i] &&
        !obj.last_mask.empty()) {
      neg_point[i] = farthest_interior_point(obj.last_mask);
      has_neg[i] = true;
    }
  }

  auto with_context = [&](const TrackedObject& obj, const std::exception& e) {
    return std::runtime_error("track_step: frame " + std::to_string(frame_index) +
                              ", object " + std::to_string(obj.id) + ": " + e.what());
  };

  // Stages A and B: jittered box prompts, then candidate selection.
  std::vector<BinaryMask> coarse(n);
  std::vector<double> coarse_pred(n, 0.0);
  std::vector<CropScore> coarse_semantic(n);
  for (std::size_t i = 0; i < n; ++i) {
    TrackedObject& obj = state.objects[i];
    if (obj.status == ObjectStatus::kPending || just_activated[i]) continue;

    std::vector<Box> members;
    if (config.enable_multiprompt) {
      members = jitter_grid(obj.last_box, config.grid_n, config.step_frac,
                            config.scales, state.width, state.height)
                    .members;
    } else {
      members = {clamp_box(obj.last_box, state.width, state.height)};
    }

    std::vector<Point> negatives;
    if (config.use_neg_in_multiprompt)
      for (std::size_t j = 0; j < n; ++j)
        if (j != i && has_neg[j]) negatives.push_back(neg_point[j]);

    bool found = false;
    double best_score = 0.0;
    BinaryMask best_mask;
    double best_pred = 0.0;
    CropScore best_semantic;
    for (const Box& member : members) {
      if (member.is_empty()) continue;
      SegmentationResult r;
      try {
        r = backend.segment_box(fh, member, negatives);
      } catch (const std::exception& e) {
        throw with_context(obj, e);
      }
      BinaryMask& mask = r.masks[0];
      if (mask.empty()) continue;

      CropScore semantic;
      double score = 0.0;
      if (config.selection_mode == SelectionMode::kSemantic) {
        semantic = crop_similarity(obj.templ, grid, bbox(mask), mask);
        score = semantic.score;
      } else {
        score = obj.last_mask.empty() ? 0.0 : iou(mask, obj.last_mask);
      }
      // Strictly-greater keeps the earliest member on ties.
      if (!found || score > best_score) {
        found = true;
        best_score = score;
        best_mask = std::move(mask);
        best_pred = r.iou_predictions[0];
        best_semantic = semantic;
      }
    }

    if (found) {
      if (config.selection_mode != SelectionMode::kSemantic)
        best_semantic = crop_similarity(obj.templ, grid, bbox(best_mask), best_mask);
      coarse[i] = std::move(best_mask);
      coarse_pred[i] = best_pred;
      coarse_semantic[i] = best_semantic;
    }
  }

  // Stage C: one positive point per surviving mask (its most interior
  // pixel), other objects' positives as negatives, best of the three
  // granularity hypotheses. An all-empty answer keeps the coarse mask.
  std::vector<BinaryMask> final_mask = coarse;
  std::vector<double> final_pred = coarse_pred;
  if (config.enable_refine) {
    std::vector<bool> has_pos(n, false);
    std::vector<Point> pos(n);
    for (std::size_t i = 0; i < n; ++i)
      if (!coarse[i].empty()) {
        pos[i] = farthest_interior_point(coarse[i]);
        has_pos[i] = true;
      }

    for (std::size_t i = 0; i < n; ++i) {
      if (!has_pos[i]) continue;
      TrackedObject& obj = state.objects[i];
      std::vector<Point> negatives;
      if (config.use_neg_in_refine)
        for (std::size_t j = 0; j < n; ++j)
          if (j != i && has_pos[j]) negatives.push_back(pos[j]);

      SegmentationResult r;
      try {
        r = backend.segment_points(fh, {pos[i]}, negatives);
      } catch (const std::exception& e) {
        throw with_context(obj, e);
      }

      std::size_t best = 0;
      double best_key = -1.0;
      for (std::size_t m = 0; m < r.masks.size(); ++m) {
        const double key =
            config.refine_mode == RefineMode::kMaxArea
                ? static_cast<double>(r.masks[m].area())
                : (obj.last_mask.empty() ? 0.0 : iou(r.masks[m], obj.last_mask));
        if (key > best_key) {  // strictly greater keeps the earliest on ties
          best_key = key;
          best = m;
        }
      }
      if (!r.masks[best].empty()) {
        final_mask[i] = std::move(r.masks[best]);
        final_pred[i] = r.iou_predictions[best];
      }
    }
  }

  // Stage D: state update, loss handling, overlap resolution, diagnostics.
  FrameOutput out;
  out.frame_index = frame_index;
  std::vector<std::pair<int, BinaryMask>> owned;
  std::vector<double> owned_scores;
  for (std::size_t i = 0; i < n; ++i) {
    TrackedObject& obj = state.objects[i];
    ObjectDiagnostics diag;
    BinaryMask mask(state.width, state.height);

    if (just_activated[i]) {
      mask = obj.last_mask;  // the provided mask, verbatim
    } else if (obj.status != ObjectStatus::kPending) {
      if (final_mask[i].empty()) {
        // Lost: keep last_box as the next prompt, report nothing.
        obj.status = ObjectStatus::kLost;
        obj.last_mask = BinaryMask(state.width, state.height);
      } else {
        mask = final_mask[i];
        obj.status = ObjectStatus::kActive;
        obj.last_mask = final_mask[i];
        obj.last_box = bbox(final_mask[i]);
        diag.semantic_score = coarse_semantic[i].score;
        diag.area_normalized_score = coarse_semantic[i].mean_cell_score;
        diag.iou_prediction = final_pred[i];
      }
    }

    out.masks.emplace(obj.id, mask);
    out.diagnostics.emplace(obj.id, diag);
    owned.emplace_back(obj.id, std::move(mask));
    owned_scores.push_back(final_pred[i]);
  }
  out.label_map = resolve_overlaps(owned, owned_scores, state.width, state.height);

  state.last_frame_index = frame_index;
  return out;
}

/// Tracks a whole sequence from provided first-frame (or later) masks. The
/// first output echoes the initial masks.
inline std::vector<FrameOutput> run_sequence(const std::vector<RgbImage>& frames,
                                             const std::vector<InitObject>& objects,
                                             SegmentationBackend& backend,
                                             const TrackerConfig& config) {
  if (frames.empty()) throw std::invalid_argument("run_sequence: no frames");
  TrackerState state = init_from_masks(frames[0], objects, config);
  std::vector<FrameOutput> out;
  out.reserve(frames.size());
  out.push_back(initial_output(state));
  for (std::size_t t = 1; t < frames.size(); ++t)
    out.push_back(track_step(state, frames[t], static_cast<int>(t), backend, config));
  return out;
}

/// Tracks a whole sequence from automatically generated first-frame masks.
inline std::vector<FrameOutput> run_sequence_auto(const std::vector<RgbImage>& frames,
                                                  SegmentationBackend& backend,
                                                  const TrackerConfig& config) {
  if (frames.empty()) throw std::invalid_argument("run_sequence_auto: no frames");
  TrackerState state = init_automatic(frames[0], backend, config);
  std::vector<FrameOutput> out;
  out.reserve(frames.size());
  out.push_back(initial_output(state));
  for (std::size_t t = 1; t < frames.size(); ++t)
    out.push_back(track_step(state, frames[t], static_cast<int>(t), backend, config));
  return out;
}

}  // namespace pdtrack
