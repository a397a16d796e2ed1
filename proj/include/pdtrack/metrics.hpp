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

// Evaluation metrics for multi-object mask tracks. Per-frame region overlap
// (J) and boundary agreement (F) aggregate into per-sequence scores; ranked
// track predictions are scored by spatio-temporal IoU against ground-truth
// tracks via greedy matching (average recall and interpolated average
// precision over the 0.50..0.95 threshold ladder).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdtrack/raster.hpp"

namespace pdtrack {

/// Region similarity: mask IoU. Two empty masks count as a perfect match.
inline double region_j(const BinaryMask& pred, const BinaryMask& gt) {
  return iou(pred, gt);
}

/// Boundary agreement: F-measure of boundary precision/recall where a
/// boundary pixel counts as matched when the other mask's boundary passes
/// within `tolerance_frac` of the image diagonal. Conventions: both
/// boundaries empty -> 1.0, exactly one empty -> 0.0, P + R = 0 -> 0.0.
inline double boundary_f(const BinaryMask& pred, const BinaryMask& gt,
                         double tolerance_frac = 0.008) {
  detail::require_same_dims(pred, gt, "boundary_f");
  if (tolerance_frac < 0.0)
    throw std::invalid_argument("boundary_f: tolerance_frac must be >= 0");

  const BinaryMask bp = boundary_pixels(pred);
  const BinaryMask bg = boundary_pixels(gt);
  if (bp.empty() && bg.empty()) return 1.0;
  if (bp.empty() || bg.empty()) return 0.0;

  const double w = pred.width();
  const double h = pred.height();
  const double r = tolerance_frac * std::sqrt(w * w + h * h);
  const BinaryMask bg_near = dilate(bg, r);
  const BinaryMask bp_near = dilate(bp, r);

  long long p_hit = 0;
  long long g_hit = 0;
  const auto& pb = bp.bits();
  const auto& gb = bg.bits();
  const auto& pn = bp_near.bits();
  const auto& gn = bg_near.bits();
  for (std::size_t i = 0; i < pb.size(); ++i) {
    p_hit += (pb[i] && gn[i]) ? 1 : 0;
    g_hit += (gb[i] && pn[i]) ? 1 : 0;
  }
  const double precision = static_cast<double>(p_hit) / bp.area();
  const double recall = static_cast<double>(g_hit) / bg.area();
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

/// Per-object J/F trail across the counted frames of one sequence.
struct ObjectSeqScore {
  std::vector<int> frames;  // counted frame indices, ascending
  std::vector<double> j;    // one per counted frame
  std::vector<double> f;
  double mean_j = 1.0;
  double mean_f = 1.0;
  bool counted = false;  // false when no frame qualified (vacuously perfect)
};

struct SequenceEval {
  std::map<int, ObjectSeqScore> objects;
  double j = 1.0;  // mean over counted objects; 1.0 when nothing counts
  double f = 1.0;
  double jf = 1.0;
};

/// Scores one sequence. An object's counted frames run strictly after its
/// first (initialization) frame through the final frame; the first frame is
/// given to the tracker, so it never scores. Objects whose window is empty
/// drop out of the sequence means.
inline SequenceEval sequence_scores(const std::map<int, std::vector<BinaryMask>>& preds,
                                    const std::vector<LabelMap>& gts,
                                    const std::map<int, int>& first_frames,
                                    double tolerance_frac = 0.008) {
  SequenceEval eval;
  double sum_j = 0.0;
  double sum_f = 0.0;
  int counted_objects = 0;

  for (const auto& [id, first] : first_frames) {
    if (first < 0)
      throw std::invalid_argument("sequence_scores: negative first frame for object " +
                                  std::to_string(id));
    const auto pit = preds.find(id);
    if (pit == preds.end())
      throw std::invalid_argument("sequence_scores: no prediction track for object " +
                                  std::to_string(id));
    const std::vector<BinaryMask>& track = pit->second;

    ObjectSeqScore score;
    for (int t = first + 1; t < static_cast<int>(gts.size()); ++t) {
      if (t >= static_cast<int>(track.size()))
        throw std::invalid_argument("sequence_scores: prediction track for object " +
                                    std::to_string(id) + " misses frame " +
                                    std::to_string(t));
      const LabelMap& lab = gts[static_cast<std::size_t>(t)];
      BinaryMask gt_mask(lab.width(), lab.height());
      for (int y = 0; y < lab.height(); ++y)
        for (int x = 0; x < lab.width(); ++x)
          if (lab.at(x, y) == id) gt_mask.set(x, y, true);
      score.frames.push_back(t);
      score.j.push_back(region_j(track[static_cast<std::size_t>(t)], gt_mask));
      score.f.push_back(boundary_f(track[static_cast<std::size_t>(t)], gt_mask,
                                   tolerance_frac));
    }
    if (!score.frames.empty()) {
      score.counted = true;
      score.mean_j = 0.0;
      score.mean_f = 0.0;
      for (double v : score.j) score.mean_j += v;
      for (double v : score.f) score.mean_f += v;
      score.mean_j /= score.frames.size();
      score.mean_f /= score.frames.size();
      sum_j += score.mean_j;
      sum_f += score.mean_f;
      ++counted_objects;
    }
    eval.objects.emplace(id, std::move(score));
  }

  if (counted_objects > 0) {
    eval.j = sum_j / counted_objects;
    eval.f = sum_f / counted_objects;
  }
  eval.jf = (eval.j + eval.f) / 2.0;
  return eval;
}

struct ObjectScore {
  double j = 0.0;
  double f = 0.0;
};

/// Aggregate over objects whose category is/is not in the known set. A split
/// with no objects reports absent scores; the overall score averages the
/// split scores that exist.
struct SplitScores {
  double g = 0.0;
  std::optional<double> j_seen, f_seen, j_unseen, f_unseen;
};

inline SplitScores seen_unseen_split(const std::map<int, ObjectScore>& scores,
                                     const std::map<int, std::string>& categories,
                                     const std::set<std::string>& seen) {
  if (scores.empty())
    throw std::invalid_argument("seen_unseen_split: no objects to aggregate");

  double js = 0, fs = 0, ju = 0, fu = 0;
  int ns = 0, nu = 0;
  for (const auto& [id, sc] : scores) {
    const auto cit = categories.find(id);
    if (cit == categories.end())
      throw std::invalid_argument("seen_unseen_split: object " + std::to_string(id) +
                                  " has no category");
    if (seen.count(cit->second)) {
      js += sc.j;
      fs += sc.f;
      ++ns;
    } else {
      ju += sc.j;
      fu += sc.f;
      ++nu;
    }
  }

  SplitScores out;
  double total = 0.0;
  int parts = 0;
  if (ns > 0) {
    out.j_seen = js / ns;
    out.f_seen = fs / ns;
    total += *out.j_seen + *out.f_seen;
    parts += 2;
  }
  if (nu > 0) {
    out.j_unseen = ju / nu;
    out.f_unseen = fu / nu;
    total += *out.j_unseen + *out.f_unseen;
    parts += 2;
  }
  out.g = total / parts;
  return out;
}

/// Spatio-temporal IoU: summed intersections over summed unions across the
/// whole track (not a per-frame mean). Two always-empty tracks -> 1.0.
inline double st_iou(const std::vector<BinaryMask>& a, const std::vector<BinaryMask>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("st_iou: track lengths differ");
  long long inter = 0;
  long long uni = 0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    detail::require_same_dims(a[t], b[t], "st_iou");
    const auto& ab = a[t].bits();
    const auto& bb = b[t].bits();
    for (std::size_t i = 0; i < ab.size(); ++i) {
      inter += (ab[i] && bb[i]) ? 1 : 0;
      uni += (ab[i] || bb[i]) ? 1 : 0;
    }
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// One ranked track hypothesis: per-frame masks (empty = absent) plus a
/// confidence used for ranking.
struct TrackPrediction {
  int object_id = 0;
  double score = 0.0;
  std::vector<BinaryMask> masks;
};

/// The detection threshold ladder 0.50, 0.55, ..., 0.95.
inline std::vector<double> vis_match_thresholds() {
  std::vector<double> taus;
  taus.reserve(10);
  for (int i = 0; i < 10; ++i) taus.push_back((50 + 5 * i) / 100.0);
  return taus;
}

enum class TrackSizeClass { kSmall, kMedium, kLarge };

/// Size class from the mean pixel area over frames where the track is
/// present: small below 32^2, medium below 96^2, large otherwise.
inline TrackSizeClass track_size_class(const std::vector<BinaryMask>& track) {
  double sum = 0.0;
  int n = 0;
  for (const BinaryMask& m : track)
    if (!m.empty()) {
      sum += m.area();
      ++n;
    }
  const double mean = n > 0 ? sum / n : 0.0;
  if (mean < 32.0 * 32.0) return TrackSizeClass::kSmall;
  if (mean < 96.0 * 96.0) return TrackSizeClass::kMedium;
  return TrackSizeClass::kLarge;
}

namespace detail {

// Prediction indices in evaluation order: descending score, stable on ties.
inline std::vector<std::size_t> score_order(const std::vector<TrackPrediction>& preds) {
  std::vector<std::size_t> order(preds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return preds[a].score > preds[b].score;
  });
  return order;
}

// Greedy one-to-one matching over a precomputed IoU matrix: in evaluation
// order, each prediction takes the unmatched gt with the highest IoU >= tau
// (ties to the lower gt index). Returns per-prediction gt index or -1.
inline std::vector<int> greedy_match(const std::vector<std::vector<double>>& iou_matrix,
                                     const std::vector<std::size_t>& order,
                                     std::size_t gt_count, double tau) {
  std::vector<int> matched(iou_matrix.size(), -1);
  std::vector<bool> taken(gt_count, false);
  for (std::size_t idx : order) {
    int best = -1;
    double best_iou = -1.0;
    for (std::size_t g = 0; g < gt_count; ++g) {
      if (taken[g]) continue;
      const double v = iou_matrix[idx][g];
      if (v >= tau && v > best_iou) {
        best_iou = v;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0) {
      matched[idx] = best;
      taken[static_cast<std::size_t>(best)] = true;
    }
  }
  return matched;
}

inline std::vector<std::vector<double>> track_iou_matrix(
    const std::vector<TrackPrediction>& preds,
    const std::vector<std::vector<BinaryMask>>& gts) {
  std::vector<std::vector<double>> m(preds.size(), std::vector<double>(gts.size(), 0.0));
  for (std::size_t p = 0; p < preds.size(); ++p)
    for (std::size_t g = 0; g < gts.size(); ++g) m[p][g] = st_iou(preds[p].masks, gts[g]);
  return m;
}

}  // namespace detail

struct RecallReport {
  double ar = 1.0;  // vacuously perfect when there is no ground truth
  std::optional<double> ar_small, ar_medium, ar_large;
};

/// Average recall over the threshold ladder with at most k ranked
/// predictions, plus recalls restricted to each ground-truth size class.
inline RecallReport average_recall(const std::vector<TrackPrediction>& preds,
                                   const std::vector<std::vector<BinaryMask>>& gts,
                                   int k = 100,
                                   const std::vector<double>& thresholds = vis_match_thresholds()) {
  if (k < 1) throw std::invalid_argument("average_recall: k must be >= 1");
  if (thresholds.empty())
    throw std::invalid_argument("average_recall: no thresholds");

  RecallReport out;
  if (gts.empty()) return out;

  // Keep the k best-scoring predictions, then match the survivors.
  std::vector<std::size_t> order = detail::score_order(preds);
  if (static_cast<int>(order.size()) > k) order.resize(static_cast<std::size_t>(k));
  std::vector<TrackPrediction> top;
  top.reserve(order.size());
  for (std::size_t idx : order) top.push_back(preds[idx]);
  std::vector<std::size_t> top_order(top.size());
  for (std::size_t i = 0; i < top.size(); ++i) top_order[i] = i;

  const std::vector<std::vector<double>> ious = detail::track_iou_matrix(top, gts);

  std::vector<int> size_class(gts.size());
  int class_count[3] = {0, 0, 0};
  for (std::size_t g = 0; g < gts.size(); ++g) {
    size_class[g] = static_cast<int>(track_size_class(gts[g]));
    ++class_count[size_class[g]];
  }

  double sum = 0.0;
  double class_sum[3] = {0, 0, 0};
  for (double tau : thresholds) {
    const std::vector<int> matched = detail::greedy_match(ious, top_order, gts.size(), tau);
    int hit = 0;
    int class_hit[3] = {0, 0, 0};
    for (int g : matched)
      if (g >= 0) {
        ++hit;
        ++class_hit[size_class[static_cast<std::size_t>(g)]];
      }
    sum += static_cast<double>(hit) / gts.size();
    for (int c = 0; c < 3; ++c)
      if (class_count[c] > 0)
        class_sum[c] += static_cast<double>(class_hit[c]) / class_count[c];
  }

  out.ar = sum / thresholds.size();
  auto assign = [&](int c) -> std::optional<double> {
    if (class_count[c] == 0) return std::nullopt;
    return class_sum[c] / thresholds.size();
  };
  out.ar_small = assign(0);
  out.ar_medium = assign(1);
  out.ar_large = assign(2);
  return out;
}

/// Interpolated average precision over the threshold ladder: per threshold,
/// greedy matching in score order yields a precision-recall curve whose
/// 101-point interpolated area is that threshold's AP; the result is the mean
/// across thresholds. No ground truth: 1.0 with no predictions, else 0.0.
inline double average_precision(const std::vector<TrackPrediction>& preds,
                                const std::vector<std::vector<BinaryMask>>& gts,
                                const std::vector<double>& thresholds = vis_match_thresholds()) {
  if (thresholds.empty())
    throw std::invalid_argument("average_precision: no thresholds");
  if (gts.empty()) return preds.empty() ? 1.0 : 0.0;

  const std::vector<std::size_t> order = detail::score_order(preds);
  const std::vector<std::vector<double>> ious = detail::track_iou_matrix(preds, gts);

  double ap_sum = 0.0;
  for (double tau : thresholds) {
    const std::vector<int> matched = detail::greedy_match(ious, order, gts.size(), tau);
    std::vector<double> precision;
    std::vector<double> recall;
    precision.reserve(order.size());
    recall.reserve(order.size());
    int tp = 0;
    int seen = 0;
    for (std::size_t idx : order) {
      ++seen;
      if (matched[idx] >= 0) ++tp;
      precision.push_back(static_cast<double>(tp) / seen);
      recall.push_back(static_cast<double>(tp) / gts.size());
    }
    double ap = 0.0;
    for (int ri = 0; ri <= 100; ++ri) {
      const double r = ri / 100.0;
      double best = 0.0;
      for (std::size_t j = 0; j < precision.size(); ++j)
        if (recall[j] >= r) best = std::max(best, precision[j]);
      ap += best;
    }
    ap_sum += ap / 101.0;
  }
  return ap_sum / thresholds.size();
}

}  // namespace pdtrack
