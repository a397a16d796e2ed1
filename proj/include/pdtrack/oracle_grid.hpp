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

// Perturbation-sensitivity harness. No tracking is involved: every frame's
// prompt is derived from that frame's ground truth, perturbed by a controlled
// (translation, scale) cell, and scored against the same ground truth. The
// grid of mean J&F values shows how fast single-prompt quality decays with
// prompt noise and how much the candidate-grid stage recovers.

#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdtrack/backend.hpp"
#include "pdtrack/features.hpp"
#include "pdtrack/metrics.hpp"
#include "pdtrack/prompts.hpp"
#include "pdtrack/raster.hpp"
#include "pdtrack/tracker.hpp"

namespace pdtrack {

struct OracleGridResult {
  std::vector<double> translations;
  std::vector<double> scales;
  // values[ti][si] = mean J&F over all (frame, object) samples for the cell
  // (translations[ti], scales[si]).
  std::vector<std::vector<double>> values;
};

/// Sweeps prompt perturbations over a fully annotated sequence.
///
/// For each cell (tx, s), each frame t, and each object visible at t, the
/// ground-truth bbox is perturbed by Perturbation{tx, tx, s} (the rate is
/// applied to both axes) and submitted as a box prompt. With multiprompt off
/// the prompt is queried directly; with it on the prompt seeds a reduced
/// 3x3x{0.95,1.00,1.05} candidate grid and the candidate is chosen by
/// config.selection_mode, where the "previous mask" reference for overlap
/// scoring is the same-frame ground truth (there is no tracked history here).
/// A sample is (J + F) / 2 against ground truth; a prompt clamped to nothing
/// scores 0. The cell value is the mean over samples.
inline OracleGridResult run_oracle_grid(const std::vector<RgbImage>& frames,
                                        const std::vector<LabelMap>& gts,
                                        SegmentationBackend& backend,
                                        const std::vector<double>& translations,
                                        const std::vector<double>& scales,
                                        bool multiprompt, const TrackerConfig& config) {
  if (frames.empty()) throw std::invalid_argument("run_oracle_grid: no frames");
  if (frames.size() != gts.size())
    throw std::invalid_argument("run_oracle_grid: frame/ground-truth count mismatch");
  if (translations.empty() || scales.empty())
    throw std::invalid_argument("run_oracle_grid: empty rate list");
  validate_config(config);

  const int width = frames[0].width();
  const int height = frames[0].height();

  // Per-frame state is reused across all cells.
  std::vector<FrameHandle> handles;
  handles.reserve(frames.size());
  for (std::size_t t = 0; t < frames.size(); ++t)
    handles.push_back(backend.encode_frame(frames[t], static_cast<int>(t)));

  std::vector<FeatureGrid> grids;
  std::map<int, TemplateEmbedding> templates;
  if (multiprompt && config.selection_mode == SelectionMode::kSemantic) {
    grids.reserve(frames.size());
    for (const RgbImage& f : frames) grids.push_back(encode(f, config.feature_stride));
    // Template of each object comes from its first visible frame.
    for (std::size_t t = 0; t < gts.size(); ++t)
      for (int id : gts[t].ids())
        if (!templates.count(id)) {
          const BinaryMask m = mask_of(gts[t], id);
          templates.emplace(id, extract_template(grids[t], bbox(m), m));
        }
  }

  OracleGridResult result;
  result.translations = translations;
  result.scales = scales;
  result.values.assign(translations.size(), std::vector<double>(scales.size(), 0.0));

  for (std::size_t ti = 0; ti < translations.size(); ++ti) {
    for (std::size_t si = 0; si < scales.size(); ++si) {
      const Perturbation cell{translations[ti], translations[ti], scales[si]};
      double sum = 0.0;
      long count = 0;
      for (std::size_t t = 0; t < frames.size(); ++t) {
        for (int id : gts[t].ids()) {
          const BinaryMask gt_mask = mask_of(gts[t], id);
          if (gt_mask.empty()) continue;
          const Box prompt = perturb_box(bbox(gt_mask), cell, width, height);
          ++count;
          if (prompt.is_empty()) continue;  // clamped away entirely: sample 0

          BinaryMask produced(width, height, false);
          if (!multiprompt) {
            produced = backend.segment_box(handles[t], prompt, {}).masks[0];
          } else {
            const BoxPromptGroup group =
                jitter_grid(prompt, 3, 0.1, {0.95, 1.00, 1.05}, width, height);
            bool found = false;
            double best_score = 0.0;
            for (const Box& member : group.members) {
              if (member.is_empty()) continue;
              BinaryMask mask = backend.segment_box(handles[t], member, {}).masks[0];
              double score = 0.0;
              if (config.selection_mode == SelectionMode::kSemantic) {
                if (!mask.empty())
                  score = crop_similarity(templates.at(id), grids[t], bbox(mask), mask).score;
              } else {
                score = iou(mask, gt_mask);
              }
              // Strictly greater keeps the earliest member on ties.
              if (!found || score > best_score) {
                found = true;
                best_score = score;
                produced = std::move(mask);
              }
            }
          }
          sum += 0.5 * (region_j(produced, gt_mask) +
                        boundary_f(produced, gt_mask, 0.008));
        }
      }
      result.values[ti][si] = count == 0 ? 0.0 : sum / static_cast<double>(count);
    }
  }
  return result;
}

/// Writes the grid as CSV rows "tx,s,jf" with a header line.
inline void write_oracle_csv(const OracleGridResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_oracle_csv: cannot open " + path);
  out << "tx,s,jf\n";
  char line[96];
  for (std::size_t ti = 0; ti < result.translations.size(); ++ti)
    for (std::size_t si = 0; si < result.scales.size(); ++si) {
      std::snprintf(line, sizeof line, "%.6g,%.6g,%.6f", result.translations[ti],
                    result.scales[si], result.values[ti][si]);
      out << line << "\n";
    }
}

}  // namespace pdtrack
