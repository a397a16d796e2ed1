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

// Query-trace recording and replay. A RecordingBackend wraps a live segmenter
// and writes every answer to a cache directory; replay_load() opens such a
// cache as a backend that answers queries from disk alone, bit-exactly. This
// is how selection logic gets re-evaluated offline on traces from a real
// model without in-process inference.
//
// Cache layout:
//   <dir>/manifest.json                      frame_count, width, height, provenance
//   <dir>/frames/<5-digit frame>/<key>.json  iou predictions + mask file names
//   <dir>/frames/<5-digit frame>/<key>_m<i>.png
// where <key> is the 16-hex-digit hash of the canonical prompt serialization;
// the frame directory separates identical prompts on different frames.

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdtrack/backend.hpp"
#include "pdtrack/png_io.hpp"
#include "pdtrack/raster.hpp"

namespace pdtrack {

namespace detail {

inline std::string frame_dir_name(int frame_index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%05d", frame_index);
  return buf;
}

inline BinaryMask mask_from_labels(const LabelMap& labels) {
  BinaryMask m(labels.width(), labels.height());
  for (int y = 0; y < labels.height(); ++y)
    for (int x = 0; x < labels.width(); ++x)
      if (labels.at(x, y) != 0) m.set(x, y, true);
  return m;
}

inline LabelMap labels_from_mask(const BinaryMask& mask) {
  LabelMap labels(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (mask.at(x, y)) labels.set(x, y, 1);
  return labels;
}

}  // namespace detail

/// Wraps a live backend and records every query result under `cache_dir`.
/// The manifest is rewritten on every encoded frame, so a partially recorded
/// cache is still loadable up to the frames it has seen.
class RecordingBackend : public SegmentationBackend {
 public:
  RecordingBackend(SegmentationBackend& inner, std::filesystem::path cache_dir,
                   std::string provenance)
      : inner_(inner), dir_(std::move(cache_dir)), provenance_(std::move(provenance)) {
    std::filesystem::create_directories(dir_ / "frames");
  }

  bool supports_concurrent_queries() const override { return false; }

 private:
  FrameHandle inner_handle(const FrameHandle& h) const {
    FrameHandle inner = h;
    inner.backend_id = inner_.id();
    return inner;
  }

  FrameHandle do_encode_frame(const RgbImage& image, int frame_index) override {
    FrameHandle h = inner_.encode_frame(image, frame_index);
    frame_count_ = std::max(frame_count_, frame_index + 1);
    width_ = image.width();
    height_ = image.height();
    write_manifest();
    std::filesystem::create_directories(dir_ / "frames" /
                                        detail::frame_dir_name(frame_index));
    return h;
  }

  SegmentationResult do_segment_box(const FrameHandle& frame, const Box& box,
                                    const std::vector<Point>& negatives) override {
    SegmentationResult r = inner_.segment_box(inner_handle(frame), box, negatives);
    record(frame.frame_index, query_key(serialize_box_query(box, negatives)), r);
    return r;
  }

  SegmentationResult do_segment_points(const FrameHandle& frame,
                                       const std::vector<Point>& positives,
                                       const std::vector<Point>& negatives) override {
    SegmentationResult r = inner_.segment_points(inner_handle(frame), positives, negatives);
    record(frame.frame_index, query_key(serialize_point_query(positives, negatives)), r);
    return r;
  }

  void write_manifest() const {
    nlohmann::json m;
    m["frame_count"] = frame_count_;
    m["width"] = width_;
    m["height"] = height_;
    m["provenance"] = provenance_;
    std::ofstream out(dir_ / "manifest.json");
    if (!out) throw std::runtime_error("record: cannot write manifest in " + dir_.string());
    out << m.dump(2) << "\n";
  }

  void record(int frame_index, const std::string& key, const SegmentationResult& r) const {
    const std::filesystem::path frame_dir =
        dir_ / "frames" / detail::frame_dir_name(frame_index);
    nlohmann::json rec;
    rec["iou_predictions"] = r.iou_predictions;
    std::vector<std::string> mask_files;
    for (std::size_t i = 0; i < r.masks.size(); ++i) {
      const std::string name = key + "_m" + std::to_string(i) + ".png";
      write_label_png(detail::labels_from_mask(r.masks[i]), default_palette(),
                      (frame_dir / name).string());
      mask_files.push_back(name);
    }
    rec["masks"] = mask_files;
    std::ofstream out(frame_dir / (key + ".json"));
    if (!out)
      throw std::runtime_error("record: cannot write record " + key + " for frame " +
                               std::to_string(frame_index));
    out << rec.dump(2) << "\n";
  }

  SegmentationBackend& inner_;
  std::filesystem::path dir_;
  std::string provenance_;
  int frame_count_ = 0;
  int width_ = 0;
  int height_ = 0;
};

/// Answers queries purely from a recorded cache. Unknown queries are errors
/// that name the missing key.
class ReplayBackend : public SegmentationBackend {
 public:
  explicit ReplayBackend(std::filesystem::path cache_dir) : dir_(std::move(cache_dir)) {
    const std::filesystem::path manifest = dir_ / "manifest.json";
    std::ifstream in(manifest);
    if (!in)
      throw std::runtime_error("replay: missing manifest " + manifest.string());
    nlohmann::json m;
    try {
      in >> m;
      frame_count_ = m.at("frame_count").get<int>();
      width_ = m.at("width").get<int>();
      height_ = m.at("height").get<int>();
      provenance_ = m.at("provenance").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("replay: malformed manifest " + manifest.string() + ": " +
                               e.what());
    }
  }

  int frame_count() const { return frame_count_; }
  int width() const { return width_; }
  int height() const { return height_; }
  const std::string& provenance() const { return provenance_; }

  bool supports_concurrent_queries() const override { return true; }

 private:
  FrameHandle do_encode_frame(const RgbImage& image, int frame_index) override {
    if (frame_index >= frame_count_)
      throw std::runtime_error("replay: frame " + std::to_string(frame_index) +
                               " beyond the cache's " + std::to_string(frame_count_) +
                               " frames");
    if (image.width() != width_ || image.height() != height_)
      throw std::runtime_error("replay: frame dimensions do not match the cache");
    FrameHandle h;
    h.frame_index = frame_index;
    h.width = width_;
    h.height = height_;
    return h;
  }

  SegmentationResult do_segment_box(const FrameHandle& frame, const Box& box,
                                    const std::vector<Point>& negatives) override {
    return lookup(frame.frame_index, query_key(serialize_box_query(box, negatives)));
  }

  SegmentationResult do_segment_points(const FrameHandle& frame,
                                       const std::vector<Point>& positives,
                                       const std::vector<Point>& negatives) override {
    return lookup(frame.frame_index, query_key(serialize_point_query(positives, negatives)));
  }

  SegmentationResult lookup(int frame_index, const std::string& key) const {
    const std::filesystem::path frame_dir =
        dir_ / "frames" / detail::frame_dir_name(frame_index);
    const std::filesystem::path record = frame_dir / (key + ".json");
    std::ifstream in(record);
    if (!in)
      throw std::runtime_error("replay: cache miss for key " + key + " at frame " +
                               std::to_string(frame_index));
    nlohmann::json rec;
    SegmentationResult r;
    try {
      in >> rec;
      r.iou_predictions = rec.at("iou_predictions").get<std::vector<double>>();
      for (const std::string& name : rec.at("masks").get<std::vector<std::string>>())
        r.masks.push_back(
            detail::mask_from_labels(read_label_png((frame_dir / name).string()).labels));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("replay: malformed record " + record.string() + ": " +
                               e.what());
    }
    return r;
  }

  std::filesystem::path dir_;
  int frame_count_ = 0;
  int width_ = 0;
  int height_ = 0;
  std::string provenance_;
};

inline std::unique_ptr<ReplayBackend> replay_load(const std::filesystem::path& cache_dir) {
  return std::make_unique<ReplayBackend>(cache_dir);
}

/// Structural validation of a replay cache: manifest readable, every record
/// parseable, every referenced mask present with the manifest's dimensions
/// and a plausible cardinality. Returns the number of records checked.
inline int validate_trace(const std::filesystem::path& cache_dir) {
  ReplayBackend backend(cache_dir);  // validates the manifest
  const std::filesystem::path frames = cache_dir / "frames";
  int records = 0;
  if (!std::filesystem::exists(frames)) return 0;
  for (const auto& frame_entry : std::filesystem::directory_iterator(frames)) {
    if (!frame_entry.is_directory()) continue;
    const std::string frame_name = frame_entry.path().filename().string();
    if (frame_name.size() != 5 ||
        frame_name.find_first_not_of("0123456789") != std::string::npos)
      throw std::runtime_error("trace: unexpected frame directory " + frame_name);
    if (std::stoi(frame_name) >= backend.frame_count())
      throw std::runtime_error("trace: frame directory " + frame_name +
                               " beyond the manifest's frame count");
    for (const auto& entry : std::filesystem::directory_iterator(frame_entry.path())) {
      if (entry.path().extension() != ".json") continue;
      std::ifstream in(entry.path());
      nlohmann::json rec;
      std::vector<double> preds;
      std::vector<std::string> masks;
      try {
        in >> rec;
        preds = rec.at("iou_predictions").get<std::vector<double>>();
        masks = rec.at("masks").get<std::vector<std::string>>();
      } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("trace: malformed record " + entry.path().string() +
                                 ": " + e.what());
      }
      if (masks.size() != preds.size() || (masks.size() != 1 && masks.size() != 3))
        throw std::runtime_error("trace: record " + entry.path().string() +
                                 " has an invalid mask cardinality");
      for (const std::string& name : masks) {
        const LabelImage img = read_label_png((frame_entry.path() / name).string());
        if (img.labels.width() != backend.width() ||
            img.labels.height() != backend.height())
          throw std::runtime_error("trace: mask " + name +
                                   " does not match the manifest dimensions");
      }
      ++records;
    }
  }
  return records;
}

}  // namespace pdtrack
