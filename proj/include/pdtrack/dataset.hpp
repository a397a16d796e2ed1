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

// Sequence ingestion for three directory layouts plus the synthetic-suite
// exporter that produces the third:
//
//   davis               JPEGImages/480p/<seq>/<5-digit>.jpg,
//                       Annotations/480p/<seq>/<5-digit>.png,
//                       ImageSets/2017/val.txt; every object starts at frame 0.
//   ytvos               the same tree plus meta.json with per-object first
//                       frames and categories.
//   exported-synthetic  the davis tree with losslessly stored .png frames
//                       plus Scripts/<seq>.json describing the scene.

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdtrack/image_io.hpp"
#include "pdtrack/png_io.hpp"
#include "pdtrack/synthetic.hpp"

namespace pdtrack {

enum class DatasetKind { kDavis, kYtvos, kExportedSynthetic };

struct SequenceSpec {
  std::string name;
  std::vector<std::string> frame_paths;        // ordered
  std::map<int, std::string> annotation_paths; // frame index -> label png
  std::map<int, int> first_frames;             // object id -> first frame
  std::map<int, std::string> categories;       // optional, ytvos only
  int width = 0;
  int height = 0;
};

inline RgbImage read_frame(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.extension() == ".jpg" || p.extension() == ".jpeg") return read_jpeg(path);
  return read_rgb_png(path);
}

// SceneScript <-> JSON. Field names mirror the struct members so a script
// file is self-describing.

inline nlohmann::json script_to_json(const SceneScript& script) {
  nlohmann::json j;
  j["width"] = script.width;
  j["height"] = script.height;
  j["frame_count"] = script.frame_count;
  j["background"] = script.background;
  j["objects"] = nlohmann::json::array();
  for (const SceneObject& o : script.objects) {
    nlohmann::json jo;
    jo["id"] = o.id;
    switch (o.shape) {
      case ShapeKind::kRectangle: jo["shape"] = "rectangle"; break;
      case ShapeKind::kEllipse: jo["shape"] = "ellipse"; break;
      case ShapeKind::kConvexPolygon: jo["shape"] = "polygon"; break;
    }
    jo["color"] = o.color;
    jo["base_size"] = o.base_size;
    jo["trajectory"] = nlohmann::json::array();
    for (const Keyframe& k : o.trajectory)
      jo["trajectory"].push_back({{"frame", k.frame}, {"x", k.x}, {"y", k.y}});
    jo["scale_curve"] = nlohmann::json::array();
    for (const ScaleKey& k : o.scale_curve)
      jo["scale_curve"].push_back({{"frame", k.frame}, {"scale", k.scale}});
    jo["depth"] = o.depth;
    jo["absent"] = o.absent;
    jo["polygon"] = o.polygon;
    j["objects"].push_back(std::move(jo));
  }
  return j;
}

inline SceneScript script_from_json(const nlohmann::json& j) {
  SceneScript script;
  try {
    script.width = j.at("width").get<int>();
    script.height = j.at("height").get<int>();
    script.frame_count = j.at("frame_count").get<int>();
    script.background = j.at("background").get<std::array<std::uint8_t, 3>>();
    for (const nlohmann::json& jo : j.at("objects")) {
      SceneObject o;
      o.id = jo.at("id").get<int>();
      const std::string shape = jo.at("shape").get<std::string>();
      if (shape == "rectangle")
        o.shape = ShapeKind::kRectangle;
      else if (shape == "ellipse")
        o.shape = ShapeKind::kEllipse;
      else if (shape == "polygon")
        o.shape = ShapeKind::kConvexPolygon;
      else
        throw std::invalid_argument("script: unknown shape '" + shape + "'");
      o.color = jo.at("color").get<std::array<std::uint8_t, 3>>();
      o.base_size = jo.at("base_size").get<double>();
      for (const nlohmann::json& jk : jo.at("trajectory"))
        o.trajectory.push_back(Keyframe{jk.at("frame").get<int>(), jk.at("x").get<double>(),
                                        jk.at("y").get<double>()});
      for (const nlohmann::json& jk : jo.at("scale_curve"))
        o.scale_curve.push_back(
            ScaleKey{jk.at("frame").get<int>(), jk.at("scale").get<double>()});
      o.depth = jo.at("depth").get<int>();
      o.absent = jo.at("absent").get<std::vector<std::pair<int, int>>>();
      o.polygon = jo.at("polygon").get<std::vector<std::array<double, 2>>>();
      script.objects.push_back(std::move(o));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("script: malformed JSON: ") + e.what());
  }
  validate_script(script);
  return script;
}

/// Renders a scene script into the exported-synthetic layout under `root`.
/// Frames are stored losslessly as PNG, annotations as indexed label PNGs,
/// and the script itself as Scripts/<name>.json; the sequence is appended to
/// ImageSets/2017/val.txt (once).
inline void export_synthetic(const SceneScript& script, const std::string& name,
                             const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  const fs::path frames_dir = root / "JPEGImages" / "480p" / name;
  const fs::path annot_dir = root / "Annotations" / "480p" / name;
  const fs::path sets_dir = root / "ImageSets" / "2017";
  fs::create_directories(frames_dir);
  fs::create_directories(annot_dir);
  fs::create_directories(sets_dir);
  fs::create_directories(root / "Scripts");

  const Palette palette = default_palette();
  for (int t = 0; t < script.frame_count; ++t) {
    const auto [image, labels] = render_frame(script, t);
    char stem[16];
    std::snprintf(stem, sizeof stem, "%05d", t);
    write_rgb_png(image, (frames_dir / (std::string(stem) + ".png")).string());
    write_label_png(labels, palette, (annot_dir / (std::string(stem) + ".png")).string());
  }
  {
    std::ofstream out(root / "Scripts" / (name + ".json"));
    if (!out) throw std::runtime_error("export: cannot write script for " + name);
    out << script_to_json(script).dump(2) << "\n";
  }
  const fs::path list_path = sets_dir / "val.txt";
  std::vector<std::string> names;
  {
    std::ifstream in(list_path);
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) names.push_back(line);
  }
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::ofstream out(list_path, std::ios::app);
    out << name << "\n";
  }
}

namespace detail {

inline std::vector<std::string> sorted_files(const std::filesystem::path& dir,
                                             std::initializer_list<const char*> exts) {
  std::vector<std::string> out;
  if (!std::filesystem::is_directory(dir))
    throw std::runtime_error("dataset: missing directory " + dir.string());
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    for (const char* e : exts)
      if (ext == e) {
        out.push_back(entry.path().string());
        break;
      }
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline int frame_index_of(const std::string& path) {
  const std::string stem = std::filesystem::path(path).stem().string();
  try {
    return std::stoi(stem);
  } catch (const std::exception&) {
    throw std::runtime_error("dataset: frame file name is not an index: " + path);
  }
}

}  // namespace detail

inline SequenceSpec load_sequence(const std::filesystem::path& root, DatasetKind kind,
                                  const std::string& name) {
  namespace fs = std::filesystem;
  SequenceSpec spec;
  spec.name = name;

  spec.frame_paths =
      detail::sorted_files(root / "JPEGImages" / "480p" / name, {".jpg", ".jpeg", ".png"});
  if (spec.frame_paths.empty())
    throw std::runtime_error("dataset: no frames for sequence " + name);

  const std::vector<std::string> annots =
      detail::sorted_files(root / "Annotations" / "480p" / name, {".png"});
  for (const std::string& p : annots) spec.annotation_paths[detail::frame_index_of(p)] = p;
  if (spec.annotation_paths.empty())
    throw std::runtime_error("dataset: no annotations for sequence " + name);

  {
    const LabelImage first = read_label_png(spec.annotation_paths.begin()->second);
    spec.width = first.labels.width();
    spec.height = first.labels.height();
  }

  if (kind == DatasetKind::kYtvos) {
    const fs::path meta_path = root / "meta.json";
    std::ifstream in(meta_path);
    if (!in) throw std::runtime_error("dataset: missing " + meta_path.string());
    nlohmann::json meta;
    try {
      in >> meta;
      const nlohmann::json& objects = meta.at("videos").at(name).at("objects");
      for (auto it = objects.begin(); it != objects.end(); ++it) {
        const int id = std::stoi(it.key());
        spec.first_frames[id] = it.value().at("first_frame").get<int>();
        if (it.value().contains("category"))
          spec.categories[id] = it.value().at("category").get<std::string>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("dataset: malformed meta.json for " + name + ": " + e.what());
    }
    if (spec.first_frames.empty())
      throw std::runtime_error("dataset: meta.json declares no objects for " + name);
    // Every declared object must be present in its first frame's annotation.
    for (const auto& [id, first] : spec.first_frames) {
      const auto it = spec.annotation_paths.find(first);
      if (it == spec.annotation_paths.end())
        throw std::runtime_error("dataset: object " + std::to_string(id) +
                                 " of " + name + " has no annotation at frame " +
                                 std::to_string(first));
      const LabelImage img = read_label_png(it->second);
      const auto ids = img.labels.ids();
      if (std::find(ids.begin(), ids.end(), id) == ids.end())
        throw std::runtime_error("dataset: object " + std::to_string(id) +
                                 " missing from its first-frame annotation in " + name);
    }
  } else {
    // davis and exported-synthetic: all objects start at the first annotated
    // frame (frame 0 by construction).
    const auto& [first_index, first_path] = *spec.annotation_paths.begin();
    const LabelImage first = read_label_png(first_path);
    for (int id : first.labels.ids()) spec.first_frames[id] = first_index;
    if (spec.first_frames.empty())
      throw std::runtime_error("dataset: first annotation of " + name + " has no objects");
  }
  return spec;
}

inline SceneScript load_scene_script(const std::filesystem::path& root,
                                     const std::string& name) {
  const std::filesystem::path path = root / "Scripts" / (name + ".json");
  std::ifstream in(path);
  if (!in) throw std::runtime_error("dataset: missing script " + path.string());
  nlohmann::json j;
  in >> j;
  return script_from_json(j);
}

/// Sequence names listed in the split file, in order.
inline std::vector<std::string> list_sequences(const std::filesystem::path& root) {
  const std::filesystem::path path = root / "ImageSets" / "2017" / "val.txt";
  std::ifstream in(path);
  if (!in) throw std::runtime_error("dataset: missing " + path.string());
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) names.push_back(line);
  return names;
}

}  // namespace pdtrack
