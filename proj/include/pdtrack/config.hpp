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

// Run configuration: every tracker hyperparameter and ablation toggle is a
// key in a flat sectioned text file ([tracker], [backend], [run], [oracle]),
// so an experiment variant is a config diff. Unknown keys and out-of-range
// values are rejected with the offending name.
//
// Syntax per line: `key = value` under a `[section]` header; `#` or `;`
// starts a comment; lists are comma-separated, with optional [ ] brackets.

#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdtrack/synthetic.hpp"
#include "pdtrack/tracker.hpp"

namespace pdtrack {

enum class BackendKind { kSynthetic, kReplay };

struct OracleGridConfig {
  std::vector<double> translations{-0.18, -0.12, -0.06, 0.0, 0.06, 0.12, 0.18};
  std::vector<double> scales{0.92, 1.00, 1.08};
  bool multiprompt = false;

  friend bool operator==(const OracleGridConfig&, const OracleGridConfig&) = default;
};

struct RunConfig {
  TrackerConfig tracker;
  BackendKind backend_kind = BackendKind::kSynthetic;
  OracleParams oracle_params;     // synthetic backend imperfection model
  std::string replay_dir;         // replay backend cache
  std::string record_dir;         // optional trace recording
  std::uint64_t seed = 17;
  std::string output_dir = "out";
  OracleGridConfig oracle;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

inline void validate_run_config(const RunConfig& c) {
  validate_config(c.tracker);
  if (c.tracker.step_frac > 1.0)
    throw std::invalid_argument("run config: step_frac must be in [0, 1]");
  if (c.backend_kind == BackendKind::kReplay && c.replay_dir.empty())
    throw std::invalid_argument("run config: replay_dir is required for the replay backend");
  if (c.oracle_params.match_threshold < 0.0 || c.oracle_params.match_threshold > 1.0)
    throw std::invalid_argument("run config: match_threshold must be in [0, 1]");
  if (c.oracle_params.clip_slack < 0)
    throw std::invalid_argument("run config: clip_slack must be >= 0");
  if (c.oracle_params.iou_noise_amplitude < 0.0)
    throw std::invalid_argument("run config: iou_noise_amplitude must be >= 0");
  if (c.output_dir.empty())
    throw std::invalid_argument("run config: output_dir must be non-empty");
  if (c.oracle.translations.empty())
    throw std::invalid_argument("run config: oracle translations must be non-empty");
  if (c.oracle.scales.empty())
    throw std::invalid_argument("run config: oracle scales must be non-empty");
  for (double s : c.oracle.scales)
    if (s <= 0.0) throw std::invalid_argument("run config: oracle scales must be positive");
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& value, const std::string& key) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: " + key + " expects a number, got '" + value + "'");
  }
  if (used != value.size())
    throw std::invalid_argument("config: " + key + " expects a number, got '" + value + "'");
  return v;
}

inline long long parse_int(const std::string& value, const std::string& key) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: " + key + " expects an integer, got '" + value +
                                "'");
  }
  if (used != value.size())
    throw std::invalid_argument("config: " + key + " expects an integer, got '" + value +
                                "'");
  return v;
}

inline bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw std::invalid_argument("config: " + key + " expects true or false, got '" + value +
                              "'");
}

inline std::vector<double> parse_double_list(std::string value, const std::string& key) {
  if (!value.empty() && value.front() == '[' && value.back() == ']')
    value = value.substr(1, value.size() - 2);
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty())
      throw std::invalid_argument("config: " + key + " has an empty list element");
    out.push_back(parse_double(item, key));
  }
  if (out.empty()) throw std::invalid_argument("config: " + key + " expects a list");
  return out;
}

inline void apply_key(RunConfig& c, const std::string& section, const std::string& key,
                      const std::string& value) {
  const std::string full = section + "." + key;
  if (section == "tracker") {
    TrackerConfig& t = c.tracker;
    if (key == "grid_n")
      t.grid_n = static_cast<int>(parse_int(value, full));
    else if (key == "step_frac")
      t.step_frac = parse_double(value, full);
    else if (key == "scales")
      t.scales = parse_double_list(value, full);
    else if (key == "selection_mode") {
      if (value == "semantic")
        t.selection_mode = SelectionMode::kSemantic;
      else if (value == "iou_prev")
        t.selection_mode = SelectionMode::kIouPrev;
      else
        throw std::invalid_argument(
            "config: tracker.selection_mode must be semantic or iou_prev, got '" + value +
            "'");
    } else if (key == "refine_mode") {
      if (value == "max_area")
        t.refine_mode = RefineMode::kMaxArea;
      else if (value == "max_iou_prev")
        t.refine_mode = RefineMode::kMaxIouPrev;
      else
        throw std::invalid_argument(
            "config: tracker.refine_mode must be max_area or max_iou_prev, got '" + value +
            "'");
    } else if (key == "use_neg_in_multiprompt")
      t.use_neg_in_multiprompt = parse_bool(value, full);
    else if (key == "use_neg_in_refine")
      t.use_neg_in_refine = parse_bool(value, full);
    else if (key == "enable_multiprompt")
      t.enable_multiprompt = parse_bool(value, full);
    else if (key == "enable_refine")
      t.enable_refine = parse_bool(value, full);
    else if (key == "feature_stride")
      t.feature_stride = static_cast<int>(parse_int(value, full));
    else if (key == "vis_grid_points")
      t.vis_grid_points = static_cast<int>(parse_int(value, full));
    else if (key == "vis_max_masks")
      t.vis_max_masks = static_cast<int>(parse_int(value, full));
    else if (key == "vis_nms_iou")
      t.vis_nms_iou = parse_double(value, full);
    else
      throw std::invalid_argument("config: unknown key " + full);
  } else if (section == "backend") {
    if (key == "kind") {
      if (value == "synthetic")
        c.backend_kind = BackendKind::kSynthetic;
      else if (value == "replay")
        c.backend_kind = BackendKind::kReplay;
      else
        throw std::invalid_argument(
            "config: backend.kind must be synthetic or replay, got '" + value + "'");
    } else if (key == "match_threshold")
      c.oracle_params.match_threshold = parse_double(value, full);
    else if (key == "clip_slack")
      c.oracle_params.clip_slack = static_cast<int>(parse_int(value, full));
    else if (key == "iou_noise_amplitude")
      c.oracle_params.iou_noise_amplitude = parse_double(value, full);
    else if (key == "replay_dir")
      c.replay_dir = value;
    else if (key == "record_dir")
      c.record_dir = value;
    else
      throw std::invalid_argument("config: unknown key " + full);
  } else if (section == "run") {
    if (key == "seed")
      c.seed = static_cast<std::uint64_t>(parse_int(value, full));
    else if (key == "output_dir")
      c.output_dir = value;
    else
      throw std::invalid_argument("config: unknown key " + full);
  } else if (section == "oracle") {
    if (key == "translations")
      c.oracle.translations = parse_double_list(value, full);
    else if (key == "scales")
      c.oracle.scales = parse_double_list(value, full);
    else if (key == "multiprompt")
      c.oracle.multiprompt = parse_bool(value, full);
    else
      throw std::invalid_argument("config: unknown key " + full);
  } else {
    throw std::invalid_argument("config: unknown section [" + section + "]");
  }
}

}  // namespace detail

/// Parses config text into a validated RunConfig over the defaults.
inline RunConfig parse_run_config(const std::string& text) {
  RunConfig config;
  std::string section;
  std::stringstream ss(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(ss, raw)) {
    ++line_no;
    std::string line = raw;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config: malformed section header on line " +
                                    std::to_string(line_no));
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key = value on line " +
                                  std::to_string(line_no));
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (section.empty())
      throw std::invalid_argument("config: key '" + key + "' before any [section]");
    if (key.empty())
      throw std::invalid_argument("config: empty key on line " + std::to_string(line_no));
    detail::apply_key(config, section, key, value);
  }
  validate_run_config(config);
  return config;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

}  // namespace pdtrack
