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

// Command-line surface. Subcommands:
//   track        run the tracker over a sequence, write label PNGs + CSVs
//   eval         score a prediction tree against a ground-truth tree
//   oracle       prompt-perturbation sensitivity grid
//   synth-gen    export the built-in synthetic suites to a dataset tree
//   trace-check  validate a recorded backend cache
// Exit codes: 0 success, 1 bad input (flags, config, validation), 2 runtime
// failure (missing files, backend errors).

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pdtrack/config.hpp"
#include "pdtrack/dataset.hpp"
#include "pdtrack/features.hpp"
#include "pdtrack/metrics.hpp"
#include "pdtrack/oracle_grid.hpp"
#include "pdtrack/png_io.hpp"
#include "pdtrack/replay.hpp"
#include "pdtrack/synthetic.hpp"
#include "pdtrack/tracker.hpp"

namespace pdtrack {
namespace clidetail {

inline std::string frame_name(int t) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%05d", t);
  return buf;
}

struct LoadedSequence {
  std::string name;
  std::vector<RgbImage> frames;
  std::vector<InitObject> inits;                  // ascending id
  std::unique_ptr<SegmentationBackend> backend;   // owned unless replaying
};

inline SceneScript suite_script(const std::string& seq, std::uint64_t seed) {
  const auto scripts = make_benchmark_scripts(seed);
  const auto it = scripts.find(seq);
  if (it == scripts.end()) {
    std::string names;
    for (const auto& [name, script] : scripts) names += " " + name;
    throw std::invalid_argument("unknown suite sequence '" + seq + "'; available:" + names);
  }
  return it->second;
}

/// First-appearance initialization masks from per-frame ground truth.
inline std::vector<InitObject> inits_from_labels(const std::vector<LabelMap>& gts) {
  std::vector<InitObject> inits;
  std::set<int> seen;
  for (std::size_t t = 0; t < gts.size(); ++t)
    for (int id : gts[t].ids())
      if (seen.insert(id).second)
        inits.push_back(InitObject{id, mask_of(gts[t], id), static_cast<int>(t)});
  return inits;
}

inline LoadedSequence load_for_tracking(const std::string& seq, const std::string& kind,
                                        const std::string& root, const RunConfig& rc) {
  LoadedSequence out;
  out.name = seq;

  if (kind == "suite") {
    const SceneScript script = suite_script(seq, rc.seed);
    out.frames.reserve(script.frame_count);
    std::vector<LabelMap> gts;
    gts.reserve(script.frame_count);
    for (int t = 0; t < script.frame_count; ++t) {
      auto [image, labels] = render_frame(script, t);
      out.frames.push_back(std::move(image));
      gts.push_back(std::move(labels));
    }
    out.inits = inits_from_labels(gts);
    if (rc.backend_kind == BackendKind::kSynthetic)
      out.backend = std::make_unique<SyntheticOracleBackend>(script, rc.oracle_params);
  } else {
    if (root.empty()) throw std::invalid_argument("--root is required for kind " + kind);
    DatasetKind dk;
    if (kind == "davis")
      dk = DatasetKind::kDavis;
    else if (kind == "ytvos")
      dk = DatasetKind::kYtvos;
    else if (kind == "exported-synthetic")
      dk = DatasetKind::kExportedSynthetic;
    else
      throw std::invalid_argument("unknown dataset kind '" + kind + "'");
    const SequenceSpec spec = load_sequence(root, dk, seq);
    out.frames.reserve(spec.frame_paths.size());
    for (const std::string& p : spec.frame_paths) out.frames.push_back(read_frame(p));
    for (const auto& [id, first] : spec.first_frames) {
      const auto it = spec.annotation_paths.find(first);
      if (it == spec.annotation_paths.end())
        throw std::runtime_error("sequence " + seq + ": object " + std::to_string(id) +
                                 " has no annotation at frame " + std::to_string(first));
      out.inits.push_back(InitObject{id, mask_of(read_label_png(it->second).labels, id), first});
    }
    if (rc.backend_kind == BackendKind::kSynthetic) {
      if (dk != DatasetKind::kExportedSynthetic)
        throw std::invalid_argument("kind " + kind +
                                    " has no scene script; use --replay with a recorded cache");
      out.backend = std::make_unique<SyntheticOracleBackend>(load_scene_script(root, seq),
                                                             rc.oracle_params);
    }
  }

  if (rc.backend_kind == BackendKind::kReplay)
    out.backend = replay_load(rc.replay_dir);
  return out;
}

inline void write_track_outputs(const std::filesystem::path& out_dir, const std::string& seq,
                                const std::vector<FrameOutput>& outputs) {
  namespace fs = std::filesystem;
  const fs::path seq_dir = out_dir / seq;
  fs::create_directories(seq_dir);
  const Palette palette = default_palette();
  std::ofstream diag(seq_dir / "diagnostics.csv");
  if (!diag) throw std::runtime_error("cannot write " + (seq_dir / "diagnostics.csv").string());
  diag << "frame,object,semantic_score,area_normalized_score,iou_prediction\n";
  char line[160];
  for (const FrameOutput& fo : outputs) {
    write_label_png(fo.label_map, palette,
                    (seq_dir / (frame_name(fo.frame_index) + ".png")).string());
    for (const auto& [id, d] : fo.diagnostics) {
      std::snprintf(line, sizeof line, "%d,%d,%.6f,%.6f,%.6f", fo.frame_index, id,
                    d.semantic_score, d.area_normalized_score, d.iou_prediction);
      diag << line << "\n";
    }
  }
}

/// Peak response of each object's initial template against every frame.
/// Diagnostic only; the tracking pipeline itself does not use the heatmap.
inline void write_heatmap_csv(const std::filesystem::path& out_dir, const std::string& seq,
                              const std::vector<RgbImage>& frames,
                              const std::vector<InitObject>& inits,
                              const TrackerConfig& config) {
  namespace fs = std::filesystem;
  const fs::path seq_dir = out_dir / seq;
  fs::create_directories(seq_dir);
  std::ofstream out(seq_dir / "heatmap.csv");
  if (!out) throw std::runtime_error("cannot write " + (seq_dir / "heatmap.csv").string());
  out << "frame,object,peak_cell_x,peak_cell_y,peak_score\n";

  std::map<int, TemplateEmbedding> templates;
  for (const InitObject& init : inits) {
    if (init.first_frame >= static_cast<int>(frames.size()) || init.mask.empty()) continue;
    templates.emplace(init.id,
                      extract_template(encode(frames[init.first_frame], config.feature_stride),
                                       bbox(init.mask), init.mask));
  }
  char line[128];
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const FeatureGrid grid = encode(frames[t], config.feature_stride);
    for (const auto& [id, tmpl] : templates) {
      const Grid<double> heat = heatmap_correlate(tmpl, grid);
      int px = 0, py = 0;
      double peak = heat.width() > 0 ? heat(0, 0) : 0.0;
      for (int y = 0; y < heat.height(); ++y)
        for (int x = 0; x < heat.width(); ++x)
          if (heat(x, y) > peak) {
            peak = heat(x, y);
            px = x;
            py = y;
          }
      std::snprintf(line, sizeof line, "%zu,%d,%d,%d,%.6f", t, id, px, py, peak);
      out << line << "\n";
    }
  }
}

struct TrackArgs {
  std::string config_path;
  std::string backend;  // "", "synthetic", "replay"
  std::string seq;
  std::string kind = "suite";
  std::string root;
  std::string out;
  std::string record;
  std::string replay;
  std::int64_t seed = -1;
  bool auto_init = false;
  bool diag_heatmap = false;
};

inline void cmd_track(const TrackArgs& args) {
  RunConfig rc = args.config_path.empty() ? RunConfig{} : load_run_config(args.config_path);
  if (!args.backend.empty()) {
    if (args.backend == "synthetic")
      rc.backend_kind = BackendKind::kSynthetic;
    else if (args.backend == "replay")
      rc.backend_kind = BackendKind::kReplay;
    else
      throw std::invalid_argument("unknown backend '" + args.backend + "'");
  }
  if (!args.replay.empty()) {
    rc.backend_kind = BackendKind::kReplay;
    rc.replay_dir = args.replay;
  }
  if (!args.record.empty()) rc.record_dir = args.record;
  if (args.seed >= 0) rc.seed = static_cast<std::uint64_t>(args.seed);
  if (!args.out.empty()) rc.output_dir = args.out;
  validate_run_config(rc);

  LoadedSequence seq = load_for_tracking(args.seq, args.kind, args.root, rc);
  SegmentationBackend* backend = seq.backend.get();
  std::unique_ptr<RecordingBackend> recorder;
  if (!rc.record_dir.empty()) {
    recorder = std::make_unique<RecordingBackend>(
        *backend, rc.record_dir, "pdtrack track " + args.kind + "/" + args.seq);
    backend = recorder.get();
  }

  const std::vector<FrameOutput> outputs =
      args.auto_init ? run_sequence_auto(seq.frames, *backend, rc.tracker)
                     : run_sequence(seq.frames, seq.inits, *backend, rc.tracker);
  write_track_outputs(rc.output_dir, args.seq, outputs);
  if (args.diag_heatmap)
    write_heatmap_csv(rc.output_dir, args.seq, seq.frames, seq.inits, rc.tracker);
  std::cout << "tracked " << args.seq << ": " << outputs.size() << " frames -> "
            << (std::filesystem::path(rc.output_dir) / args.seq).string() << "\n";
}

/// Reads every 5-digit label PNG under dir, keyed by frame index.
inline std::map<int, LabelMap> read_label_tree(const std::filesystem::path& dir) {
  std::map<int, LabelMap> out;
  if (!std::filesystem::is_directory(dir))
    throw std::runtime_error("eval: missing directory " + dir.string());
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".png") continue;
    int t = 0;
    try {
      t = std::stoi(entry.path().stem().string());
    } catch (const std::exception&) {
      continue;  // not a frame file (e.g. stray image)
    }
    out.emplace(t, read_label_png(entry.path().string()).labels);
  }
  if (out.empty()) throw std::runtime_error("eval: no label PNGs under " + dir.string());
  return out;
}

inline void cmd_eval(const std::string& pred_root, const std::string& gt_root,
                     const std::string& out_path) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(gt_root))
    throw std::runtime_error("eval: missing ground-truth directory " + gt_root);
  std::vector<std::string> sequences;
  for (const auto& entry : fs::directory_iterator(gt_root))
    if (entry.is_directory()) sequences.push_back(entry.path().filename().string());
  std::sort(sequences.begin(), sequences.end());
  if (sequences.empty()) throw std::runtime_error("eval: no sequences under " + gt_root);

  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("eval: cannot write " + out_path);
  out << "seq,object,J,F,JF\n";
  char line[192];
  double sum_j = 0.0, sum_f = 0.0;
  int counted = 0;
  for (const std::string& seq : sequences) {
    const std::map<int, LabelMap> gt_by_frame = read_label_tree(fs::path(gt_root) / seq);
    const std::map<int, LabelMap> pred_by_frame = read_label_tree(fs::path(pred_root) / seq);

    std::vector<LabelMap> gts;
    std::map<int, std::vector<BinaryMask>> preds;
    std::map<int, int> first_frames;
    int slot = 0;
    for (const auto& [t, gt] : gt_by_frame) {
      const auto it = pred_by_frame.find(t);
      if (it == pred_by_frame.end())
        throw std::runtime_error("eval: " + seq + " is missing a prediction for frame " +
                                 std::to_string(t));
      for (int id : gt.ids())
        if (!first_frames.count(id)) first_frames[id] = slot;
      gts.push_back(gt);
      ++slot;
    }
    for (const auto& [id, first] : first_frames) {
      auto& track = preds[id];
      track.reserve(gts.size());
      for (const auto& [t, gt] : gt_by_frame) track.push_back(mask_of(pred_by_frame.at(t), id));
    }

    const SequenceEval eval = sequence_scores(preds, gts, first_frames);
    for (const auto& [id, score] : eval.objects) {
      if (!score.counted) continue;
      std::snprintf(line, sizeof line, "%s,%d,%.6f,%.6f,%.6f", seq.c_str(), id, score.mean_j,
                    score.mean_f, 0.5 * (score.mean_j + score.mean_f));
      out << line << "\n";
      sum_j += score.mean_j;
      sum_f += score.mean_f;
      ++counted;
    }
  }
  const double mean_j = counted == 0 ? 1.0 : sum_j / counted;
  const double mean_f = counted == 0 ? 1.0 : sum_f / counted;
  std::snprintf(line, sizeof line, "all,all,%.6f,%.6f,%.6f", mean_j, mean_f,
                0.5 * (mean_j + mean_f));
  out << line << "\n";
  std::cout << "evaluated " << sequences.size() << " sequence(s), " << counted
            << " object track(s) -> " << out_path << "\n";
}

inline void cmd_oracle(const std::string& seq, const std::string& config_path,
                       std::int64_t seed, int multiprompt, const std::string& out_path) {
  RunConfig rc = config_path.empty() ? RunConfig{} : load_run_config(config_path);
  if (seed >= 0) rc.seed = static_cast<std::uint64_t>(seed);
  if (multiprompt >= 0) rc.oracle.multiprompt = multiprompt != 0;
  validate_run_config(rc);

  const SceneScript script = suite_script(seq, rc.seed);
  std::vector<RgbImage> frames;
  std::vector<LabelMap> gts;
  frames.reserve(script.frame_count);
  gts.reserve(script.frame_count);
  for (int t = 0; t < script.frame_count; ++t) {
    auto [image, labels] = render_frame(script, t);
    frames.push_back(std::move(image));
    gts.push_back(std::move(labels));
  }
  SyntheticOracleBackend backend(script, rc.oracle_params);
  const OracleGridResult grid =
      run_oracle_grid(frames, gts, backend, rc.oracle.translations, rc.oracle.scales,
                      rc.oracle.multiprompt, rc.tracker);
  write_oracle_csv(grid, out_path);
  std::cout << "oracle grid for " << seq << ": " << grid.translations.size() << "x"
            << grid.scales.size() << " cells -> " << out_path << "\n";
}

inline void cmd_synth_gen(const std::string& out_root, std::uint64_t seed) {
  const auto scripts = make_benchmark_scripts(seed);
  for (const auto& [name, script] : scripts) export_synthetic(script, name, out_root);
  std::cout << "exported " << scripts.size() << " sequence(s) -> " << out_root << "\n";
}

inline void cmd_trace_check(const std::string& cache_dir) {
  const int records = validate_trace(cache_dir);
  std::cout << "trace ok: " << records << " record(s)\n";
}

}  // namespace clidetail

inline int cli_main(int argc, const char* const* argv) {
  CLI::App app{"prompt-denoising video object tracker"};
  app.require_subcommand(1);

  clidetail::TrackArgs track_args;
  CLI::App* track = app.add_subcommand("track", "track objects through a sequence");
  track->add_option("--config", track_args.config_path, "run configuration file");
  track->add_option("--backend", track_args.backend, "synthetic|replay")
      ->check(CLI::IsMember({"synthetic", "replay"}));
  track->add_option("--seq", track_args.seq, "sequence name")->required();
  track->add_option("--kind", track_args.kind, "suite|davis|ytvos|exported-synthetic")
      ->check(CLI::IsMember({"suite", "davis", "ytvos", "exported-synthetic"}));
  track->add_option("--root", track_args.root, "dataset root directory");
  track->add_option("--out", track_args.out, "output directory");
  track->add_option("--record", track_args.record, "record backend queries to this cache");
  track->add_option("--replay", track_args.replay, "replay backend queries from this cache");
  track->add_option("--seed", track_args.seed, "suite generation seed");
  track->add_flag("--auto", track_args.auto_init, "discover objects on the first frame");
  track->add_flag("--diag-heatmap", track_args.diag_heatmap,
                  "also write template-correlation peaks per frame");

  std::string eval_pred, eval_gt, eval_out = "eval.csv";
  CLI::App* eval = app.add_subcommand("eval", "score predictions against ground truth");
  eval->add_option("--pred", eval_pred, "prediction tree (per-sequence label PNGs)")
      ->required();
  eval->add_option("--gt", eval_gt, "ground-truth tree")->required();
  eval->add_option("--out", eval_out, "report CSV path");

  std::string oracle_seq, oracle_config, oracle_out = "oracle.csv";
  std::int64_t oracle_seed = -1;
  int oracle_multi = -1;
  CLI::App* oracle = app.add_subcommand("oracle", "prompt-perturbation sensitivity grid");
  oracle->add_option("--seq", oracle_seq, "suite sequence name")->required();
  oracle->add_option("--config", oracle_config, "run configuration file");
  oracle->add_option("--seed", oracle_seed, "suite generation seed");
  oracle->add_option("--multiprompt", oracle_multi, "0 or 1; run the candidate-grid stage");
  oracle->add_option("--out", oracle_out, "grid CSV path");

  std::string gen_out;
  std::uint64_t gen_seed = 17;
  CLI::App* gen = app.add_subcommand("synth-gen", "export the built-in synthetic suites");
  gen->add_option("--out", gen_out, "dataset root to create")->required();
  gen->add_option("--seed", gen_seed, "suite generation seed");

  std::string check_cache;
  CLI::App* check = app.add_subcommand("trace-check", "validate a recorded backend cache");
  check->add_option("--cache", check_cache, "cache directory")->required();

  try {
    app.parse(argc, argv);
    if (track->parsed()) clidetail::cmd_track(track_args);
    if (eval->parsed()) clidetail::cmd_eval(eval_pred, eval_gt, eval_out);
    if (oracle->parsed())
      clidetail::cmd_oracle(oracle_seq, oracle_config, oracle_seed, oracle_multi, oracle_out);
    if (gen->parsed()) clidetail::cmd_synth_gen(gen_out, gen_seed);
    if (check->parsed()) clidetail::cmd_trace_check(check_cache);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace pdtrack
