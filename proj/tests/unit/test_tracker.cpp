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

#include <algorithm>
#include <catch2/catch_amalgamated.hpp>
#include <map>
#include <utility>
#include <vector>

#include "pdtrack/backend.hpp"
#include "pdtrack/synthetic.hpp"
#include "pdtrack/tracker.hpp"

using namespace pdtrack;
using Catch::Matchers::ContainsSubstring;

namespace {

std::vector<RgbImage> render_all(const SceneScript& script) {
  std::vector<RgbImage> frames;
  frames.reserve(script.frame_count);
  for (int t = 0; t < script.frame_count; ++t)
    frames.push_back(render_frame(script, t).first);
  return frames;
}

using pdtrack::mask_of;

InitObject gt_init(SyntheticOracleBackend& backend, int id, int first_frame = 0) {
  return InitObject{id, mask_of(backend.ground_truth(first_frame), id), first_frame};
}

// Forwards every query to an inner oracle while recording it, so tests can
// assert what the tracker actually asked for.
class ProbeBackend : public SegmentationBackend {
 public:
  struct BoxCall {
    int frame_index;
    Box box;
    std::vector<Point> negatives;
    BinaryMask mask;
  };
  struct PointCall {
    int frame_index;
    std::vector<Point> positives;
    std::vector<Point> negatives;
    SegmentationResult result;
  };

  explicit ProbeBackend(SyntheticOracleBackend& inner) : inner_(inner) {}

  std::vector<BoxCall> box_calls;
  std::vector<PointCall> point_calls;

 private:
  FrameHandle inner_handle(const FrameHandle& h) const {
    FrameHandle inner = h;
    inner.backend_id = inner_.id();
    return inner;
  }

  FrameHandle do_encode_frame(const RgbImage& image, int frame_index) override {
    return inner_.encode_frame(image, frame_index);
  }
  SegmentationResult do_segment_box(const FrameHandle& frame, const Box& box,
                                    const std::vector<Point>& negatives) override {
    SegmentationResult r = inner_.segment_box(inner_handle(frame), box, negatives);
    box_calls.push_back(BoxCall{frame.frame_index, box, negatives, r.masks[0]});
    return r;
  }
  SegmentationResult do_segment_points(const FrameHandle& frame,
                                       const std::vector<Point>& positives,
                                       const std::vector<Point>& negatives) override {
    SegmentationResult r = inner_.segment_points(inner_handle(frame), positives, negatives);
    point_calls.push_back(PointCall{frame.frame_index, positives, negatives, r});
    return r;
  }

  SyntheticOracleBackend& inner_;
};

class ThrowingBackend : public SegmentationBackend {
 private:
  FrameHandle do_encode_frame(const RgbImage& image, int frame_index) override {
    FrameHandle h;
    h.frame_index = frame_index;
    h.width = image.width();
    h.height = image.height();
    return h;
  }
  SegmentationResult do_segment_box(const FrameHandle&, const Box&,
                                    const std::vector<Point>&) override {
    throw std::runtime_error("backend exploded");
  }
  SegmentationResult do_segment_points(const FrameHandle&, const std::vector<Point>&,
                                       const std::vector<Point>&) override {
    throw std::runtime_error("backend exploded");
  }
};

// Static rectangle that disappears for frames [gone_from, gone_until).
SceneScript blink_script(int gone_from, int gone_until) {
  SceneScript s;
  s.width = 200;
  s.height = 150;
  s.frame_count = 16;
  SceneObject o;
  o.id = 1;
  o.shape = ShapeKind::kRectangle;
  o.color = {200, 60, 60};
  o.base_size = 60;
  o.trajectory = {{0, 100.0, 75.0}};
  o.absent = {{gone_from, gone_until}};
  s.objects.push_back(std::move(o));
  return s;
}

// Two separated static rectangles.
SceneScript two_rect_script() {
  SceneScript s;
  s.width = 240;
  s.height = 120;
  s.frame_count = 12;
  for (int i = 0; i < 2; ++i) {
    SceneObject o;
    o.id = i + 1;
    o.shape = ShapeKind::kRectangle;
    o.color = {static_cast<std::uint8_t>(80 + 100 * i), 60, 200};
    o.base_size = 50;
    o.trajectory = {{0, 60.0 + 120.0 * i, 60.0}};
    s.objects.push_back(std::move(o));
  }
  return s;
}

}  // namespace

TEST_CASE("tracker config validation names the offending field", "[tracker]") {
  TrackerConfig c;
  REQUIRE_NOTHROW(validate_config(c));

  c = TrackerConfig{};
  c.grid_n = 2;
  REQUIRE_THROWS_WITH(validate_config(c), ContainsSubstring("grid_n"));
  c = TrackerConfig{};
  c.grid_n = 0;
  REQUIRE_THROWS_WITH(validate_config(c), ContainsSubstring("grid_n"));
  c = TrackerConfig{};
  c.step_frac = -0.1;
  REQUIRE_THROWS_WITH(validate_config(c), ContainsSubstring("step_frac"));
  c = TrackerConfig{};
  c.scales.clear();
  REQUIRE_THROWS_WITH(validate_config(c), ContainsSubstring("scales"));
  c = TrackerConfig{};
  c.scales = {1.0, 0.0};
  REQUIRE_THROWS_WITH(validate_config(c), ContainsSubstring("scales"));
  c = TrackerConfig{};
  c.feature_stride = 0;
  REQUIRE_THROWS_WITH(validate_config(c), ContainsSubstring("feature_stride"));
  c = TrackerConfig{};
  c.vis_grid_points = 0;
  REQUIRE_THROWS_WITH(validate_config(c), ContainsSubstring("vis_grid_points"));
  c = TrackerConfig{};
  c.vis_max_masks = -1;
  REQUIRE_THROWS_WITH(validate_config(c), ContainsSubstring("vis_max_masks"));
  c = TrackerConfig{};
  c.vis_nms_iou = 1.5;
  REQUIRE_THROWS_WITH(validate_config(c), ContainsSubstring("vis_nms_iou"));
}

TEST_CASE("init_from_masks rejects bad inputs and freezes templates", "[tracker]") {
  auto scripts = make_benchmark_scripts(7);
  SyntheticOracleBackend backend(scripts.at("slow-rigid"));
  const RgbImage frame0 = render_frame(backend.script(), 0).first;
  const BinaryMask gt = mask_of(backend.ground_truth(0), 1);
  TrackerConfig config;

  SECTION("valid single object starts active") {
    TrackerState state = init_from_masks(frame0, {InitObject{1, gt, 0}}, config);
    REQUIRE(state.objects.size() == 1);
    CHECK(state.objects[0].status == ObjectStatus::kActive);
    CHECK(state.objects[0].last_mask == gt);
    CHECK(state.objects[0].last_box == bbox(gt));
    CHECK(state.width == frame0.width());
    CHECK(state.height == frame0.height());
  }
  SECTION("objects are stored in ascending id order") {
    TrackerState state = init_from_masks(
        frame0, {InitObject{5, gt, 0}, InitObject{2, gt, 3}}, config);
    REQUIRE(state.objects.size() == 2);
    CHECK(state.objects[0].id == 2);
    CHECK(state.objects[0].status == ObjectStatus::kPending);
    CHECK(state.objects[1].id == 5);
  }
  SECTION("empty mask is rejected") {
    BinaryMask empty(frame0.width(), frame0.height());
    REQUIRE_THROWS_WITH(init_from_masks(frame0, {InitObject{1, empty, 0}}, config),
                        ContainsSubstring("empty"));
  }
  SECTION("duplicate ids are rejected") {
    REQUIRE_THROWS_WITH(
        init_from_masks(frame0, {InitObject{1, gt, 0}, InitObject{1, gt, 0}}, config),
        ContainsSubstring("duplicate"));
  }
  SECTION("mask dimensions must match the frame") {
    BinaryMask wrong(10, 10, true);
    REQUIRE_THROWS_WITH(init_from_masks(frame0, {InitObject{1, wrong, 0}}, config),
                        ContainsSubstring("dimensions"));
  }
  SECTION("ids below 1 are rejected") {
    REQUIRE_THROWS_AS(init_from_masks(frame0, {InitObject{0, gt, 0}}, config),
                      std::invalid_argument);
  }
  SECTION("negative first frame is rejected") {
    REQUIRE_THROWS_AS(init_from_masks(frame0, {InitObject{1, gt, -1}}, config),
                      std::invalid_argument);
  }
}

TEST_CASE("the default pipeline tracks slow rigid motion exactly", "[tracker]") {
  auto scripts = make_benchmark_scripts(11);
  SyntheticOracleBackend backend(scripts.at("slow-rigid"));
  const std::vector<RgbImage> frames = render_all(backend.script());
  TrackerConfig config;

  const auto outputs = run_sequence(frames, {gt_init(backend, 1)}, backend, config);
  REQUIRE(outputs.size() == frames.size());
  for (std::size_t t = 0; t < outputs.size(); ++t) {
    const BinaryMask gt = mask_of(backend.ground_truth(static_cast<int>(t)), 1);
    INFO("frame " << t);
    REQUIRE(iou(outputs[t].masks.at(1), gt) == 1.0);
    REQUIRE(outputs[t].label_map == backend.ground_truth(static_cast<int>(t)));
  }

  SECTION("active frames carry diagnostics, the first frame does not") {
    CHECK(outputs[0].diagnostics.at(1) == ObjectDiagnostics{});
    for (std::size_t t = 1; t < outputs.size(); ++t) {
      const ObjectDiagnostics& d = outputs[t].diagnostics.at(1);
      CHECK(d.semantic_score > 0.0);
      CHECK(d.iou_prediction > 0.0);
    }
  }
  SECTION("previous-mask overlap selection tracks it exactly too") {
    SyntheticOracleBackend backend2(scripts.at("slow-rigid"));
    TrackerConfig alt = config;
    alt.selection_mode = SelectionMode::kIouPrev;
    alt.refine_mode = RefineMode::kMaxIouPrev;
    const auto alt_out = run_sequence(frames, {gt_init(backend2, 1)}, backend2, alt);
    for (std::size_t t = 0; t < alt_out.size(); ++t) {
      const BinaryMask gt = mask_of(backend2.ground_truth(static_cast<int>(t)), 1);
      INFO("frame " << t);
      REQUIRE(iou(alt_out[t].masks.at(1), gt) == 1.0);
    }
  }
}

TEST_CASE("bare box propagation erodes a moving object and loses it", "[tracker]") {
  auto scripts = make_benchmark_scripts(11);
  OracleParams tight;
  tight.clip_slack = 0;
  SyntheticOracleBackend backend(scripts.at("slow-rigid"), tight);
  const std::vector<RgbImage> frames = render_all(backend.script());

  TrackerConfig vanilla;
  vanilla.enable_multiprompt = false;
  vanilla.enable_refine = false;

  const auto outputs = run_sequence(frames, {gt_init(backend, 1)}, backend, vanilla);

  long long prev_area = -1;
  bool ever_lost = false;
  for (std::size_t t = 0; t < outputs.size(); ++t) {
    const BinaryMask& m = outputs[t].masks.at(1);
    if (m.empty()) {
      ever_lost = true;
      continue;
    }
    // Until the object is lost its box can only shrink: each new mask is
    // confined to the previous box while the object keeps moving out of it.
    const long long a = bbox(m).area();
    if (prev_area >= 0) CHECK(a <= prev_area);
    prev_area = a;
  }
  CHECK(ever_lost);
  CHECK(outputs.back().masks.at(1).empty());
  const BinaryMask final_gt = mask_of(backend.ground_truth(backend.script().frame_count - 1), 1);
  CHECK(iou(outputs.back().masks.at(1), final_gt) < 0.5);

  SECTION("point refinement alone repairs the erosion") {
    SyntheticOracleBackend backend2(scripts.at("slow-rigid"), tight);
    TrackerConfig refined = vanilla;
    refined.enable_refine = true;
    const auto fixed = run_sequence(frames, {gt_init(backend2, 1)}, backend2, refined);
    for (std::size_t t = 0; t < fixed.size(); ++t) {
      const BinaryMask gt = mask_of(backend2.ground_truth(static_cast<int>(t)), 1);
      INFO("frame " << t);
      REQUIRE(iou(fixed[t].masks.at(1), gt) == 1.0);
    }
  }
}

namespace {

double mean_j_over(const SceneScript& script, const TrackerConfig& config) {
  SyntheticOracleBackend backend(script);
  const std::vector<RgbImage> frames = render_all(script);
  const auto outputs = run_sequence(frames, {gt_init(backend, 1)}, backend, config);
  double sum = 0.0;
  for (std::size_t t = 1; t < outputs.size(); ++t)
    sum += iou(outputs[t].masks.at(1),
               mask_of(backend.ground_truth(static_cast<int>(t)), 1));
  return sum / static_cast<double>(outputs.size() - 1);
}

}  // namespace

TEST_CASE("fast motion defeats bare propagation but not the full pipeline", "[tracker]") {
  auto scripts = make_benchmark_scripts(11);
  const SceneScript& script = scripts.at("fast-shift");

  TrackerConfig vanilla;
  vanilla.enable_multiprompt = false;
  vanilla.enable_refine = false;

  const double j_vanilla = mean_j_over(script, vanilla);
  const double j_default = mean_j_over(script, TrackerConfig{});
  CHECK(j_vanilla < 0.5);
  CHECK(j_default >= 0.9);
}

TEST_CASE("the prompt grid alone saves jumps a single prompt cannot reach", "[tracker]") {
  // 85%-of-side jumps: the carried-over box overlaps the new position too
  // little to segment at all, but a 10%-shifted grid member still reaches it
  // and refinement rebuilds the whole object from there.
  SceneScript script;
  script.width = 600;
  script.height = 200;
  script.frame_count = 5;
  SceneObject o;
  o.id = 1;
  o.shape = ShapeKind::kRectangle;
  o.color = {60, 180, 90};
  o.base_size = 100;
  o.trajectory = {{0, 100.0, 100.0}, {4, 440.0, 100.0}};
  script.objects.push_back(std::move(o));

  TrackerConfig single;
  single.enable_multiprompt = false;  // refinement stays on
  const double j_single = mean_j_over(script, single);
  const double j_multi = mean_j_over(script, TrackerConfig{});
  CHECK(j_single < 0.5);
  CHECK(j_multi == 1.0);
}

TEST_CASE("a vanished object goes lost, keeps its box, and re-acquires", "[tracker]") {
  SyntheticOracleBackend backend(blink_script(5, 10));
  const std::vector<RgbImage> frames = render_all(backend.script());
  TrackerConfig config;

  TrackerState state = init_from_masks(frames[0], {gt_init(backend, 1)}, config);
  const Box initial_box = state.objects[0].last_box;

  std::vector<FrameOutput> outputs;
  outputs.push_back(initial_output(state));
  for (std::size_t t = 1; t < frames.size(); ++t) {
    outputs.push_back(track_step(state, frames[t], static_cast<int>(t), backend, config));
    const TrackedObject& obj = state.objects[0];
    INFO("frame " << t);
    if (t >= 5 && t < 10) {
      CHECK(obj.status == ObjectStatus::kLost);
      CHECK(obj.last_box == initial_box);  // frozen as the next prompt
      CHECK(obj.last_mask.empty());
      CHECK(outputs[t].masks.at(1).empty());
      CHECK(outputs[t].label_map.ids().empty());
      CHECK(outputs[t].diagnostics.at(1) == ObjectDiagnostics{});
    } else {
      CHECK(obj.status == ObjectStatus::kActive);
      CHECK(iou(outputs[t].masks.at(1),
                mask_of(backend.ground_truth(static_cast<int>(t)), 1)) == 1.0);
      CHECK(outputs[t].diagnostics.at(1).iou_prediction > 0.0);
    }
  }
}

TEST_CASE("pending objects stay silent until their first frame", "[tracker]") {
  SyntheticOracleBackend backend(two_rect_script());
  const std::vector<RgbImage> frames = render_all(backend.script());
  TrackerConfig config;

  const BinaryMask late_mask = mask_of(backend.ground_truth(6), 2);
  const auto outputs = run_sequence(
      frames, {gt_init(backend, 1), InitObject{2, late_mask, 6}}, backend, config);

  for (std::size_t t = 0; t < outputs.size(); ++t) {
    INFO("frame " << t);
    if (t < 6) {
      CHECK(outputs[t].masks.at(2).empty());
      CHECK(outputs[t].diagnostics.at(2) == ObjectDiagnostics{});
    } else if (t == 6) {
      // Activation frame: the provided mask, verbatim, with no scores yet.
      CHECK(outputs[t].masks.at(2) == late_mask);
      CHECK(outputs[t].diagnostics.at(2) == ObjectDiagnostics{});
    } else {
      CHECK(iou(outputs[t].masks.at(2),
                mask_of(backend.ground_truth(static_cast<int>(t)), 2)) == 1.0);
      CHECK(outputs[t].diagnostics.at(2).iou_prediction > 0.0);
    }
    CHECK(iou(outputs[t].masks.at(1),
              mask_of(backend.ground_truth(static_cast<int>(t)), 1)) == 1.0);
  }
}

TEST_CASE("automatic start segments the first frame into trajectories", "[tracker]") {
  auto scripts = make_benchmark_scripts(23);
  const SceneScript& script = scripts.at("multi-similar");
  const std::vector<RgbImage> frames = render_all(script);

  SECTION("top-scored masks become objects 1..K") {
    SyntheticOracleBackend backend(script);
    TrackerConfig config;
    config.vis_max_masks = 3;
    TrackerState state = init_automatic(frames[0], backend, config);
    REQUIRE(state.objects.size() == 3);
    const LabelMap& gt = backend.ground_truth(0);
    std::vector<bool> claimed(4, false);
    for (std::size_t i = 0; i < state.objects.size(); ++i) {
      CHECK(state.objects[i].id == static_cast<int>(i) + 1);
      CHECK(state.objects[i].status == ObjectStatus::kActive);
      // Each recovered mask is exactly one of the scene's objects.
      bool matched = false;
      for (int gid = 1; gid <= 3; ++gid) {
        if (!claimed[gid] && state.objects[i].last_mask == mask_of(gt, gid)) {
          claimed[gid] = true;
          matched = true;
          break;
        }
      }
      CHECK(matched);
    }
  }
  SECTION("the cap limits how many trajectories start") {
    SyntheticOracleBackend backend(script);
    TrackerConfig config;
    config.vis_max_masks = 1;
    TrackerState state = init_automatic(frames[0], backend, config);
    REQUIRE(state.objects.size() == 1);
    CHECK(state.objects[0].id == 1);
  }
  SECTION("an empty first frame starts nothing and the run stays empty") {
    SyntheticOracleBackend backend(blink_script(0, 16));  // never visible
    const std::vector<RgbImage> empty_frames = render_all(backend.script());
    TrackerConfig config;
    config.vis_grid_points = 8;
    const auto outputs = run_sequence_auto(empty_frames, backend, config);
    REQUIRE(outputs.size() == empty_frames.size());
    for (const FrameOutput& out : outputs) {
      CHECK(out.masks.empty());
      CHECK(out.label_map.ids().empty());
    }
  }
  SECTION("a full auto run tracks every started trajectory") {
    SyntheticOracleBackend backend(script);
    TrackerConfig config;
    config.vis_max_masks = 3;
    const auto outputs = run_sequence_auto(frames, backend, config);
    REQUIRE(outputs.size() == frames.size());
    for (const FrameOutput& out : outputs)
      REQUIRE(out.masks.size() == 3);
    // No births later: ids stay 1..3 throughout.
    for (const FrameOutput& out : outputs)
      for (const auto& [id, mask] : out.masks) CHECK((id >= 1 && id <= 3));
  }
}

TEST_CASE("overlap resolution follows score then id", "[tracker]") {
  const int w = 20, h = 10;
  BinaryMask a(w, h), b(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < 12; ++x) a.set(x, y, true);
    for (int x = 8; x < 20; ++x) b.set(x, y, true);
  }

  SECTION("no masks means background") {
    const LabelMap lm = resolve_overlaps({}, {}, w, h);
    CHECK(lm.width() == w);
    CHECK(lm.height() == h);
    CHECK(lm.ids().empty());
  }
  SECTION("higher score wins contested pixels") {
    const LabelMap lm = resolve_overlaps({{1, a}, {2, b}}, {0.8, 0.9}, w, h);
    CHECK(lm.at(9, 5) == 2);
    CHECK(lm.at(2, 5) == 1);
    CHECK(lm.at(15, 5) == 2);
    const LabelMap swapped = resolve_overlaps({{1, a}, {2, b}}, {0.9, 0.8}, w, h);
    CHECK(swapped.at(9, 5) == 1);
  }
  SECTION("equal scores go to the lower id") {
    const LabelMap lm = resolve_overlaps({{1, a}, {2, b}}, {0.5, 0.5}, w, h);
    CHECK(lm.at(9, 5) == 1);
    CHECK(lm.at(11, 5) == 1);
    CHECK(lm.at(12, 5) == 2);
  }
  SECTION("disjoint masks keep their pixels regardless of score") {
    BinaryMask left(w, h), right(w, h);
    for (int y = 0; y < h; ++y) {
      left.set(1, y, true);
      right.set(18, y, true);
    }
    const LabelMap lm = resolve_overlaps({{3, left}, {7, right}}, {0.1, 0.9}, w, h);
    CHECK(mask_of(lm, 3) == left);
    CHECK(mask_of(lm, 7) == right);
  }
}

TEST_CASE("similar objects crossing paths keep their identities", "[tracker]") {
  auto scripts = make_benchmark_scripts(31);
  SyntheticOracleBackend backend(scripts.at("multi-similar"));
  const std::vector<RgbImage> frames = render_all(backend.script());
  TrackerConfig config;

  const auto outputs = run_sequence(
      frames, {gt_init(backend, 1), gt_init(backend, 2), gt_init(backend, 3)}, backend,
      config);

  for (std::size_t t = 0; t < outputs.size(); ++t) {
    const LabelMap& gt = backend.ground_truth(static_cast<int>(t));
    for (int id = 1; id <= 3; ++id) {
      INFO("frame " << t << " object " << id);
      REQUIRE(iou(outputs[t].masks.at(id), mask_of(gt, id)) == 1.0);
    }
  }
}

TEST_CASE("tracking a sequence twice gives identical output", "[tracker]") {
  auto scripts = make_benchmark_scripts(31);
  const SceneScript& script = scripts.at("multi-similar");
  const std::vector<RgbImage> frames = render_all(script);
  TrackerConfig config;

  auto run_once = [&]() {
    SyntheticOracleBackend backend(script);
    return run_sequence(
        frames, {gt_init(backend, 1), gt_init(backend, 2), gt_init(backend, 3)}, backend,
        config);
  };
  const auto first = run_once();
  const auto second = run_once();
  REQUIRE(first.size() == second.size());
  for (std::size_t t = 0; t < first.size(); ++t) {
    CHECK(first[t].label_map == second[t].label_map);
    CHECK(first[t].masks == second[t].masks);
    CHECK(first[t].diagnostics == second[t].diagnostics);
  }
}

TEST_CASE("the tracker queries the backend as specified", "[tracker]") {
  auto scripts = make_benchmark_scripts(31);
  SyntheticOracleBackend oracle(scripts.at("multi-similar"));
  ProbeBackend probe(oracle);
  const std::vector<RgbImage> frames = render_all(oracle.script());
  TrackerConfig config;

  SyntheticOracleBackend gt_oracle(scripts.at("multi-similar"));
  const auto outputs = run_sequence(
      frames, {gt_init(gt_oracle, 1), gt_init(gt_oracle, 2), gt_init(gt_oracle, 3)},
      probe, config);

  const int members = config.grid_n * config.grid_n * static_cast<int>(config.scales.size());

  for (int t = 1; t < oracle.script().frame_count; ++t) {
    std::vector<const ProbeBackend::BoxCall*> boxes;
    std::vector<const ProbeBackend::PointCall*> points;
    for (const auto& c : probe.box_calls)
      if (c.frame_index == t) boxes.push_back(&c);
    for (const auto& c : probe.point_calls)
      if (c.frame_index == t) points.push_back(&c);

    INFO("frame " << t);
    // Three active objects, a full prompt grid each, then one point pass each.
    REQUIRE(boxes.size() == static_cast<std::size_t>(3 * members));
    REQUIRE(points.size() == 3);

    // Box-stage negatives are interior points of the *previous* frame's
    // other masks: two per query, each inside some other object's old mask.
    for (std::size_t bi = 0; bi < boxes.size(); ++bi) {
      const int owner = static_cast<int>(bi) / members + 1;
      REQUIRE(boxes[bi]->negatives.size() == 2);
      for (const Point& neg : boxes[bi]->negatives) {
        bool inside_other = false;
        for (int id = 1; id <= 3; ++id) {
          if (id == owner) continue;
          if (outputs[t - 1].masks.at(id).at(neg.x, neg.y)) inside_other = true;
        }
        CHECK(inside_other);
      }
    }

    // Point-stage queries: one positive each, and the negatives are exactly
    // the other objects' positives from the same frame.
    for (std::size_t i = 0; i < points.size(); ++i) {
      REQUIRE(points[i]->positives.size() == 1);
      REQUIRE(points[i]->negatives.size() == 2);
      for (const Point& neg : points[i]->negatives) {
        bool is_other_positive = false;
        for (std::size_t j = 0; j < points.size(); ++j)
          if (j != i && points[j]->positives[0] == neg) is_other_positive = true;
        CHECK(is_other_positive);
      }
    }

    // All box queries precede all point queries within a frame.
    // (Checked by construction: box_calls and point_calls are separate logs,
    // so instead assert every point positive lies inside a mask some box
    // query of the same frame produced.)
    for (const auto* pc : points) {
      bool from_coarse = false;
      for (const auto* bc : boxes)
        if (!bc->mask.empty() && bc->mask.at(pc->positives[0].x, pc->positives[0].y))
          from_coarse = true;
      CHECK(from_coarse);
    }

    // Area-maximizing refinement: the emitted mask is the largest hypothesis.
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto& r = points[i]->result;
      long long best_area = -1;
      std::size_t best = 0;
      for (std::size_t m = 0; m < r.masks.size(); ++m)
        if (r.masks[m].area() > best_area) {
          best_area = r.masks[m].area();
          best = m;
        }
      // Identify the owner by matching the positive to an output mask.
      for (int id = 1; id <= 3; ++id) {
        const BinaryMask& out = outputs[t].masks.at(id);
        if (!out.empty() && out.at(points[i]->positives[0].x, points[i]->positives[0].y)) {
          CHECK(out == r.masks[best]);
          break;
        }
      }
    }
  }
}

TEST_CASE("lost objects stop contributing negative points", "[tracker]") {
  SceneScript script = two_rect_script();
  script.objects[1].absent = {{5, 12}};  // object 2 vanishes for good
  SyntheticOracleBackend oracle(script);
  ProbeBackend probe(oracle);
  const std::vector<RgbImage> frames = render_all(script);
  TrackerConfig config;

  SyntheticOracleBackend gt_oracle(script);
  run_sequence(frames, {gt_init(gt_oracle, 1), gt_init(gt_oracle, 2)}, probe, config);

  const int members = config.grid_n * config.grid_n * static_cast<int>(config.scales.size());
  for (int t = 1; t < script.frame_count; ++t) {
    std::vector<const ProbeBackend::BoxCall*> boxes;
    for (const auto& c : probe.box_calls)
      if (c.frame_index == t) boxes.push_back(&c);
    REQUIRE(boxes.size() == static_cast<std::size_t>(2 * members));
    INFO("frame " << t);
    // Negatives are snapshotted from the previous frame, so object 1 sees
    // object 2's point through frame 5 (the first empty frame) and never
    // after. Object 2 keeps querying from its frozen box while lost.
    const std::size_t expected = t <= 5 ? 1 : 0;
    for (int m = 0; m < members; ++m)
      CHECK(boxes[static_cast<std::size_t>(m)]->negatives.size() == expected);
  }
}

TEST_CASE("track_step validates its inputs and wraps backend errors", "[tracker]") {
  SyntheticOracleBackend backend(blink_script(16, 16));
  const std::vector<RgbImage> frames = render_all(backend.script());
  TrackerConfig config;

  SECTION("frame indices must strictly increase") {
    TrackerState state = init_from_masks(frames[0], {gt_init(backend, 1)}, config);
    track_step(state, frames[1], 1, backend, config);
    REQUIRE_THROWS_WITH(track_step(state, frames[1], 1, backend, config),
                        ContainsSubstring("strictly increase"));
    REQUIRE_THROWS_WITH(track_step(state, frames[1], 0, backend, config),
                        ContainsSubstring("strictly increase"));
  }
  SECTION("frame dimensions must not change") {
    TrackerState state = init_from_masks(frames[0], {gt_init(backend, 1)}, config);
    RgbImage small(10, 10);
    REQUIRE_THROWS_WITH(track_step(state, small, 1, backend, config),
                        ContainsSubstring("dimensions"));
  }
  SECTION("backend failures carry frame and object context") {
    TrackerState state = init_from_masks(frames[0], {gt_init(backend, 1)}, config);
    ThrowingBackend bad;
    try {
      track_step(state, frames[1], 1, bad, config);
      FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
      const std::string what = e.what();
      CHECK(what.find("frame 1") != std::string::npos);
      CHECK(what.find("object 1") != std::string::npos);
      CHECK(what.find("backend exploded") != std::string::npos);
    }
  }
  SECTION("empty frame list is rejected") {
    REQUIRE_THROWS_AS(run_sequence({}, {gt_init(backend, 1)}, backend, config),
                      std::invalid_argument);
  }
}
