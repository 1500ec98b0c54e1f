#include "narcan/separation.hpp"

#include "doctest.h"
#include "test_util.hpp"

using namespace narcan;

namespace {

ModelSpec tiny_spec() {
  ModelSpec spec;
  spec.pe_freqs_spatial = 3;
  spec.pe_freqs_time = 2;
  spec.pe_freqs_canonical = 4;
  spec.hidden_g = {16};
  spec.hidden_f = {16};
  return spec;
}

// Constant-color model via saturated output bias.
NarcanModel constant_model(int frames, int h, int w, double gray,
                           uint64_t seed) {
  Rng rng(seed);
  NarcanModel model = make_model(frames, h, w, tiny_spec(), rng);
  const double logit = std::log(gray / (1.0 - gray));
  model.canonical.mlp.b.back().setConstant(logit);
  return model;
}

RasterCanvas random_canvas(int h, int w, int c, uint64_t seed) {
  RasterCanvas canvas;
  canvas.image = test::random_image(h, w, c, seed);
  canvas.origin_u = 0.01 * static_cast<double>(seed);
  canvas.origin_v = -0.02 * static_cast<double>(seed);
  canvas.scale = 0.003 + 0.001 * static_cast<double>(seed % 3);
  return canvas;
}

}  // namespace

TEST_CASE("plan_segments: single segment, balanced split, infeasible case") {
  const SegmentPlan whole = plan_segments(100, 1, 0);
  REQUIRE(whole.segments.size() == 1);
  CHECK(whole.segments[0] == std::pair<int, int>{0, 100});

  const SegmentPlan three = plan_segments(100, 3, 10);
  REQUIRE(three.segments.size() == 3);
  CHECK(three.segments[0] == std::pair<int, int>{0, 40});
  CHECK(three.segments[1] == std::pair<int, int>{30, 70});
  CHECK(three.segments[2] == std::pair<int, int>{60, 100});

  CHECK_THROWS_AS(plan_segments(10, 5, 8), Error);
  try {
    plan_segments(10, 5, 8);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InfeasiblePlan);
  }
}

TEST_CASE("blend weights walk the overlap from (1,0) to (0,1)") {
  SegmentPlan plan;
  plan.k = 2;
  plan.overlap = 10;
  plan.segments = {{0, 40}, {30, 70}};
  plan.validate();

  const auto at_entry = blend_weight(plan, 30);
  REQUIRE(at_entry.size() == 2);
  CHECK(at_entry[0] == std::pair<int, double>{0, 1.0});
  CHECK(at_entry[1] == std::pair<int, double>{1, 0.0});

  const auto at_exit = blend_weight(plan, 39);
  CHECK(at_exit[0].second == 0.0);
  CHECK(at_exit[1].second == 1.0);

  const auto inside = blend_weight(plan, 34);
  CHECK(inside[0].second == doctest::Approx(5.0 / 9.0).epsilon(1e-12));
  CHECK(inside[1].second == doctest::Approx(4.0 / 9.0).epsilon(1e-12));

  const auto outside = blend_weight(plan, 10);
  REQUIRE(outside.size() == 1);
  CHECK(outside[0] == std::pair<int, double>{0, 1.0});
}

TEST_CASE("blend weights form a partition of unity and move continuously") {
  for (int overlap : {2, 5, 10}) {
    const SegmentPlan plan = plan_segments(60, 3, overlap);
    double prev_w0 = -1.0;
    for (int t = 0; t < 60; ++t) {
      const auto weights = blend_weight(plan, t);
      double sum = 0.0;
      for (const auto& [i, a] : weights) {
        CHECK(a >= 0.0);
        sum += a;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
      // Consecutive-frame step of any segment weight is bounded.
      double w0 = 0.0;
      for (const auto& [i, a] : weights)
        if (i == 0) w0 = a;
      if (prev_w0 >= 0.0 && overlap > 1)
        CHECK(std::abs(w0 - prev_w0) <= 1.0 / (overlap - 1) + 1e-12);
      prev_w0 = w0;
    }
  }
}

TEST_CASE("render_blended honors convexity and matches single segments") {
  SegmentModelSet set;
  set.plan = plan_segments(12, 2, 5);
  const int len0 = set.plan.segments[0].second - set.plan.segments[0].first;
  const int len1 = set.plan.segments[1].second - set.plan.segments[1].first;
  set.models.push_back(constant_model(len0, 8, 8, 1e-9, 1));   // black
  set.models.push_back(constant_model(len1, 8, 8, 0.75, 2));   // light gray
  // Make model 0 truly black for exactness of the convex combination.
  set.models[0].canonical.mlp.b.back().setConstant(-40.0);
  set.models[1].canonical.mlp.b.back().setConstant(std::log(0.75 / 0.25));
  set.validate();

  // Outside any overlap the blend is the single segment render, bit-exact.
  const Image solo = render_frame(set.models[0], 1);
  const Image blended = render_blended(set, 1);
  CHECK(test::max_abs_diff(solo, blended) == 0.0);

  // Find the overlap position with alpha = (0.25, 0.75).
  const int lo = set.plan.segments[1].first;
  const int hi = set.plan.segments[0].second;
  int t_target = -1;
  for (int t = lo; t < hi; ++t) {
    const auto w = blend_weight(set.plan, t);
    if (w.size() == 2 && w[0].second == doctest::Approx(0.25))
      t_target = t;
  }
  REQUIRE(t_target >= 0);
  const Image mix = render_blended(set, t_target);
  for (float v : mix.data)
    CHECK(v == doctest::Approx(0.75 * 0.75).epsilon(1e-6));

  // Two segments rendering identical images blend to the same image.
  SegmentModelSet same;
  same.plan = set.plan;
  same.models.push_back(constant_model(len0, 8, 8, 0.6, 3));
  same.models.push_back(constant_model(len1, 8, 8, 0.6, 3));
  const Image either = render_frame(same.models[0], lo);
  const Image mixed = render_blended(same, lo + 1);
  CHECK(test::max_abs_diff(either, mixed) < 1e-6);
}

TEST_CASE("model-set checkpoints round trip with the plan in the manifest") {
  SegmentModelSet set;
  set.plan = plan_segments(20, 3, 4);
  for (int i = 0; i < 3; ++i) {
    const auto [s, e] = set.plan.segments[i];
    set.models.push_back(constant_model(e - s, 8, 10, 0.25 + 0.2 * i, 10 + i));
  }
  test::TempDir dir("set_ckpt");
  save_model_set(set, dir.path());
  CHECK(std::filesystem::exists(dir.file("segment_00/manifest.json")));
  CHECK(std::filesystem::exists(dir.file("segment_02/canonical.bin")));

  const SegmentModelSet loaded = load_model_set(dir.path());
  CHECK(loaded.plan.k == 3);
  CHECK(loaded.plan.overlap == 4);
  CHECK(loaded.plan.segments == set.plan.segments);
  const Image a = render_blended(set, 10);
  const Image b = render_blended(loaded, 10);
  CHECK(test::max_abs_diff(a, b) < 1e-5);
}

TEST_CASE("grid concat/split round trip is bit-exact for k = 1..4") {
  for (int k = 1; k <= 4; ++k) {
    std::vector<RasterCanvas> canvases;
    for (int i = 0; i < k; ++i) canvases.push_back(random_canvas(16, 12, 3, i + 1));
    const auto [grid, manifest] = grid_concat(canvases);
    CHECK(grid.image.height == 32);
    CHECK(grid.image.width == 24);
    const std::vector<RasterCanvas> back = grid_split(grid, manifest);
    REQUIRE(back.size() == static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) {
      CHECK(back[i].same_geometry(canvases[i]));
      CHECK(back[i].image.data == canvases[i].image.data);
    }
  }
}

TEST_CASE("grid layout fills row-major with black empty cells") {
  std::vector<RasterCanvas> three;
  for (int i = 0; i < 3; ++i) {
    RasterCanvas c = random_canvas(8, 8, 3, i + 7);
    for (float& v : c.image.data) v = 0.9f;
    three.push_back(c);
  }
  const auto [grid, manifest] = grid_concat(three);
  // Bottom-right cell stays black.
  for (int y = 8; y < 16; ++y)
    for (int x = 8; x < 16; ++x)
      for (int c = 0; c < 3; ++c) CHECK(grid.image.at(y, x, c) == 0.0f);

  std::vector<RasterCanvas> mixed = {random_canvas(8, 8, 3, 1),
                                     random_canvas(10, 8, 3, 2)};
  CHECK_THROWS_AS(grid_concat(mixed), Error);
}

TEST_CASE("warp_edit: identity on zero flow, exact integer shifts") {
  RasterCanvas edit;
  edit.image = Image(24, 24, 4, 0.0f);
  for (int y = 8; y < 16; ++y)
    for (int x = 8; x < 16; ++x) {
      edit.image.at(y, x, 0) = 1.0f;
      edit.image.at(y, x, 3) = 1.0f;
    }

  FlowField zero(24, 24);
  const RasterCanvas same = warp_edit(edit, zero);
  CHECK(test::max_abs_diff(same.image, edit.image) == 0.0);

  FlowField shift(24, 24);
  for (size_t i = 0; i < shift.du.size(); ++i) shift.du[i] = 4.0f / 24.0f;
  const RasterCanvas moved = warp_edit(edit, shift);
  for (int y = 8; y < 16; ++y) {
    CHECK(moved.image.at(y, 12, 0) == 1.0f);
    CHECK(moved.image.at(y, 12, 3) == 1.0f);
    CHECK(moved.image.at(y, 8, 3) == 0.0f);  // vacated by the shift
  }
  // Border pixels whose source sample leaves the layer become transparent.
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 4; ++x) CHECK(moved.image.at(y, x, 3) == 0.0f);
}

TEST_CASE("warping forward then by the exact inverse flow returns the edit") {
  RasterCanvas edit;
  edit.image = Image(32, 32, 4, 0.0f);
  // Smooth blob (hard edges would alias under bilinear resampling).
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      const double d2 = (x - 16.0) * (x - 16.0) + (y - 16.0) * (y - 16.0);
      const float a = static_cast<float>(std::exp(-d2 / 60.0));
      edit.image.at(y, x, 1) = a;
      edit.image.at(y, x, 3) = a;
    }

  FlowField fwd(32, 32), inv(32, 32);
  for (size_t i = 0; i < fwd.du.size(); ++i) {
    fwd.du[i] = 2.3f / 32.0f;
    fwd.dv[i] = -1.7f / 32.0f;
    inv.du[i] = -2.3f / 32.0f;
    inv.dv[i] = 1.7f / 32.0f;
  }
  const RasterCanvas there = warp_edit(edit, fwd);
  const RasterCanvas back = warp_edit(there, inv);
  double worst = 0.0;
  for (int y = 6; y < 26; ++y)
    for (int x = 6; x < 26; ++x)
      for (int c = 0; c < 4; ++c)
        worst = std::max(worst, std::abs(static_cast<double>(
                                             back.image.at(y, x, c)) -
                                         edit.image.at(y, x, c)));
  CHECK(worst <= 0.02);
}

TEST_CASE("cumulative noisy warps degrade alignment monotonically") {
  RasterCanvas edit;
  edit.image = Image(48, 48, 4, 0.0f);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x) {
      const double d2 = (x - 24.0) * (x - 24.0) + (y - 24.0) * (y - 24.0);
      const float a = static_cast<float>(std::exp(-d2 / 120.0));
      edit.image.at(y, x, 0) = a;
      edit.image.at(y, x, 3) = a;
    }

  Rng rng(77);
  RasterCanvas current = edit;
  double prev_error = -1.0;
  for (int n = 1; n <= 8; ++n) {
    FlowField noise(48, 48);
    for (size_t i = 0; i < noise.du.size(); ++i) {
      noise.du[i] = static_cast<float>(0.3 * rng.normal() / 48.0);
      noise.dv[i] = static_cast<float>(0.3 * rng.normal() / 48.0);
    }
    current = warp_edit(current, noise);
    double err = 0.0;
    for (size_t i = 0; i < current.image.data.size(); ++i)
      err += std::abs(static_cast<double>(current.image.data[i]) -
                      edit.image.data[i]);
    err /= static_cast<double>(current.image.data.size());
    if (prev_error >= 0.0) CHECK(err >= prev_error);
    prev_error = err;
  }
}
