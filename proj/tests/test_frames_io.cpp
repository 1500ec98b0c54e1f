#include "narcan/frames_io.hpp"

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "narcan/png_io.hpp"
#include "test_util.hpp"

using namespace narcan;
namespace fs = std::filesystem;

namespace {

FrameSequence tiny_sequence(int t, int h, int w, uint64_t seed) {
  FrameSequence seq;
  for (int i = 0; i < t; ++i)
    seq.frames.push_back(test::random_image(h, w, 3, seed + i));
  return seq;
}

}  // namespace

TEST_CASE("save/load round trip stays within the 8-bit quantization step") {
  test::TempDir dir("frames_roundtrip");
  const FrameSequence seq = tiny_sequence(2, 16, 24, 1);
  save_frames(seq, dir.path());
  const FrameSequence loaded = load_frames(dir.path());
  REQUIRE(loaded.frame_count() == 2);
  for (int t = 0; t < 2; ++t)
    CHECK(test::max_abs_diff(seq.frames[t], loaded.frames[t]) <=
          1.0 / 255.0 + 1e-7);
}

TEST_CASE("save_frames uses the frame_%05d naming contract") {
  test::TempDir dir("frames_naming");
  save_frames(tiny_sequence(100, 8, 8, 2), dir.path());
  CHECK(fs::exists(dir.file("frame_00000.png")));
  CHECK(fs::exists(dir.file("frame_00042.png")));
  CHECK(fs::exists(dir.file("frame_00099.png")));
  int count = 0;
  for (const auto& e : fs::directory_iterator(dir.path())) (void)e, ++count;
  CHECK(count == 100);
}

TEST_CASE("two identical 8x8 black frames load as an all-zero sequence") {
  test::TempDir dir("frames_black");
  FrameSequence seq;
  seq.frames.assign(2, Image(8, 8, 3, 0.0f));
  save_frames(seq, dir.path());
  const FrameSequence loaded = load_frames(dir.path());
  CHECK(loaded.frame_count() == 2);
  for (float v : loaded.frames[0].data) CHECK(v == 0.0f);
  for (float v : loaded.frames[1].data) CHECK(v == 0.0f);
}

TEST_CASE("dimension mismatch names the offending file") {
  test::TempDir dir("frames_dims");
  encode_png_file(Image(64, 64, 3, 0.5f), dir.file("a.png"));
  encode_png_file(Image(32, 32, 3, 0.5f), dir.file("b.png"));
  try {
    load_frames(dir.path());
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
    CHECK(std::string(e.what()).find("b.png") != std::string::npos);
  }
}

TEST_CASE("fewer than two matching files is an EmptyDirectory error") {
  test::TempDir dir("frames_empty");
  encode_png_file(Image(8, 8, 3, 0.5f), dir.file("only.png"));
  CHECK_THROWS_WITH_AS(load_frames(dir.path()), doctest::Contains("found 1"),
                       Error);
  try {
    load_frames(dir.path(), "*.jpg");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyDirectory);
  }
}

TEST_CASE("undecodable file reports DecodeFailure with its name") {
  test::TempDir dir("frames_junk");
  encode_png_file(Image(8, 8, 3, 0.5f), dir.file("00.png"));
  std::ofstream(dir.file("01.png")) << "not a png";
  try {
    load_frames(dir.path());
    FAIL("expected DecodeFailure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DecodeFailure);
    CHECK(std::string(e.what()).find("01.png") != std::string::npos);
  }
}

TEST_CASE("frame order follows the filename sort, not creation time") {
  test::TempDir dir("frames_order");
  // Created intentionally out of lexicographic order.
  encode_png_file(Image(8, 8, 3, 0.75f), dir.file("c.png"));
  encode_png_file(Image(8, 8, 3, 0.25f), dir.file("a.png"));
  encode_png_file(Image(8, 8, 3, 0.50f), dir.file("b.png"));
  const FrameSequence seq = load_frames(dir.path());
  REQUIRE(seq.frame_count() == 3);
  CHECK(seq.frames[0].at(0, 0, 0) == doctest::Approx(0.25).epsilon(0.01));
  CHECK(seq.frames[1].at(0, 0, 0) == doctest::Approx(0.50).epsilon(0.01));
  CHECK(seq.frames[2].at(0, 0, 0) == doctest::Approx(0.75).epsilon(0.01));
}

TEST_CASE("saving into a path blocked by a file is an IoFailure") {
  test::TempDir dir("frames_blocked");
  std::ofstream(dir.file("blocked")) << "x";
  try {
    save_frames(tiny_sequence(2, 8, 8, 3), dir.file("blocked"));
    FAIL("expected IoFailure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoFailure);
  }
}

TEST_CASE("canonical export/import round trip preserves geometry exactly") {
  test::TempDir dir("canvas_roundtrip");
  RasterCanvas canvas;
  canvas.image = test::random_image(24, 32, 3, 4);
  canvas.origin_u = -0.2;
  canvas.origin_v = -0.1;
  canvas.scale = 0.002;
  export_canonical(canvas, dir.file("canon.png"));
  CHECK(fs::exists(dir.file("canon.canonical.json")));

  const RasterCanvas back = import_canonical(dir.file("canon.png"));
  CHECK(back.origin_u == canvas.origin_u);
  CHECK(back.origin_v == canvas.origin_v);
  CHECK(back.scale == canvas.scale);
  CHECK(test::max_abs_diff(back.image, canvas.image) <= 1.0 / 255.0 + 1e-7);
}

TEST_CASE("user-edited PNG of matching size keeps the original geometry") {
  test::TempDir dir("canvas_edited");
  RasterCanvas canvas;
  canvas.image = test::smooth_image(20, 20, 3);
  canvas.origin_u = 0.05;
  canvas.origin_v = 0.10;
  canvas.scale = 0.01;
  export_canonical(canvas, dir.file("canon.png"));

  // Simulate an external editor rewriting the pixels in place.
  Image edited = test::smooth_image(20, 20, 3, 2.0);
  encode_png_file(edited, dir.file("canon.png"));

  const RasterCanvas back = import_canonical(dir.file("canon.png"));
  CHECK(back.origin_u == canvas.origin_u);
  CHECK(back.scale == canvas.scale);
  CHECK(test::max_abs_diff(back.image, edited) <= 1.0 / 255.0 + 1e-7);
  CHECK(test::max_abs_diff(back.image, canvas.image) > 0.05);
}

TEST_CASE("import without sidecar or explicit geometry is ManifestMissing") {
  test::TempDir dir("canvas_nomanifest");
  encode_png_file(Image(8, 8, 3, 0.5f), dir.file("plain.png"));
  try {
    import_canonical(dir.file("plain.png"));
    FAIL("expected ManifestMissing");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ManifestMissing);
  }
  const RasterCanvas explicit_geom =
      import_canonical(dir.file("plain.png"), {0.1, 0.2, 0.004});
  CHECK(explicit_geom.origin_u == 0.1);
  CHECK(explicit_geom.scale == 0.004);
}
