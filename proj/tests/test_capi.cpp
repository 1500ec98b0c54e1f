// Exercises the shared-library C surface exactly the way an external
// binding would: handles, status codes, JSON strings. Links libnarcan
// only.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "narcan/narcan.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Scratch {
  std::string root;
  Scratch() {
    root = (fs::temp_directory_path() / "narcan_capi").string();
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Scratch() { fs::remove_all(root); }
  std::string path(const std::string& name) const {
    return (fs::path(root) / name).string();
  }
};

std::string grab(char* text) {
  REQUIRE(text != nullptr);
  std::string out(text);
  narcan_string_free(text);
  return out;
}

}  // namespace

TEST_CASE("version and error plumbing") {
  CHECK(std::string(narcan_version()) == "1.0.0");
  narcan_frames* frames = nullptr;
  const narcan_status status =
      narcan_frames_load("/nonexistent/dir", "*.png", &frames);
  CHECK(status == NARCAN_E_IO);
  CHECK(std::string(narcan_last_error()).find("nonexistent") !=
        std::string::npos);
}

TEST_CASE("plan JSON matches the balanced-segment contract") {
  char* text = nullptr;
  REQUIRE(narcan_plan(100, 3, 10, &text) == NARCAN_OK);
  const json plan = json::parse(grab(text));
  CHECK(plan["segments"][0] == json({0, 40}));
  CHECK(plan["segments"][1] == json({30, 70}));
  CHECK(plan["segments"][2] == json({60, 100}));

  char* bad = nullptr;
  CHECK(narcan_plan(10, 5, 8, &bad) == NARCAN_E_INFEASIBLE_PLAN);
}

TEST_CASE("config handles load, set, and dump") {
  narcan_config* config = nullptr;
  REQUIRE(narcan_config_default(&config) == NARCAN_OK);
  CHECK(narcan_config_set(config, "k", "3") == NARCAN_OK);
  CHECK(narcan_config_set(config, "seed", "17") == NARCAN_OK);
  CHECK(narcan_config_set(config, "prior_backend", "none") == NARCAN_OK);
  CHECK(narcan_config_set(config, "no_such_key", "1") ==
        NARCAN_E_INVALID_ARGUMENT);

  char* text = nullptr;
  REQUIRE(narcan_config_dump(config, &text) == NARCAN_OK);
  const json dumped = json::parse(grab(text));
  CHECK(dumped["k"] == 3);
  CHECK(dumped["seed"] == 17);
  CHECK(dumped["prior_backend"] == "none");
  narcan_config_free(config);
}

TEST_CASE("synthetic -> fit -> render -> metrics through the C API") {
  Scratch scratch;
  const std::string scene_dir = scratch.path("scene");
  REQUIRE(narcan_synthetic("translation-linear", scene_dir.c_str(), 4, 24, 24,
                           7) == NARCAN_OK);
  CHECK(fs::exists(scene_dir + "/frames/frame_00003.png"));
  CHECK(fs::exists(scene_dir + "/gt/canonical.png"));
  CHECK(fs::exists(scene_dir + "/gt/canonical.canonical.json"));

  narcan_frames* frames = nullptr;
  REQUIRE(narcan_frames_load((scene_dir + "/frames").c_str(), "*.png",
                             &frames) == NARCAN_OK);
  int count = 0, height = 0, width = 0;
  narcan_frames_info(frames, &count, &height, &width);
  CHECK(count == 4);
  CHECK(height == 24);
  CHECK(width == 24);
  narcan_frames_free(frames);

  narcan_config* config = nullptr;
  REQUIRE(narcan_config_default(&config) == NARCAN_OK);
  const std::string ckpt = scratch.path("ckpt");
  narcan_config_set(config, "frames_dir",
                    ("\"" + scene_dir + "/frames\"").c_str());
  narcan_config_set(config, "output_dir", ("\"" + ckpt + "\"").c_str());
  narcan_config_set(config, "total_iters", "40");
  narcan_config_set(config, "batch_pixels", "96");
  narcan_config_set(config, "hidden_g", "[12]");
  narcan_config_set(config, "hidden_f", "[16]");
  narcan_config_set(config, "pe_freqs_spatial", "3");
  narcan_config_set(config, "pe_freqs_time", "2");
  narcan_config_set(config, "pe_freqs_canonical", "4");
  narcan_config_set(config, "prior_backend", "identity");
  narcan_config_set(config, "prior_raster_long_side", "16");
  narcan_config_set(config, "schedule",
                    "{\"prior_start_iter\":10,\"phases\":[[10,40,0.4,10]]}");

  char* summary = nullptr;
  REQUIRE(narcan_fit(config, &summary) == NARCAN_OK);
  const json fit = json::parse(grab(summary));
  CHECK(fit["checkpoint"] == ckpt);
  CHECK(fs::exists(ckpt + "/manifest.json"));
  CHECK(fs::exists(ckpt + "/homography.bin"));
  CHECK(fs::exists(ckpt + "/residual.bin"));
  CHECK(fs::exists(ckpt + "/canonical.bin"));
  CHECK(fs::exists(ckpt + "/report.jsonl"));

  narcan_model* model = nullptr;
  REQUIRE(narcan_model_load(ckpt.c_str(), &model) == NARCAN_OK);
  int frame_count = 0, segments = 0;
  narcan_model_info(model, &frame_count, &height, &width, &segments);
  CHECK(frame_count == 4);
  CHECK(segments == 1);

  const std::string render_dir = scratch.path("render");
  REQUIRE(narcan_render(model, nullptr, render_dir.c_str()) == NARCAN_OK);
  CHECK(fs::exists(render_dir + "/frame_00003.png"));

  const std::string canon = scratch.path("canonical");
  REQUIRE(narcan_export_canonical(model, canon.c_str(), 64, 0) == NARCAN_OK);
  CHECK(fs::exists(canon + ".png"));
  CHECK(fs::exists(canon + ".canonical.json"));

  char* metrics_text = nullptr;
  REQUIRE(narcan_metrics((scene_dir + "/frames").c_str(), render_dir.c_str(),
                         "zero", &metrics_text) == NARCAN_OK);
  const json metrics = json::parse(grab(metrics_text));
  CHECK(metrics.contains("short_warp"));
  CHECK(metrics.contains("psnr"));

  double p = 0.0, s = 0.0;
  REQUIRE(narcan_compare((scene_dir + "/frames").c_str(), render_dir.c_str(),
                         &p, &s) == NARCAN_OK);
  CHECK(p > 5.0);
  CHECK(s >= -1.0);

  narcan_model_free(model);
  narcan_config_free(config);
}

TEST_CASE("mask propagation and edit composition through the C API") {
  Scratch scratch;
  const std::string scene_dir = scratch.path("scene2");
  REQUIRE(narcan_synthetic("translation-linear", scene_dir.c_str(), 4, 24, 24,
                           9) == NARCAN_OK);

  narcan_config* config = nullptr;
  REQUIRE(narcan_config_default(&config) == NARCAN_OK);
  const std::string ckpt = scratch.path("ckpt2");
  narcan_config_set(config, "frames_dir",
                    ("\"" + scene_dir + "/frames\"").c_str());
  narcan_config_set(config, "output_dir", ("\"" + ckpt + "\"").c_str());
  narcan_config_set(config, "total_iters", "10");
  narcan_config_set(config, "batch_pixels", "64");
  narcan_config_set(config, "hidden_g", "[8]");
  narcan_config_set(config, "hidden_f", "[8]");
  narcan_config_set(config, "pe_freqs_spatial", "2");
  narcan_config_set(config, "pe_freqs_time", "1");
  narcan_config_set(config, "pe_freqs_canonical", "2");
  narcan_config_set(config, "prior_backend", "none");
  narcan_config_set(config, "use_prior", "false");
  char* summary = nullptr;
  REQUIRE(narcan_fit(config, &summary) == NARCAN_OK);
  narcan_string_free(summary);

  narcan_model* model = nullptr;
  REQUIRE(narcan_model_load(ckpt.c_str(), &model) == NARCAN_OK);

  const std::string masks = scratch.path("masks");
  REQUIRE(narcan_propagate_mask(model, (scene_dir + "/gt/mask.png").c_str(),
                                masks.c_str()) == NARCAN_OK);
  CHECK(fs::exists(masks + "/mask_00000.png"));

  const narcan_status bad = narcan_propagate_mask(
      model, (scene_dir + "/gt/nothere.png").c_str(), masks.c_str());
  CHECK(bad != NARCAN_OK);

  narcan_model_free(model);
  narcan_config_free(config);
}
