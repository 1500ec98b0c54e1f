// narcan command-line front end. Talks to the shared library through the
// C API only.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "narcan/narcan.h"

namespace {

// 0 success, 2 user/config error, 3 backend error, 4 numeric failure.
int exit_code_for(narcan_status status) {
  switch (status) {
    case NARCAN_OK:
      return 0;
    case NARCAN_E_BACKEND_UNAVAILABLE:
      return 3;
    case NARCAN_E_DEGENERATE_HOMOGRAPHY:
    case NARCAN_E_NUMERIC:
      return 4;
    default:
      return 2;
  }
}

int fail(narcan_status status) {
  std::fprintf(stderr, "narcan: error: %s\n", narcan_last_error());
  return exit_code_for(status);
}

struct ConfigHandle {
  narcan_config* ptr = nullptr;
  ~ConfigHandle() { narcan_config_free(ptr); }
};

struct ModelHandle {
  narcan_model* ptr = nullptr;
  ~ModelHandle() { narcan_model_free(ptr); }
};

int load_config(const std::string& path,
                const std::vector<std::string>& overrides, ConfigHandle& out) {
  narcan_status status = path.empty()
                             ? narcan_config_default(&out.ptr)
                             : narcan_config_load(path.c_str(), &out.ptr);
  if (status != NARCAN_OK) return fail(status);
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "narcan: error: --set expects key=value, got %s\n",
                   kv.c_str());
      return 2;
    }
    status = narcan_config_set(out.ptr, kv.substr(0, eq).c_str(),
                               kv.substr(eq + 1).c_str());
    if (status != NARCAN_OK) return fail(status);
  }
  return 0;
}

int print_string_result(narcan_status status, char* text) {
  if (status != NARCAN_OK) return fail(status);
  std::printf("%s\n", text);
  narcan_string_free(text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"narcan — canonical-image video representation toolkit"};
  app.require_subcommand(1);

  std::string config_path, frames_dir, output_dir, checkpoint, out_dir;
  std::string edited, mask_path, against_dir, flow_backend = "block";
  std::string base_png, edit_png, blend_mode = "alpha_over", out_png;
  std::string variant, synthetic_kind;
  std::vector<std::string> overrides;
  int plan_t = 0, plan_k = 1, plan_overlap = 10;
  int long_side = 256;
  int synth_t = 20, synth_h = 96, synth_w = 96;
  uint64_t synth_seed = 7;
  bool with_grid = false;

  auto add_config_flags = [&](CLI::App* cmd) {
    cmd->add_option("config", config_path, "project config JSON")
        ->check(CLI::ExistingFile);
    cmd->add_option("--set", overrides,
                    "override a config key, e.g. --set k=3 (repeatable)");
    cmd->add_option("--frames-dir", frames_dir, "override frames_dir");
    cmd->add_option("--output-dir", output_dir, "override output_dir");
  };

  CLI::App* fit = app.add_subcommand("fit", "fit a model set to a video");
  add_config_flags(fit);

  CLI::App* render = app.add_subcommand(
      "render", "render reconstruction or propagate an edited canonical");
  render->add_option("checkpoint", checkpoint, "checkpoint directory")
      ->required();
  render->add_option("out_dir", out_dir, "output frame directory")->required();
  render->add_option("--edited-canonical", edited,
                     "edited canonical image(s); comma-separated per segment");

  CLI::App* exportc =
      app.add_subcommand("export-canonical", "write canonical raster(s)");
  exportc->add_option("checkpoint", checkpoint)->required();
  exportc->add_option("out_prefix", out_png, "output path prefix")->required();
  exportc->add_option("--long-side", long_side, "raster long side (default 256)");
  exportc->add_flag("--grid", with_grid, "also write the 2x2 grid image");

  CLI::App* import_edit = app.add_subcommand(
      "import-edit", "composite an RGBA edit layer over an exported canonical");
  import_edit->add_option("base", base_png, "exported canonical PNG")
      ->required()
      ->check(CLI::ExistingFile);
  import_edit->add_option("edit", edit_png, "RGBA edit layer PNG")
      ->required()
      ->check(CLI::ExistingFile);
  import_edit->add_option("out", out_png, "edited canonical output PNG")
      ->required();
  import_edit->add_option("--mode", blend_mode, "alpha_over (default) or replace");

  CLI::App* propagate =
      app.add_subcommand("propagate-mask", "propagate a canonical-space mask");
  propagate->add_option("checkpoint", checkpoint)->required();
  propagate->add_option("mask", mask_path, "mask PNG (with sidecar)")
      ->required()
      ->check(CLI::ExistingFile);
  propagate->add_option("out_dir", out_dir)->required();

  CLI::App* metrics =
      app.add_subcommand("metrics", "temporal-consistency metrics of a video");
  metrics->add_option("video_dir", out_dir, "frame directory")->required();
  metrics->add_option("--against", against_dir,
                      "second directory for PSNR/SSIM");
  metrics->add_option("--flow-backend", flow_backend, "block (default) or zero");

  CLI::App* ablate = app.add_subcommand("ablate", "run one ablation variant");
  add_config_flags(ablate);
  ablate->add_option("variant", variant,
                     "full | no_homography | no_residual | no_prior")
      ->required();

  CLI::App* plan = app.add_subcommand("plan", "segment planning / fixtures");
  plan->add_option("-T,--frames", plan_t, "total frame count");
  plan->add_option("-k", plan_k, "number of segments");
  plan->add_option("--overlap", plan_overlap, "overlap window (frames)");
  plan->add_option("--synthetic", synthetic_kind,
                   "write a synthetic fixture scene: homography | warp | "
                   "translation | translation-linear | twoshot");
  plan->add_option("--out", out_dir, "fixture output directory");
  plan->add_option("--synthetic-frames", synth_t, "fixture frame count");
  plan->add_option("--height", synth_h, "fixture height");
  plan->add_option("--width", synth_w, "fixture width");
  plan->add_option("--seed", synth_seed, "fixture seed");

  CLI11_PARSE(app, argc, argv);

  if (fit->parsed() || ablate->parsed()) {
    ConfigHandle config;
    if (int rc = load_config(config_path, overrides, config)) return rc;
    narcan_status status = NARCAN_OK;
    if (!frames_dir.empty())
      status = narcan_config_set(config.ptr, "frames_dir",
                                 ("\"" + frames_dir + "\"").c_str());
    if (status == NARCAN_OK && !output_dir.empty())
      status = narcan_config_set(config.ptr, "output_dir",
                                 ("\"" + output_dir + "\"").c_str());
    if (status != NARCAN_OK) return fail(status);

    char* summary = nullptr;
    status = fit->parsed() ? narcan_fit(config.ptr, &summary)
                           : narcan_ablate(config.ptr, variant.c_str(), &summary);
    return print_string_result(status, summary);
  }

  if (render->parsed()) {
    ModelHandle model;
    narcan_status status = narcan_model_load(checkpoint.c_str(), &model.ptr);
    if (status != NARCAN_OK) return fail(status);
    status = narcan_render(model.ptr, edited.empty() ? nullptr : edited.c_str(),
                           out_dir.c_str());
    if (status != NARCAN_OK) return fail(status);
    std::printf("rendered %s\n", out_dir.c_str());
    return 0;
  }

  if (exportc->parsed()) {
    ModelHandle model;
    narcan_status status = narcan_model_load(checkpoint.c_str(), &model.ptr);
    if (status != NARCAN_OK) return fail(status);
    status = narcan_export_canonical(model.ptr, out_png.c_str(), long_side,
                                     with_grid ? 1 : 0);
    if (status != NARCAN_OK) return fail(status);
    std::printf("exported %s*\n", out_png.c_str());
    return 0;
  }

  if (import_edit->parsed()) {
    const narcan_status status = narcan_import_edit(
        base_png.c_str(), edit_png.c_str(), blend_mode.c_str(), out_png.c_str());
    if (status != NARCAN_OK) return fail(status);
    std::printf("wrote %s\n", out_png.c_str());
    return 0;
  }

  if (propagate->parsed()) {
    ModelHandle model;
    narcan_status status = narcan_model_load(checkpoint.c_str(), &model.ptr);
    if (status != NARCAN_OK) return fail(status);
    status = narcan_propagate_mask(model.ptr, mask_path.c_str(), out_dir.c_str());
    if (status != NARCAN_OK) return fail(status);
    std::printf("propagated masks into %s\n", out_dir.c_str());
    return 0;
  }

  if (metrics->parsed()) {
    char* report = nullptr;
    const narcan_status status = narcan_metrics(
        out_dir.c_str(), against_dir.empty() ? nullptr : against_dir.c_str(),
        flow_backend.c_str(), &report);
    return print_string_result(status, report);
  }

  if (plan->parsed()) {
    if (!synthetic_kind.empty()) {
      if (out_dir.empty()) {
        std::fprintf(stderr, "narcan: error: --synthetic requires --out\n");
        return 2;
      }
      const narcan_status status =
          narcan_synthetic(synthetic_kind.c_str(), out_dir.c_str(), synth_t,
                           synth_h, synth_w, synth_seed);
      if (status != NARCAN_OK) return fail(status);
      std::printf("wrote fixture scene to %s\n", out_dir.c_str());
      return 0;
    }
    if (plan_t <= 0) {
      std::fprintf(stderr, "narcan: error: plan requires -T\n");
      return 2;
    }
    char* text = nullptr;
    const narcan_status status = narcan_plan(plan_t, plan_k, plan_overlap, &text);
    return print_string_result(status, text);
  }

  return 2;
}
