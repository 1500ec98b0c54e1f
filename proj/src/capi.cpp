#include "narcan/narcan.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "json.hpp"
#include "narcan/config.hpp"
#include "narcan/editing.hpp"
#include "narcan/frames_io.hpp"
#include "narcan/metrics.hpp"
#include "narcan/pipeline.hpp"
#include "narcan/separation.hpp"

using nlohmann::json;

namespace {

thread_local std::string g_last_error;

narcan_status status_from_code(narcan::ErrorCode code) {
  return static_cast<narcan_status>(static_cast<int>(code));
}

template <typename Fn>
narcan_status guarded(Fn&& fn) {
  try {
    fn();
    return NARCAN_OK;
  } catch (const narcan::Error& e) {
    g_last_error = e.what();
    return status_from_code(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return NARCAN_E_UNKNOWN;
  } catch (...) {
    g_last_error = "unknown failure";
    return NARCAN_E_UNKNOWN;
  }
}

char* dup_string(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

narcan_status require(bool condition, const char* message) {
  if (condition) return NARCAN_OK;
  g_last_error = message;
  return NARCAN_E_INVALID_ARGUMENT;
}

}  // namespace

struct narcan_frames {
  narcan::FrameSequence seq;
};

struct narcan_model {
  narcan::SegmentModelSet set;
  std::string checkpoint_dir;
};

struct narcan_config {
  narcan::ProjectConfig config;
};

extern "C" {

const char* narcan_version(void) { return "1.0.0"; }

const char* narcan_last_error(void) { return g_last_error.c_str(); }

void narcan_string_free(char* text) { std::free(text); }

/* ------------------------------------------------------------------ */

narcan_status narcan_config_default(narcan_config** out) {
  if (auto s = require(out != nullptr, "out is null")) return s;
  return guarded([&] {
    auto* handle = new narcan_config();
    handle->config.schedule = narcan::default_schedule();
    *out = handle;
  });
}

narcan_status narcan_config_load(const char* path, narcan_config** out) {
  if (auto s = require(path && out, "path/out is null")) return s;
  return guarded([&] {
    auto* handle = new narcan_config();
    handle->config = narcan::ProjectConfig::load(path);
    *out = handle;
  });
}

narcan_status narcan_config_set(narcan_config* config, const char* key,
                                const char* value) {
  if (auto s = require(config && key && value, "config/key/value is null"))
    return s;
  return guarded([&] {
    json patch = json::parse(config->config.to_json_text());
    json parsed;
    try {
      parsed = json::parse(value);
    } catch (const json::exception&) {
      parsed = std::string(value);  // bare strings are fine
    }
    if (!patch.contains(key))
      narcan::raise(narcan::ErrorCode::InvalidArgument,
                    std::string("unknown config key: ") + key);
    patch[key] = parsed;
    config->config = narcan::ProjectConfig::from_json_text(patch.dump());
  });
}

narcan_status narcan_config_dump(const narcan_config* config, char** out_json) {
  if (auto s = require(config && out_json, "config/out is null")) return s;
  return guarded([&] { *out_json = dup_string(config->config.to_json_text()); });
}

void narcan_config_free(narcan_config* config) { delete config; }

/* ------------------------------------------------------------------ */

narcan_status narcan_frames_load(const char* directory, const char* pattern,
                                 narcan_frames** out) {
  if (auto s = require(directory && out, "directory/out is null")) return s;
  return guarded([&] {
    auto* handle = new narcan_frames();
    handle->seq = narcan::load_frames(
        directory, pattern && *pattern ? pattern : "*.png");
    *out = handle;
  });
}

narcan_status narcan_frames_save(const narcan_frames* frames,
                                 const char* directory) {
  if (auto s = require(frames && directory, "frames/directory is null"))
    return s;
  return guarded([&] { narcan::save_frames(frames->seq, directory); });
}

narcan_status narcan_frames_info(const narcan_frames* frames, int* count,
                                 int* height, int* width) {
  if (auto s = require(frames != nullptr, "frames is null")) return s;
  if (count) *count = frames->seq.frame_count();
  if (height) *height = frames->seq.height();
  if (width) *width = frames->seq.width();
  return NARCAN_OK;
}

void narcan_frames_free(narcan_frames* frames) { delete frames; }

/* ------------------------------------------------------------------ */

narcan_status narcan_fit(const narcan_config* config, char** out_summary_json) {
  if (auto s = require(config != nullptr, "config is null")) return s;
  return guarded([&] {
    const narcan::FitOutcome outcome = narcan::fit_pipeline(config->config);
    if (out_summary_json) {
      json j = {
          {"checkpoint", outcome.checkpoint_dir},
          {"report", outcome.report_path},
          {"mean_psnr", outcome.mean_psnr},
          {"segment_psnr", outcome.segment_psnr},
      };
      *out_summary_json = dup_string(j.dump(2));
    }
  });
}

narcan_status narcan_model_load(const char* checkpoint_dir,
                                narcan_model** out) {
  if (auto s = require(checkpoint_dir && out, "checkpoint/out is null"))
    return s;
  return guarded([&] {
    auto* handle = new narcan_model();
    handle->set = narcan::load_model_set(checkpoint_dir);
    handle->checkpoint_dir = checkpoint_dir;
    *out = handle;
  });
}

narcan_status narcan_model_info(const narcan_model* model, int* frame_count,
                                int* height, int* width, int* segments) {
  if (auto s = require(model != nullptr, "model is null")) return s;
  if (frame_count) *frame_count = model->set.plan.total_frames();
  if (height) *height = model->set.models.front().frame_height;
  if (width) *width = model->set.models.front().frame_width;
  if (segments) *segments = model->set.plan.k;
  return NARCAN_OK;
}

void narcan_model_free(narcan_model* model) { delete model; }

narcan_status narcan_render(const narcan_model* model,
                            const char* edited_canonical,
                            const char* out_dir) {
  if (auto s = require(model && out_dir, "model/out_dir is null")) return s;
  return guarded([&] {
    narcan::render_pipeline(model->checkpoint_dir,
                            edited_canonical ? edited_canonical : "", out_dir);
  });
}

narcan_status narcan_export_canonical(const narcan_model* model,
                                      const char* out_prefix, int long_side,
                                      int with_grid) {
  if (auto s = require(model && out_prefix, "model/out_prefix is null"))
    return s;
  return guarded([&] {
    narcan::export_canonical_pipeline(model->checkpoint_dir, out_prefix,
                                      long_side > 0 ? long_side : 256,
                                      with_grid != 0);
  });
}

narcan_status narcan_import_edit(const char* base_canonical_png,
                                 const char* edit_layer_png, const char* mode,
                                 const char* out_png) {
  if (auto s = require(base_canonical_png && edit_layer_png && out_png,
                       "paths are null"))
    return s;
  return guarded([&] {
    narcan::import_edit_pipeline(base_canonical_png, edit_layer_png,
                                 mode ? mode : "alpha_over", out_png);
  });
}

narcan_status narcan_propagate_mask(const narcan_model* model,
                                    const char* mask_png,
                                    const char* out_dir) {
  if (auto s = require(model && mask_png && out_dir, "arguments are null"))
    return s;
  return guarded([&] {
    narcan::propagate_mask_pipeline(model->checkpoint_dir, mask_png, out_dir);
  });
}

/* ------------------------------------------------------------------ */

narcan_status narcan_metrics(const char* video_dir, const char* against_dir,
                             const char* flow_backend, char** out_json) {
  if (auto s = require(video_dir && out_json, "video_dir/out is null"))
    return s;
  return guarded([&] {
    *out_json = dup_string(narcan::metrics_pipeline(
        video_dir, against_dir ? against_dir : "",
        flow_backend && *flow_backend ? flow_backend : "block"));
  });
}

narcan_status narcan_compare(const char* video_dir, const char* against_dir,
                             double* out_psnr, double* out_ssim) {
  if (auto s = require(video_dir && against_dir, "paths are null")) return s;
  return guarded([&] {
    const narcan::FrameSequence a = narcan::load_frames(video_dir);
    const narcan::FrameSequence b = narcan::load_frames(against_dir);
    if (out_psnr) *out_psnr = narcan::psnr(a, b);
    if (out_ssim) *out_ssim = narcan::ssim(a, b);
  });
}

/* ------------------------------------------------------------------ */

narcan_status narcan_plan(int total_frames, int k, int overlap,
                          char** out_json) {
  if (auto s = require(out_json != nullptr, "out is null")) return s;
  return guarded([&] {
    *out_json = dup_string(narcan::plan_pipeline(total_frames, k, overlap));
  });
}

narcan_status narcan_ablate(const narcan_config* config, const char* variant,
                            char** out_row_json) {
  if (auto s = require(config && variant, "config/variant is null")) return s;
  return guarded([&] {
    const std::string row = narcan::ablate_pipeline(config->config, variant);
    if (out_row_json) *out_row_json = dup_string(row);
  });
}

narcan_status narcan_synthetic(const char* kind, const char* out_dir,
                               int frame_count, int height, int width,
                               uint64_t seed) {
  if (auto s = require(kind && out_dir, "kind/out_dir is null")) return s;
  return guarded([&] {
    narcan::synthetic_pipeline(kind, out_dir, frame_count, height, width,
                               seed);
  });
}

}  // extern "C"
