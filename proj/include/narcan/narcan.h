/* narcan — canonical-image video representation toolkit.
 *
 * C interface to the shared library. Objects are opaque handles; every
 * call returns a narcan_status, with a thread-local message available via
 * narcan_last_error(). Strings returned through char** are heap-allocated
 * and must be released with narcan_string_free().
 */
#ifndef NARCAN_NARCAN_H
#define NARCAN_NARCAN_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum narcan_status {
  NARCAN_OK = 0,
  NARCAN_E_INVALID_ARGUMENT = 1,
  NARCAN_E_IO = 2,
  NARCAN_E_EMPTY_DIRECTORY = 3,
  NARCAN_E_DECODE = 4,
  NARCAN_E_DIMENSION_MISMATCH = 5,
  NARCAN_E_MANIFEST_MISSING = 6,
  NARCAN_E_DEGENERATE_HOMOGRAPHY = 7,
  NARCAN_E_GEOMETRY_MISMATCH = 8,
  NARCAN_E_UNSUPPORTED_CAPABILITY = 9,
  NARCAN_E_BACKEND_UNAVAILABLE = 10,
  NARCAN_E_INFEASIBLE_PLAN = 11,
  NARCAN_E_COVERAGE = 12,
  NARCAN_E_SHAPE_MISMATCH = 13,
  NARCAN_E_NUMERIC = 14,
  NARCAN_E_UNKNOWN = 15
} narcan_status;

typedef struct narcan_frames narcan_frames;   /* loaded frame sequence */
typedef struct narcan_model narcan_model;     /* trained model set */
typedef struct narcan_config narcan_config;   /* project configuration */

const char* narcan_version(void);

/* Message for the most recent failure on this thread. */
const char* narcan_last_error(void);

void narcan_string_free(char* text);

/* ------------------------------------------------------------------ */
/* Configuration */

narcan_status narcan_config_default(narcan_config** out);
narcan_status narcan_config_load(const char* path, narcan_config** out);
/* Sets one key to a JSON-encoded value (bare numbers/strings accepted). */
narcan_status narcan_config_set(narcan_config* config, const char* key,
                                const char* value);
narcan_status narcan_config_dump(const narcan_config* config, char** out_json);
void narcan_config_free(narcan_config* config);

/* ------------------------------------------------------------------ */
/* Frames */

narcan_status narcan_frames_load(const char* directory, const char* pattern,
                                 narcan_frames** out);
narcan_status narcan_frames_save(const narcan_frames* frames,
                                 const char* directory);
narcan_status narcan_frames_info(const narcan_frames* frames, int* count,
                                 int* height, int* width);
void narcan_frames_free(narcan_frames* frames);

/* ------------------------------------------------------------------ */
/* Pipeline */

/* Trains per the config (frames_dir, k, schedule, prior backend, ...) and
 * commits checkpoint plus report.jsonl into the config's output_dir. */
narcan_status narcan_fit(const narcan_config* config, char** out_summary_json);

narcan_status narcan_model_load(const char* checkpoint_dir, narcan_model** out);
narcan_status narcan_model_info(const narcan_model* model, int* frame_count,
                                int* height, int* width, int* segments);
void narcan_model_free(narcan_model* model);

/* Reconstruction when edited_canonical is NULL/empty; otherwise renders
 * through the edited canonical raster(s) ("a.png" or "a.png,b.png,..."). */
narcan_status narcan_render(const narcan_model* model,
                            const char* edited_canonical,
                            const char* out_dir);

narcan_status narcan_export_canonical(const narcan_model* model,
                                      const char* out_prefix, int long_side,
                                      int with_grid);

/* Composites an RGBA edit layer over an exported canonical (sidecar
 * geometry reused) and writes the edited canonical + sidecar. */
narcan_status narcan_import_edit(const char* base_canonical_png,
                                 const char* edit_layer_png, const char* mode,
                                 const char* out_png);

narcan_status narcan_propagate_mask(const narcan_model* model,
                                    const char* mask_png, const char* out_dir);

/* ------------------------------------------------------------------ */
/* Metrics */

/* Consistency metrics (short/long warping error, interpolation error) of
 * a frame directory; against_dir (optional) adds PSNR/SSIM. */
narcan_status narcan_metrics(const char* video_dir, const char* against_dir,
                             const char* flow_backend, char** out_json);

narcan_status narcan_compare(const char* video_dir, const char* against_dir,
                             double* out_psnr, double* out_ssim);

/* ------------------------------------------------------------------ */
/* Planning, ablations, fixtures */

narcan_status narcan_plan(int total_frames, int k, int overlap,
                          char** out_json);

/* variant: full | no_homography | no_residual | no_prior */
narcan_status narcan_ablate(const narcan_config* config, const char* variant,
                            char** out_row_json);

/* kind: homography | warp | translation | translation-linear | twoshot */
narcan_status narcan_synthetic(const char* kind, const char* out_dir,
                               int frame_count, int height, int width,
                               uint64_t seed);

#ifdef __cplusplus
}
#endif

#endif /* NARCAN_NARCAN_H */
