#pragma once

#include <string>
#include <vector>

#include "narcan/config.hpp"
#include "narcan/separation.hpp"

namespace narcan {

// End-to-end commands behind the CLI and the C API. All writes commit via
// temp-then-rename so interrupted runs never leave torn outputs.

struct FitOutcome {
  std::string checkpoint_dir;
  std::string report_path;
  double mean_psnr = 0.0;
  std::vector<double> segment_psnr;
};

// Optional fine-tune, per-segment training, checkpoint + report commit.
FitOutcome fit_pipeline(const ProjectConfig& config);

// Reconstruction (edited_canonical empty) or edit propagation. The edit
// argument accepts one canonical image path, or a comma-separated list
// with one path per segment.
void render_pipeline(const std::string& checkpoint_dir,
                     const std::string& edited_canonical,
                     const std::string& out_dir);

// Renders the canonical raster(s) of a checkpoint to <out_prefix>.png (or
// <out_prefix>_00.png ... per segment, plus <out_prefix>_grid.png when
// requested for up to 4 segments).
void export_canonical_pipeline(const std::string& checkpoint_dir,
                               const std::string& out_prefix, int long_side,
                               bool with_grid);

void import_edit_pipeline(const std::string& base_path,
                          const std::string& edit_path,
                          const std::string& mode, const std::string& out_path);

void propagate_mask_pipeline(const std::string& checkpoint_dir,
                             const std::string& mask_path,
                             const std::string& out_dir);

// Consistency metrics of a frame directory as JSON; with `against_dir`
// non-empty, adds PSNR/SSIM between the two sequences.
std::string metrics_pipeline(const std::string& video_dir,
                             const std::string& against_dir,
                             const std::string& flow_backend_name);

// Runs the fit with the named ablation variant and returns the report row.
std::string ablate_pipeline(const ProjectConfig& config,
                            const std::string& variant);

std::string plan_pipeline(int total_frames, int k, int overlap);

void synthetic_pipeline(const std::string& kind, const std::string& out_dir,
                        int frame_count, int height, int width, uint64_t seed);

}  // namespace narcan
