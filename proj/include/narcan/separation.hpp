#pragma once

#include <string>
#include <utility>
#include <vector>

#include "narcan/fields.hpp"
#include "narcan/flow.hpp"
#include "narcan/image.hpp"

namespace narcan {

// k segments covering [0, T) with exactly `overlap` shared frames between
// consecutive segments.
struct SegmentPlan {
  int k = 1;
  int overlap = 0;
  std::vector<std::pair<int, int>> segments;  // [start, end)

  int total_frames() const {
    return segments.empty() ? 0 : segments.back().second;
  }
  void validate() const;
};

SegmentPlan plan_segments(int total_frames, int k, int overlap);

// Blend coefficients for frame t: one (segment, 1.0) entry outside
// overlaps, two linearly interpolated entries inside. Weights sum to 1.
std::vector<std::pair<int, double>> blend_weight(const SegmentPlan& plan,
                                                 int t);

struct SegmentModelSet {
  SegmentPlan plan;
  std::vector<NarcanModel> models;

  void validate() const;
};

// Convex per-pixel combination of the per-segment renders.
Image render_blended(const SegmentModelSet& set, int t);

// Checkpoint container. k = 1 keeps the model files at the root next to
// the plan manifest; k > 1 uses segment_00/ ... subdirectories.
void save_model_set(const SegmentModelSet& set, const std::string& directory);
SegmentModelSet load_model_set(const std::string& directory);

// ---------------------------------------------------------------------------
// Grid trick: tile up to 4 canvases into one 2x2 image (row-major, empty
// cells black) so an external editor treats them as one; split restores
// them bit-exactly.

struct GridManifest {
  int k = 0;
  int cell_height = 0;
  int cell_width = 0;
  struct Cell {
    double origin_u = 0.0, origin_v = 0.0, scale = 1.0;
  };
  std::vector<Cell> cells;
};

std::pair<RasterCanvas, GridManifest> grid_concat(
    const std::vector<RasterCanvas>& canvases);
std::vector<RasterCanvas> grid_split(const RasterCanvas& grid,
                                     const GridManifest& manifest);
std::vector<RasterCanvas> grid_split(const RasterCanvas& grid, int k);

void save_grid_manifest(const GridManifest& manifest, const std::string& path);
GridManifest load_grid_manifest(const std::string& path);

// ---------------------------------------------------------------------------
// Edit transfer between canonical images.

// Backward-warps an RGBA edit layer along the flow; pixels with invalid
// flow (or samples leaving the layer) become fully transparent.
RasterCanvas warp_edit(const RasterCanvas& edit, const FlowField& flow);

// Warps an edit authored on canonicals[0] onto every other canonical by
// chaining pairwise flows C_i -> C_{i+1}.
std::vector<RasterCanvas> transfer_edit_chain(
    const RasterCanvas& edit, const std::vector<RasterCanvas>& canonicals,
    FlowBackend& backend);

}  // namespace narcan
