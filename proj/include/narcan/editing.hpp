#pragma once

#include <vector>

#include "narcan/image.hpp"
#include "narcan/separation.hpp"

namespace narcan {

enum class BlendMode { Replace, AlphaOver };

// RGBA layer drawn over a canonical raster.
struct EditLayer {
  RasterCanvas canvas;
  BlendMode mode = BlendMode::AlphaOver;

  void validate() const;
};

// Single-channel {0,1} canonical-space mask.
struct MaskLayer {
  RasterCanvas canvas;

  void validate() const;
};

RasterCanvas composite_edit(const RasterCanvas& base, const EditLayer& edit);

// Renders the video with the canonical network replaced by bilinear
// lookups into the edited raster(s). One canvas broadcasts to every
// segment; otherwise pass one canvas per segment. RGB canvases replace
// the canonical entirely; RGBA canvases composite over it, leaving
// alpha-0 pixels bit-identical to the reconstruction.
FrameSequence render_edited_video(const SegmentModelSet& set,
                                  const std::vector<RasterCanvas>& edited);
FrameSequence render_edited_video(const SegmentModelSet& set,
                                  const RasterCanvas& edited);

// Nearest-neighbor mask propagation (binarity preserved). For separated
// sets each frame samples the dominant-weight segment.
std::vector<Image> propagate_mask(const SegmentModelSet& set,
                                  const MaskLayer& mask);

}  // namespace narcan
