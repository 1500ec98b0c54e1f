#pragma once

#include <string>

#include "narcan/image.hpp"

namespace narcan {

// Loads every image in the directory whose filename matches the glob
// pattern, sorted lexicographically. Frames are scaled to [0,1].
FrameSequence load_frames(const std::string& directory_path,
                          const std::string& pattern = "*.png");

// Writes frames as 8-bit PNGs named frame_%05d.png. Round-trip error is
// bounded by the quantization step 1/255 per channel.
void save_frames(const FrameSequence& seq, const std::string& directory_path);

// Canonical rasters travel as PNG plus a sidecar manifest
// `<name>.canonical.json` holding origin_u / origin_v / scale / height /
// width so re-import aligns exactly to the canonical domain.
void export_canonical(const RasterCanvas& canvas, const std::string& path);

// Reads a canonical raster. Geometry comes from the sidecar; callers may
// instead pass it explicitly (when both are absent: ManifestMissing).
struct CanvasGeometry {
  double origin_u = 0.0;
  double origin_v = 0.0;
  double scale = 1.0;
};
RasterCanvas import_canonical(const std::string& path);
RasterCanvas import_canonical(const std::string& path,
                              const CanvasGeometry& geometry);

std::string canonical_manifest_path(const std::string& image_path);

}  // namespace narcan
