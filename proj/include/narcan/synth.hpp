#pragma once

#include <array>
#include <functional>
#include <string>

#include "narcan/fields.hpp"
#include "narcan/image.hpp"

namespace narcan {

// Desk-scale fixture scenes with known canonical content, known motion and
// known masks. These are the oracles the tests and the acceptance suite
// check against.
enum class SceneKind {
  Homography,         // smooth projective camera path, rigid scene
  HybridWarp,         // Homography plus a ~2 px sinusoidal non-rigid warp
  TranslationLarge,   // oscillating translation, +-15 px excursion
  TranslationLinear,  // constant-velocity translation (2 px per frame)
  TwoShot,            // hard content cut halfway through
};

SceneKind scene_kind_from_name(const std::string& name);
std::string scene_kind_name(SceneKind kind);

struct SyntheticScene {
  SceneKind kind = SceneKind::Homography;
  FrameSequence frames;
  HomographyTrajectory gt_homography;
  RasterCanvas gt_canonical;    // RGB raster of the canonical content
  RasterCanvas gt_mask_canvas;  // binary disk in canonical space
  std::vector<Image> gt_masks;  // the disk as seen by each frame

  double mask_center_u = 0.0, mask_center_v = 0.0, mask_radius = 0.0;
  int shot_boundary = -1;            // TwoShot only
  double step_u = 0.0, step_v = 0.0; // per-frame shift (TranslationLinear)

  // Canonical color at (u, v) for the shot containing frame t.
  std::function<std::array<double, 3>(double u, double v, int t)> color;
  // Frame-domain point -> canonical point (homography plus warp).
  std::function<Vector2d(double u, double v, int t)> to_canonical;
};

SyntheticScene make_synthetic_scene(SceneKind kind, int frame_count,
                                    int height, int width, uint64_t seed);

// Persists frames/ plus gt/ (canonical raster + sidecar, mask raster,
// per-frame masks, trajectory and scene parameters).
void write_scene(const SyntheticScene& scene, const std::string& directory);

}  // namespace narcan
