#pragma once

#include <string>
#include <vector>

#include "narcan/flow.hpp"
#include "narcan/image.hpp"

namespace narcan {

// PSNR on the [0,1] scale; identical inputs report the 99 dB cap.
double psnr(const Image& a, const Image& b);
double psnr(const FrameSequence& a, const FrameSequence& b);

// SSIM with the standard 11x11 Gaussian window (sigma 1.5) and constants
// for the [0,1] range, averaged over channels (valid-window region).
double ssim(const Image& a, const Image& b);
double ssim(const FrameSequence& a, const FrameSequence& b);

struct WarpErrorResult {
  double value = 0.0;
  double mask_coverage = 1.0;  // mean fraction of pixels surviving masking
  bool low_coverage = false;   // coverage below 20%
};

// Occlusion-masked MSE between frame t+1 and frame t warped along
// flow(t -> t+1), averaged over consecutive pairs. Masking: valid flow in
// both directions, in-range samples, forward-backward disagreement at
// most 0.01 normalized units.
WarpErrorResult warp_error_short(const FrameSequence& video,
                                 FlowBackend& backend);

// Same masked MSE between anchor frame 0 and every later frame.
WarpErrorResult warp_error_long(const FrameSequence& video,
                                FlowBackend& backend);

// Mean RMSE (0-255 scale) between each interior frame and the average of
// its two flow-warped neighbors.
WarpErrorResult interp_error(const FrameSequence& video, FlowBackend& backend);

struct ConsistencyReport {
  double short_warp = 0.0;
  double long_warp = 0.0;
  double interp = 0.0;
  double short_coverage = 1.0;
  double long_coverage = 1.0;
  double interp_coverage = 1.0;
  bool long_low_coverage = false;
  std::vector<double> per_pair_short;
  std::vector<double> per_pair_long;
  std::vector<double> per_frame_interp;

  std::string to_json() const;
};

ConsistencyReport consistency_report(const FrameSequence& video,
                                     FlowBackend& backend);

}  // namespace narcan
