#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "narcan/fields.hpp"
#include "narcan/image.hpp"

namespace narcan {

// Dense forward flow of image a toward image b in normalized units:
// content at pixel p of a appears at p + (du*W, dv*H) in b.
struct FlowField {
  int height = 0;
  int width = 0;
  std::vector<float> du, dv;     // normalized (pixel shift / dimension)
  std::vector<uint8_t> valid;

  FlowField() = default;
  FlowField(int h, int w)
      : height(h), width(w),
        du(static_cast<size_t>(h) * w, 0.0f),
        dv(static_cast<size_t>(h) * w, 0.0f),
        valid(static_cast<size_t>(h) * w, 1) {}

  size_t index(int y, int x) const {
    return static_cast<size_t>(y) * width + x;
  }
};

class FlowBackend {
 public:
  virtual ~FlowBackend() = default;
  virtual std::string name() const = 0;
  // index_a / index_b are the frame positions when known (analytic test
  // backends key on them); image-based backends ignore them.
  virtual FlowField compute(const Image& a, const Image& b, int index_a = -1,
                            int index_b = -1) = 0;
};

// Zero flow everywhere, all valid.
class ZeroFlowBackend : public FlowBackend {
 public:
  std::string name() const override { return "zero"; }
  FlowField compute(const Image& a, const Image& b, int, int) override;
};

// Reference backend: exhaustive integer-shift block matching (SSD over an
// 8x8 patch, search radius 12 by default). Slow but a dependable oracle.
// Textureless patches are marked invalid. Ties resolve toward the smaller
// displacement, so identical frames give exactly zero flow.
class BlockMatchingFlow : public FlowBackend {
 public:
  explicit BlockMatchingFlow(int patch = 8, int radius = 12,
                             double variance_threshold = 1e-4)
      : patch_(patch), radius_(radius), var_threshold_(variance_threshold) {}
  std::string name() const override { return "block"; }
  FlowField compute(const Image& a, const Image& b, int, int) override;

 private:
  int patch_;
  int radius_;
  double var_threshold_;
};

// Test oracle wrapping a closure over frame indices.
class AnalyticFlowBackend : public FlowBackend {
 public:
  using Fn = std::function<FlowField(int index_a, int index_b, int height,
                                     int width)>;
  explicit AnalyticFlowBackend(Fn fn) : fn_(std::move(fn)) {}
  std::string name() const override { return "analytic"; }
  FlowField compute(const Image& a, const Image& b, int index_a,
                    int index_b) override;

 private:
  Fn fn_;
};

FlowField flow_between(const Image& a, const Image& b, FlowBackend& backend,
                       int index_a = -1, int index_b = -1);

// Gather-warp: out(p) = src(p - flow(p)), bilinear. sample_ok (when given)
// marks pixels whose flow was valid and whose source sample stayed in
// range.
Image warp_by_flow(const Image& src, const FlowField& flow,
                   std::vector<uint8_t>* sample_ok = nullptr);

std::unique_ptr<FlowBackend> make_flow_backend(const std::string& name);

// Least-squares homography (normalized-coordinate DLT) from a dense flow
// field; maps a-coordinates to b-coordinates.
Matrix3d homography_from_flow(const FlowField& flow);

// Seeds a per-frame trajectory by chaining pairwise flow-based estimates,
// anchored at the identity for frame 0.
HomographyTrajectory chain_homographies_from_flow(const FrameSequence& seq,
                                                  FlowBackend& backend);

}  // namespace narcan
