#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "narcan/image.hpp"

namespace narcan {

struct FinetuneSpec {
  const FrameSequence* frames = nullptr;
  std::string special_token;
  int steps = 400;
  int rank = 16;
  std::map<std::string, std::string> backend_config;

  void validate() const;
};

// Pluggable denoising prior. Implementations regenerate a target canonical
// from the current one; the base class pins the shared contract: s = 0 is
// the identity, geometry is preserved, channels stay in [0,1].
class PriorProvider {
 public:
  virtual ~PriorProvider() = default;

  virtual std::string name() const = 0;
  virtual bool supports_finetune() const { return false; }
  // False when the backend cannot pin seeds; bit-exactness tests skip then.
  virtual bool deterministic() const { return true; }

  RasterCanvas generate_target(const RasterCanvas& canvas,
                               double noise_strength,
                               const std::string& prompt, uint64_t seed);

  // Returns an opaque adapter id recorded in the provider state.
  std::string finetune(const FinetuneSpec& spec);

  struct FinetuneCall {
    int frame_count = 0;
    std::string token;
  };
  const std::vector<FinetuneCall>& finetune_calls() const { return calls_; }
  const std::string& adapter_id() const { return adapter_id_; }

 protected:
  virtual RasterCanvas generate_impl(const RasterCanvas& canvas,
                                     double noise_strength,
                                     const std::string& prompt,
                                     uint64_t seed) = 0;
  virtual std::string finetune_impl(const FinetuneSpec& spec);

  std::vector<FinetuneCall> calls_;
  std::string adapter_id_;
};

// Mock providers (test doubles; also usable from the CLI).

class IdentityPrior : public PriorProvider {
 public:
  explicit IdentityPrior(bool supports_finetune = true)
      : finetune_(supports_finetune) {}
  std::string name() const override { return "identity"; }
  bool supports_finetune() const override { return finetune_; }

 protected:
  RasterCanvas generate_impl(const RasterCanvas& canvas, double, const std::string&,
                             uint64_t) override;

 private:
  bool finetune_;
};

class BlurPrior : public PriorProvider {
 public:
  explicit BlurPrior(double radius, bool supports_finetune = true)
      : radius_(radius), finetune_(supports_finetune) {}
  std::string name() const override { return "blur"; }
  bool supports_finetune() const override { return finetune_; }

 protected:
  RasterCanvas generate_impl(const RasterCanvas& canvas, double noise_strength,
                             const std::string&, uint64_t) override;

 private:
  double radius_;
  bool finetune_;
};

// Pulls the canonical toward a fixed reference raster; the noise strength
// doubles as the blend weight. When the queried canvas has the reference's
// exact geometry the blend is per-pixel; otherwise the reference is
// resampled over the canonical domain. A query rectangle mostly outside
// the reference is a GeometryMismatch.
class OraclePrior : public PriorProvider {
 public:
  explicit OraclePrior(RasterCanvas reference, bool supports_finetune = true);
  std::string name() const override { return "oracle"; }
  bool supports_finetune() const override { return finetune_; }

 protected:
  RasterCanvas generate_impl(const RasterCanvas& canvas, double noise_strength,
                             const std::string&, uint64_t) override;

 private:
  RasterCanvas reference_;
  bool finetune_;
};

// Mean per-pixel squared channel difference between two canvases of
// identical geometry.
double diffusion_loss(const RasterCanvas& current, const RasterCanvas& target);

// Gaussian blur with clamped borders (shared by BlurPrior and tests).
Image gaussian_blur(const Image& image, double sigma);

Image resize_bilinear(const Image& image, int new_height, int new_width);

}  // namespace narcan
