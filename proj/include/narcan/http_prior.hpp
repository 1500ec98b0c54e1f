#pragma once

#include "narcan/prior.hpp"

namespace narcan {

// Adapter for an external denoiser speaking the minimal HTTP/JSON contract:
//   POST /finetune {frames: [base64 PNG], token, steps, rank} -> {adapter_id}
//   POST /img2img  {image: base64 PNG, strength, prompt, seed, adapter_id}
//                  -> {image: base64 PNG}
// The canvas is resampled to the backend's native square resolution and
// back; geometry is restored on return.
class HttpPrior : public PriorProvider {
 public:
  explicit HttpPrior(std::string base_url, int native_resolution = 512,
                     bool backend_deterministic = true);

  std::string name() const override { return "http"; }
  bool supports_finetune() const override { return true; }
  bool deterministic() const override { return deterministic_; }

 protected:
  RasterCanvas generate_impl(const RasterCanvas& canvas, double noise_strength,
                             const std::string& prompt,
                             uint64_t seed) override;
  std::string finetune_impl(const FinetuneSpec& spec) override;

 private:
  std::string host_;
  int port_ = 80;
  int native_resolution_;
  bool deterministic_;
};

}  // namespace narcan
