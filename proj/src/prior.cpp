#include "narcan/prior.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace narcan {

void FinetuneSpec::validate() const {
  if (!frames) raise(ErrorCode::InvalidArgument, "finetune: frames missing");
  if (special_token.empty() ||
      special_token.find_first_of(" \t\n\r") != std::string::npos)
    raise(ErrorCode::InvalidArgument,
          "finetune: special_token must be non-empty without whitespace");
  if (steps < 1) raise(ErrorCode::InvalidArgument, "finetune: steps >= 1");
}

RasterCanvas PriorProvider::generate_target(const RasterCanvas& canvas,
                                            double noise_strength,
                                            const std::string& prompt,
                                            uint64_t seed) {
  canvas.validate();
  if (canvas.channels() != 3)
    raise(ErrorCode::InvalidArgument, "generate_target: canvas must be RGB");
  if (!(noise_strength >= 0.0 && noise_strength <= 1.0))
    raise(ErrorCode::InvalidArgument,
          "generate_target: noise_strength must be in [0,1]");
  if (noise_strength == 0.0) return canvas;  // contract: s=0 is the identity

  RasterCanvas out = generate_impl(canvas, noise_strength, prompt, seed);
  if (!out.same_geometry(canvas))
    raise(ErrorCode::GeometryMismatch,
          name() + " provider changed the canvas geometry");
  for (float& v : out.image.data) v = std::clamp(v, 0.0f, 1.0f);
  return out;
}

std::string PriorProvider::finetune(const FinetuneSpec& spec) {
  spec.validate();
  if (!supports_finetune())
    raise(ErrorCode::UnsupportedCapability,
          name() + " provider does not support fine-tuning");
  calls_.push_back({spec.frames->frame_count(), spec.special_token});
  adapter_id_ = finetune_impl(spec);
  return adapter_id_;
}

std::string PriorProvider::finetune_impl(const FinetuneSpec& spec) {
  return name() + "-adapter-" + spec.special_token;
}

RasterCanvas IdentityPrior::generate_impl(const RasterCanvas& canvas, double,
                                          const std::string&, uint64_t) {
  return canvas;
}

RasterCanvas BlurPrior::generate_impl(const RasterCanvas& canvas,
                                      double noise_strength,
                                      const std::string&, uint64_t) {
  RasterCanvas out = canvas;
  const Image blurred = gaussian_blur(canvas.image, radius_);
  // Blend toward the blurred image so strength keeps its schedule meaning.
  for (size_t i = 0; i < out.image.data.size(); ++i)
    out.image.data[i] = static_cast<float>(
        (1.0 - noise_strength) * canvas.image.data[i] +
        noise_strength * blurred.data[i]);
  return out;
}

OraclePrior::OraclePrior(RasterCanvas reference, bool supports_finetune)
    : reference_(std::move(reference)), finetune_(supports_finetune) {
  reference_.validate();
  if (reference_.channels() != 3)
    raise(ErrorCode::InvalidArgument, "oracle reference must be RGB");
}

RasterCanvas OraclePrior::generate_impl(const RasterCanvas& canvas,
                                        double s, const std::string&,
                                        uint64_t) {
  RasterCanvas out = canvas;
  if (canvas.same_geometry(reference_)) {
    for (size_t i = 0; i < out.image.data.size(); ++i)
      out.image.data[i] =
          static_cast<float>((1.0 - s) * canvas.image.data[i] +
                             s * reference_.image.data[i]);
    return out;
  }

  // Differing geometry: sample the reference over the canonical domain.
  // Requires the query rectangle to mostly overlap the reference.
  const auto rect = [](const RasterCanvas& c) {
    return std::array<double, 4>{
        c.origin_u - 0.5 * c.scale, c.origin_v - 0.5 * c.scale,
        c.origin_u + (c.width() - 0.5) * c.scale,
        c.origin_v + (c.height() - 0.5) * c.scale};
  };
  const auto q = rect(canvas), r = rect(reference_);
  const double ix = std::max(0.0, std::min(q[2], r[2]) - std::max(q[0], r[0]));
  const double iy = std::max(0.0, std::min(q[3], r[3]) - std::max(q[1], r[1]));
  const double q_area = (q[2] - q[0]) * (q[3] - q[1]);
  if (q_area <= 0.0 || (ix * iy) / q_area < 0.5)
    raise(ErrorCode::GeometryMismatch,
          "oracle reference covers less than half of the queried canvas");

  float sample[4];
  for (int y = 0; y < canvas.height(); ++y)
    for (int x = 0; x < canvas.width(); ++x) {
      const double u = canvas.pixel_u(x), v = canvas.pixel_v(y);
      bilinear_sample(reference_.image, reference_.to_px(u),
                      reference_.to_py(v), sample);
      for (int c = 0; c < 3; ++c)
        out.image.at(y, x, c) = static_cast<float>(
            (1.0 - s) * canvas.image.at(y, x, c) + s * sample[c]);
    }
  return out;
}

double diffusion_loss(const RasterCanvas& current, const RasterCanvas& target) {
  if (!current.same_geometry(target) ||
      current.channels() != target.channels())
    raise(ErrorCode::GeometryMismatch, "diffusion_loss: geometry differs");
  return mse(current.image, target.image);
}

Image gaussian_blur(const Image& image, double sigma) {
  if (sigma <= 0.0) return image;
  const int radius = std::max(1, static_cast<int>(std::ceil(2.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += kernel[i + radius];
  }
  for (double& k : kernel) k /= sum;

  const int h = image.height, w = image.width, c = image.channels;
  Image tmp(h, w, c), out(h, w, c);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int xx = std::clamp(x + i, 0, w - 1);
          acc += kernel[i + radius] * image.at(y, xx, ch);
        }
        tmp.at(y, x, ch) = static_cast<float>(acc);
      }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int yy = std::clamp(y + i, 0, h - 1);
          acc += kernel[i + radius] * tmp.at(yy, x, ch);
        }
        out.at(y, x, ch) = static_cast<float>(acc);
      }
  return out;
}

Image resize_bilinear(const Image& image, int new_height, int new_width) {
  Image out(new_height, new_width, image.channels);
  std::vector<float> sample(image.channels);
  for (int y = 0; y < new_height; ++y)
    for (int x = 0; x < new_width; ++x) {
      const double sx =
          (x + 0.5) * image.width / static_cast<double>(new_width) - 0.5;
      const double sy =
          (y + 0.5) * image.height / static_cast<double>(new_height) - 0.5;
      bilinear_sample(image, sx, sy, sample.data());
      for (int c = 0; c < image.channels; ++c) out.at(y, x, c) = sample[c];
    }
  return out;
}

}  // namespace narcan
