#include "narcan/metrics.hpp"

#include "doctest.h"
#include "narcan/synth.hpp"
#include "test_util.hpp"

using namespace narcan;

namespace {

// Exact flows for a constant-velocity translation scene: content shifts
// by step per frame, so the forward flow a->b is -(d_b - d_a).
AnalyticFlowBackend analytic_for(const SyntheticScene& scene) {
  const double su = scene.step_u, sv = scene.step_v;
  return AnalyticFlowBackend([su, sv](int ia, int ib, int h, int w) {
    FlowField flow(h, w);
    const float du = static_cast<float>(-su * (ib - ia));
    const float dv = static_cast<float>(-sv * (ib - ia));
    for (size_t i = 0; i < flow.du.size(); ++i) {
      flow.du[i] = du;
      flow.dv[i] = dv;
    }
    return flow;
  });
}

}  // namespace

TEST_CASE("psnr: cap, zero-vs-one, and the 0.1 offset") {
  const Image a = test::random_image(16, 16, 3, 1);
  CHECK(psnr(a, a) == 99.0);

  const Image zeros(16, 16, 3, 0.0f);
  const Image ones(16, 16, 3, 1.0f);
  CHECK(psnr(zeros, ones) == doctest::Approx(0.0).epsilon(1e-9));

  Image offset = zeros;
  for (float& v : offset.data) v = 0.1f;
  CHECK(psnr(zeros, offset) == doctest::Approx(20.0).epsilon(1e-4));

  CHECK(psnr(a, zeros) == doctest::Approx(psnr(zeros, a)));
}

TEST_CASE("psnr/ssim are invariant to a consistent channel permutation") {
  const Image a = test::random_image(24, 24, 3, 2);
  const Image b = test::random_image(24, 24, 3, 3);
  Image ap(24, 24, 3), bp(24, 24, 3);
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 24; ++x)
      for (int c = 0; c < 3; ++c) {
        ap.at(y, x, c) = a.at(y, x, (c + 1) % 3);
        bp.at(y, x, c) = b.at(y, x, (c + 1) % 3);
      }
  CHECK(psnr(ap, bp) == doctest::Approx(psnr(a, b)).epsilon(1e-9));
  CHECK(ssim(ap, bp) == doctest::Approx(ssim(a, b)).epsilon(1e-9));
}

TEST_CASE("ssim is exactly one on identical inputs and below one otherwise") {
  const Image a = test::smooth_image(32, 32, 3);
  CHECK(ssim(a, a) == 1.0);
  Image noisy = a;
  Rng rng(4);
  for (float& v : noisy.data)
    v = std::clamp(v + 0.1f * static_cast<float>(rng.normal()), 0.0f, 1.0f);
  CHECK(ssim(a, noisy) < 0.99);
  CHECK(ssim(a, noisy) == doctest::Approx(ssim(noisy, a)));
}

TEST_CASE("static video scores zero on all three consistency metrics") {
  FrameSequence still;
  still.frames.assign(5, test::smooth_image(32, 32, 3));
  ZeroFlowBackend zero;
  CHECK(warp_error_short(still, zero).value == 0.0);
  CHECK(warp_error_long(still, zero).value == 0.0);
  CHECK(interp_error(still, zero).value == 0.0);

  BlockMatchingFlow block;
  CHECK(warp_error_short(still, block).value == 0.0);
  CHECK(warp_error_long(still, block).value == 0.0);
  CHECK(interp_error(still, block).value == 0.0);
}

TEST_CASE("a linear cross-fade has zero interpolation error under zero flow") {
  const Image a = test::smooth_image(24, 24, 3, 0.0);
  const Image b = test::smooth_image(24, 24, 3, 2.5);
  FrameSequence fade;
  const int T = 6;
  for (int t = 0; t < T; ++t) {
    Image frame(24, 24, 3);
    const float w = static_cast<float>(t) / (T - 1);
    for (size_t i = 0; i < frame.data.size(); ++i)
      frame.data[i] = (1.0f - w) * a.data[i] + w * b.data[i];
    fade.frames.push_back(std::move(frame));
  }
  ZeroFlowBackend zero;
  CHECK(interp_error(fade, zero).value < 1e-4);
}

TEST_CASE("translating video with exact analytic flow stays near zero") {
  const SyntheticScene scene =
      make_synthetic_scene(SceneKind::TranslationLinear, 8, 48, 48, 5);
  AnalyticFlowBackend analytic = analytic_for(scene);
  const WarpErrorResult sw = warp_error_short(scene.frames, analytic);
  const WarpErrorResult lw = warp_error_long(scene.frames, analytic);
  const WarpErrorResult ie = interp_error(scene.frames, analytic);
  CHECK(sw.value <= 1e-4);
  CHECK(lw.value <= 1e-4);
  CHECK(ie.value <= 1.0);
  CHECK(sw.mask_coverage > 0.8);
}

TEST_CASE("independent-noise frames score about twice the pixel variance") {
  // For X,Y independent uniform [0,1]: E[(X-Y)^2] = 2 Var = 1/6.
  FrameSequence noise;
  noise.frames.push_back(test::random_image(64, 64, 3, 10));
  noise.frames.push_back(test::random_image(64, 64, 3, 11));
  ZeroFlowBackend zero;
  const double expected = 1.0 / 6.0;
  const double got = warp_error_short(noise, zero).value;
  CHECK(got == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("scene change collapses the long-term mask and raises the flag") {
  FrameSequence video;
  video.frames.push_back(test::smooth_image(32, 32, 3));
  for (int i = 0; i < 9; ++i)
    video.frames.push_back(test::random_image(32, 32, 3, 20 + i));
  BlockMatchingFlow block;
  const WarpErrorResult lw = warp_error_long(video, block);
  CHECK(lw.mask_coverage < 0.20);
  CHECK(lw.low_coverage);
}

TEST_CASE("metric results are bit-deterministic") {
  const SyntheticScene scene =
      make_synthetic_scene(SceneKind::TranslationLinear, 5, 32, 32, 6);
  BlockMatchingFlow block;
  const double a = warp_error_short(scene.frames, block).value;
  const double b = warp_error_short(scene.frames, block).value;
  CHECK(a == b);
}
