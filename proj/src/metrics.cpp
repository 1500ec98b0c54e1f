#include "narcan/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

using nlohmann::json;

namespace narcan {

double psnr(const Image& a, const Image& b) {
  const double m = mse(a, b);
  if (m <= 0.0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(1.0 / m));
}

double psnr(const FrameSequence& a, const FrameSequence& b) {
  if (a.frame_count() != b.frame_count())
    raise(ErrorCode::ShapeMismatch, "psnr: frame counts differ");
  double acc = 0.0;
  for (int t = 0; t < a.frame_count(); ++t)
    acc += psnr(a.frames[t], b.frames[t]);
  return acc / a.frame_count();
}

namespace {

double ssim_channel(const Image& a, const Image& b, int ch) {
  const int h = a.height, w = a.width;
  int win = std::min({11, h, w});
  if (win % 2 == 0) --win;
  const int half = win / 2;
  const double sigma = 1.5;

  std::vector<double> kernel(static_cast<size_t>(win) * win);
  double ksum = 0.0;
  for (int y = 0; y < win; ++y)
    for (int x = 0; x < win; ++x) {
      const double dy = y - half, dx = x - half;
      const double k = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      kernel[static_cast<size_t>(y) * win + x] = k;
      ksum += k;
    }
  for (double& k : kernel) k /= ksum;

  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;

  double acc = 0.0;
  long count = 0;
  for (int y = half; y < h - half; ++y)
    for (int x = half; x < w - half; ++x) {
      double mu_a = 0.0, mu_b = 0.0;
      for (int ky = 0; ky < win; ++ky)
        for (int kx = 0; kx < win; ++kx) {
          const double k = kernel[static_cast<size_t>(ky) * win + kx];
          mu_a += k * a.at(y + ky - half, x + kx - half, ch);
          mu_b += k * b.at(y + ky - half, x + kx - half, ch);
        }
      double var_a = 0.0, var_b = 0.0, cov = 0.0;
      for (int ky = 0; ky < win; ++ky)
        for (int kx = 0; kx < win; ++kx) {
          const double k = kernel[static_cast<size_t>(ky) * win + kx];
          const double da = a.at(y + ky - half, x + kx - half, ch) - mu_a;
          const double db = b.at(y + ky - half, x + kx - half, ch) - mu_b;
          var_a += k * da * da;
          var_b += k * db * db;
          cov += k * da * db;
        }
      const double num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
      const double den =
          (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
      acc += num / den;
      ++count;
    }
  return count > 0 ? acc / count : 1.0;
}

}  // namespace

double ssim(const Image& a, const Image& b) {
  if (!a.same_shape(b))
    raise(ErrorCode::ShapeMismatch, "ssim: image shapes differ");
  double acc = 0.0;
  for (int ch = 0; ch < a.channels; ++ch) acc += ssim_channel(a, b, ch);
  return acc / a.channels;
}

double ssim(const FrameSequence& a, const FrameSequence& b) {
  if (a.frame_count() != b.frame_count())
    raise(ErrorCode::ShapeMismatch, "ssim: frame counts differ");
  double acc = 0.0;
  for (int t = 0; t < a.frame_count(); ++t)
    acc += ssim(a.frames[t], b.frames[t]);
  return acc / a.frame_count();
}

namespace {

constexpr double kFbThreshold = 0.01;  // normalized units

struct PairError {
  double value = 0.0;
  double coverage = 0.0;
  bool any = false;
};

// Occlusion-masked MSE between `target` and `source` warped along the
// forward flow source -> target.
PairError masked_warp_mse(const Image& source, const Image& target,
                          FlowBackend& backend, int index_src,
                          int index_dst) {
  const FlowField fwd =
      flow_between(source, target, backend, index_src, index_dst);
  const FlowField bwd =
      flow_between(target, source, backend, index_dst, index_src);
  std::vector<uint8_t> sample_ok;
  const Image warped = warp_by_flow(source, fwd, &sample_ok);

  const int h = target.height, w = target.width, c = target.channels;
  double acc = 0.0;
  long kept = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const size_t i = fwd.index(y, x);
      if (!fwd.valid[i] || !bwd.valid[i] || !sample_ok[i]) continue;
      const double ddu = static_cast<double>(fwd.du[i]) + bwd.du[i];
      const double ddv = static_cast<double>(fwd.dv[i]) + bwd.dv[i];
      if (std::sqrt(ddu * ddu + ddv * ddv) > kFbThreshold) continue;
      double px = 0.0;
      for (int ch = 0; ch < c; ++ch) {
        const double d = target.at(y, x, ch) - warped.at(y, x, ch);
        px += d * d;
      }
      acc += px / c;
      ++kept;
    }
  PairError e;
  e.coverage = static_cast<double>(kept) / (static_cast<double>(h) * w);
  if (kept > 0) {
    e.value = acc / kept;
    e.any = true;
  }
  return e;
}

WarpErrorResult reduce_pairs(const std::vector<PairError>& pairs,
                             std::vector<double>* per_pair) {
  WarpErrorResult r;
  double vsum = 0.0, csum = 0.0;
  long counted = 0;
  for (const PairError& p : pairs) {
    csum += p.coverage;
    if (per_pair) per_pair->push_back(p.any ? p.value : 0.0);
    if (p.any) {
      vsum += p.value;
      ++counted;
    }
  }
  r.value = counted > 0 ? vsum / counted : 0.0;
  r.mask_coverage = pairs.empty() ? 1.0 : csum / pairs.size();
  r.low_coverage = r.mask_coverage < 0.20;
  return r;
}

}  // namespace

WarpErrorResult warp_error_short(const FrameSequence& video,
                                 FlowBackend& backend) {
  if (video.frame_count() < 2)
    raise(ErrorCode::InvalidArgument, "warp_error_short: need T >= 2");
  std::vector<PairError> pairs;
  for (int t = 0; t + 1 < video.frame_count(); ++t)
    pairs.push_back(masked_warp_mse(video.frames[t], video.frames[t + 1],
                                    backend, t, t + 1));
  return reduce_pairs(pairs, nullptr);
}

WarpErrorResult warp_error_long(const FrameSequence& video,
                                FlowBackend& backend) {
  if (video.frame_count() < 2)
    raise(ErrorCode::InvalidArgument, "warp_error_long: need T >= 2");
  std::vector<PairError> pairs;
  for (int t = 1; t < video.frame_count(); ++t)
    pairs.push_back(
        masked_warp_mse(video.frames[0], video.frames[t], backend, 0, t));
  return reduce_pairs(pairs, nullptr);
}

namespace {

// Per interior frame: RMSE (0-255) against the average of the two
// flow-warped neighbors, plus the surviving-pixel fraction.
std::vector<PairError> interp_per_frame(const FrameSequence& video,
                                        FlowBackend& backend) {
  const int h = video.height(), w = video.width();
  std::vector<PairError> frames;
  for (int t = 1; t + 1 < video.frame_count(); ++t) {
    const FlowField f_prev = flow_between(video.frames[t - 1], video.frames[t],
                                          backend, t - 1, t);
    const FlowField f_next = flow_between(video.frames[t + 1], video.frames[t],
                                          backend, t + 1, t);
    std::vector<uint8_t> ok_prev, ok_next;
    const Image from_prev = warp_by_flow(video.frames[t - 1], f_prev, &ok_prev);
    const Image from_next = warp_by_flow(video.frames[t + 1], f_next, &ok_next);

    double acc = 0.0;
    long kept = 0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const size_t i = f_prev.index(y, x);
        if (!ok_prev[i] || !ok_next[i]) continue;
        for (int ch = 0; ch < video.frames[t].channels; ++ch) {
          const double mid =
              0.5 * (from_prev.at(y, x, ch) + from_next.at(y, x, ch));
          const double d = 255.0 * (video.frames[t].at(y, x, ch) - mid);
          acc += d * d;
          ++kept;
        }
      }
    PairError e;
    e.coverage = static_cast<double>(kept) /
                 (static_cast<double>(h) * w * video.frames[t].channels);
    if (kept > 0) {
      e.value = std::sqrt(acc / kept);
      e.any = true;
    }
    frames.push_back(e);
  }
  return frames;
}

}  // namespace

WarpErrorResult interp_error(const FrameSequence& video, FlowBackend& backend) {
  if (video.frame_count() < 3)
    raise(ErrorCode::InvalidArgument, "interp_error: need T >= 3");
  return reduce_pairs(interp_per_frame(video, backend), nullptr);
}

ConsistencyReport consistency_report(const FrameSequence& video,
                                     FlowBackend& backend) {
  ConsistencyReport report;

  std::vector<PairError> spairs;
  for (int t = 0; t + 1 < video.frame_count(); ++t)
    spairs.push_back(masked_warp_mse(video.frames[t], video.frames[t + 1],
                                     backend, t, t + 1));
  const WarpErrorResult s = reduce_pairs(spairs, &report.per_pair_short);
  report.short_warp = s.value;
  report.short_coverage = s.mask_coverage;

  std::vector<PairError> lpairs;
  for (int t = 1; t < video.frame_count(); ++t)
    lpairs.push_back(
        masked_warp_mse(video.frames[0], video.frames[t], backend, 0, t));
  const WarpErrorResult l = reduce_pairs(lpairs, &report.per_pair_long);
  report.long_warp = l.value;
  report.long_coverage = l.mask_coverage;
  report.long_low_coverage = l.low_coverage;

  if (video.frame_count() >= 3) {
    const WarpErrorResult ie =
        reduce_pairs(interp_per_frame(video, backend), &report.per_frame_interp);
    report.interp = ie.value;
    report.interp_coverage = ie.mask_coverage;
  }
  return report;
}

std::string ConsistencyReport::to_json() const {
  json j = {
      {"short_warp", short_warp},
      {"long_warp", long_warp},
      {"interp_error", interp},
      {"short_coverage", short_coverage},
      {"long_coverage", long_coverage},
      {"interp_coverage", interp_coverage},
      {"long_low_coverage", long_low_coverage},
      {"per_pair_short", per_pair_short},
      {"per_pair_long", per_pair_long},
      {"per_frame_interp", per_frame_interp},
  };
  return j.dump(2);
}

}  // namespace narcan
