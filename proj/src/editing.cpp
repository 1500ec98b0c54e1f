#include "narcan/editing.hpp"

#include <algorithm>
#include <cmath>

namespace narcan {

void EditLayer::validate() const {
  canvas.validate();
  if (canvas.channels() != 4)
    raise(ErrorCode::InvalidArgument, "edit layer must be RGBA");
  for (int y = 0; y < canvas.height(); ++y)
    for (int x = 0; x < canvas.width(); ++x) {
      const float a = canvas.image.at(y, x, 3);
      if (!(a >= 0.0f && a <= 1.0f))
        raise(ErrorCode::InvalidArgument, "edit alpha outside [0,1]");
    }
}

void MaskLayer::validate() const {
  canvas.validate();
  if (canvas.channels() != 1)
    raise(ErrorCode::InvalidArgument, "mask layer must be single-channel");
  for (float v : canvas.image.data)
    if (v != 0.0f && v != 1.0f)
      raise(ErrorCode::InvalidArgument, "mask values must be 0 or 1");
}

RasterCanvas composite_edit(const RasterCanvas& base, const EditLayer& edit) {
  edit.validate();
  base.validate();
  if (base.channels() != 3 && base.channels() != 4)
    raise(ErrorCode::InvalidArgument, "composite base must be RGB or RGBA");
  if (base.origin_u != edit.canvas.origin_u ||
      base.origin_v != edit.canvas.origin_v ||
      base.scale != edit.canvas.scale ||
      base.height() != edit.canvas.height() ||
      base.width() != edit.canvas.width())
    raise(ErrorCode::GeometryMismatch, "composite_edit: geometry differs");

  RasterCanvas out = base;
  for (int y = 0; y < base.height(); ++y)
    for (int x = 0; x < base.width(); ++x) {
      const float a = edit.canvas.image.at(y, x, 3);
      if (edit.mode == BlendMode::Replace) {
        if (a > 0.0f)
          for (int c = 0; c < 3; ++c)
            out.image.at(y, x, c) = edit.canvas.image.at(y, x, c);
      } else {
        if (a > 0.0f)
          for (int c = 0; c < 3; ++c)
            out.image.at(y, x, c) =
                a * edit.canvas.image.at(y, x, c) +
                (1.0f - a) * base.image.at(y, x, c);
      }
    }
  return out;
}

namespace {

struct CoverageCounter {
  long outside = 0;
  long total = 0;
};

// One frame sampled through segment `si`'s deformation into the canvas.
// RGB canvases replace the canonical network; RGBA composites over it.
Image sample_segment_frame(const NarcanModel& model, int local_t,
                           const RasterCanvas& canvas,
                           CoverageCounter& coverage) {
  const int h = model.frame_height, w = model.frame_width;
  const long n = static_cast<long>(h) * w;
  VectorXd u(n), v(n);
  std::vector<int> t(n, local_t);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      u[static_cast<long>(y) * w + x] = frame_u(x, w);
      v[static_cast<long>(y) * w + x] = frame_v(y, h);
    }
  BatchForward fwd;
  model_forward(model, u, v, t, /*use_residual=*/true, fwd);

  const bool rgba = canvas.channels() == 4;
  Image out(h, w, 3);
  std::vector<float> sample(canvas.channels());
  for (long i = 0; i < n; ++i) {
    const double cu = fwd.u_prime[i], cv = fwd.v_prime[i];
    coverage.total += 1;
    const bool inside = canvas.covers(cu, cv);
    if (!inside) coverage.outside += 1;

    if (!rgba) {
      if (inside) {
        bilinear_sample(canvas.image, canvas.to_px(cu), canvas.to_py(cv),
                        sample.data());
        for (int c = 0; c < 3; ++c) out.data[i * 3 + c] = sample[c];
      }
      continue;
    }

    // RGBA: out-of-coverage or alpha-0 keeps the reconstruction exactly.
    float alpha = 0.0f;
    if (inside) {
      bilinear_sample(canvas.image, canvas.to_px(cu), canvas.to_py(cv),
                      sample.data());
      alpha = sample[3];
    }
    if (alpha > 0.0f) {
      for (int c = 0; c < 3; ++c)
        out.data[i * 3 + c] = alpha * sample[c] +
                              (1.0f - alpha) * static_cast<float>(fwd.rgb(i, c));
    } else {
      for (int c = 0; c < 3; ++c)
        out.data[i * 3 + c] = static_cast<float>(fwd.rgb(i, c));
    }
  }
  return out;
}

}  // namespace

FrameSequence render_edited_video(const SegmentModelSet& set,
                                  const std::vector<RasterCanvas>& edited) {
  set.validate();
  if (edited.empty())
    raise(ErrorCode::InvalidArgument, "render_edited_video: no canvases");
  if (edited.size() != 1 && static_cast<int>(edited.size()) != set.plan.k)
    raise(ErrorCode::InvalidArgument,
          "render_edited_video: pass one canvas or one per segment");
  for (const RasterCanvas& c : edited) {
    c.validate();
    if (c.channels() != 3 && c.channels() != 4)
      raise(ErrorCode::InvalidArgument, "edited canonical must be RGB or RGBA");
  }

  const int T = set.plan.total_frames();
  FrameSequence out;
  out.frames.resize(T);
  for (int t = 0; t < T; ++t) {
    CoverageCounter coverage;
    Image blended;
    for (const auto& [si, alpha] : blend_weight(set.plan, t)) {
      const RasterCanvas& canvas =
          edited.size() == 1 ? edited[0] : edited[si];
      const bool strict = canvas.channels() == 3;
      CoverageCounter local;
      Image part = sample_segment_frame(
          set.models[si], t - set.plan.segments[si].first, canvas, local);
      if (strict && local.outside > 0)
        raise(ErrorCode::CoverageError,
              "frame " + std::to_string(t) + ": " +
                  std::to_string(static_cast<double>(local.outside) /
                                 local.total) +
                  " of samples fall outside the edited canonical");
      coverage.outside += local.outside;
      coverage.total += local.total;
      if (blended.empty()) {
        blended = std::move(part);
        if (alpha != 1.0)
          for (float& v : blended.data) v = static_cast<float>(v * alpha);
      } else {
        for (size_t i = 0; i < blended.data.size(); ++i)
          blended.data[i] =
              static_cast<float>(blended.data[i] + alpha * part.data[i]);
      }
    }
    out.frames[t] = std::move(blended);
  }
  return out;
}

FrameSequence render_edited_video(const SegmentModelSet& set,
                                  const RasterCanvas& edited) {
  return render_edited_video(set, std::vector<RasterCanvas>{edited});
}

std::vector<Image> propagate_mask(const SegmentModelSet& set,
                                  const MaskLayer& mask) {
  set.validate();
  mask.validate();
  const RasterCanvas& canvas = mask.canvas;
  const int T = set.plan.total_frames();
  std::vector<Image> out;
  out.reserve(T);
  for (int t = 0; t < T; ++t) {
    // Nearest sampling keeps the mask binary; separated sets use the
    // dominant-weight segment.
    const auto weights = blend_weight(set.plan, t);
    int si = weights.front().first;
    double best = weights.front().second;
    for (const auto& [idx, alpha] : weights)
      if (alpha > best) {
        best = alpha;
        si = idx;
      }
    const NarcanModel& model = set.models[si];
    const int local_t = t - set.plan.segments[si].first;
    const int h = model.frame_height, w = model.frame_width;
    Image frame_mask(h, w, 1, 0.0f);
    long outside = 0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const Vector2d q = deform(model, frame_u(x, w), frame_v(y, h), local_t);
        if (!canvas.covers(q.x(), q.y())) {
          ++outside;
          continue;
        }
        const int px = static_cast<int>(std::lround(canvas.to_px(q.x())));
        const int py = static_cast<int>(std::lround(canvas.to_py(q.y())));
        const int cx = std::clamp(px, 0, canvas.width() - 1);
        const int cy = std::clamp(py, 0, canvas.height() - 1);
        frame_mask.at(y, x, 0) = canvas.image.at(cy, cx, 0) > 0.5f ? 1.0f : 0.0f;
      }
    if (outside > 0)
      raise(ErrorCode::CoverageError,
            "frame " + std::to_string(t) + ": " +
                std::to_string(static_cast<double>(outside) /
                               (static_cast<double>(h) * w)) +
                " of samples fall outside the mask raster");
    out.push_back(std::move(frame_mask));
  }
  return out;
}

}  // namespace narcan
