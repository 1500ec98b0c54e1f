#include "narcan/image.hpp"

#include <algorithm>
#include <string>

namespace narcan {

void bilinear_sample(const Image& image, double px, double py, float* out) {
  const int w = image.width, h = image.height, c = image.channels;
  const double x = std::clamp(px, 0.0, static_cast<double>(w - 1));
  const double y = std::clamp(py, 0.0, static_cast<double>(h - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  for (int ch = 0; ch < c; ++ch) {
    const double top = (1.0 - fx) * image.at(y0, x0, ch) + fx * image.at(y0, x1, ch);
    const double bot = (1.0 - fx) * image.at(y1, x0, ch) + fx * image.at(y1, x1, ch);
    out[ch] = static_cast<float>((1.0 - fy) * top + fy * bot);
  }
}

void FrameSequence::validate() const {
  if (frame_count() < 2)
    raise(ErrorCode::InvalidArgument, "frame sequence needs at least 2 frames");
  const Image& first = frames.front();
  if (first.height < 8 || first.width < 8)
    raise(ErrorCode::InvalidArgument, "frames must be at least 8x8");
  for (size_t i = 0; i < frames.size(); ++i) {
    const Image& f = frames[i];
    if (f.height != first.height || f.width != first.width ||
        f.channels != first.channels)
      raise(ErrorCode::DimensionMismatch,
            "frame " + std::to_string(i) + " dimensions differ");
    for (float v : f.data)
      if (!std::isfinite(v) || v < 0.0f || v > 1.0f)
        raise(ErrorCode::InvalidArgument,
              "frame " + std::to_string(i) + " has values outside [0,1]");
  }
}

void RasterCanvas::validate() const {
  if (scale <= 0.0)
    raise(ErrorCode::InvalidArgument, "canvas scale must be positive");
  const int c = image.channels;
  if (c != 1 && c != 3 && c != 4)
    raise(ErrorCode::InvalidArgument, "canvas must have 1, 3 or 4 channels");
}

double mse(const Image& a, const Image& b) {
  if (!a.same_shape(b))
    raise(ErrorCode::ShapeMismatch, "mse: image shapes differ");
  double acc = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - b.data[i];
    acc += d * d;
  }
  return a.data.empty() ? 0.0 : acc / static_cast<double>(a.data.size());
}

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::Ok: return "Ok";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::EmptyDirectory: return "EmptyDirectory";
    case ErrorCode::DecodeFailure: return "DecodeFailure";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ManifestMissing: return "ManifestMissing";
    case ErrorCode::DegenerateHomography: return "DegenerateHomography";
    case ErrorCode::GeometryMismatch: return "GeometryMismatch";
    case ErrorCode::UnsupportedCapability: return "UnsupportedCapability";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::InfeasiblePlan: return "InfeasiblePlan";
    case ErrorCode::CoverageError: return "CoverageError";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NumericFailure: return "NumericFailure";
    case ErrorCode::Unknown: return "Unknown";
  }
  return "Unknown";
}

}  // namespace narcan
