#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "narcan/error.hpp"

namespace narcan {

// Dense H x W x C raster, row-major, float channels. Video frames keep
// values in [0,1]; masks use {0,1} in a single channel.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;

  Image() = default;
  Image(int h, int w, int c, float fill = 0.0f)
      : height(h), width(w), channels(c),
        data(static_cast<size_t>(h) * w * c, fill) {}

  float& at(int y, int x, int c) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  float at(int y, int x, int c) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }

  bool same_shape(const Image& other) const {
    return height == other.height && width == other.width &&
           channels == other.channels;
  }
  size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
};

// Bilinear sample at pixel coordinates (px, py), clamped to the border.
// Channel values are gathered into `out` (length image.channels).
void bilinear_sample(const Image& image, double px, double py, float* out);

// Ordered frames of one video. All frames share dimensions; T >= 2.
struct FrameSequence {
  std::vector<Image> frames;
  std::optional<double> fps;

  int frame_count() const { return static_cast<int>(frames.size()); }
  int height() const { return frames.empty() ? 0 : frames.front().height; }
  int width() const { return frames.empty() ? 0 : frames.front().width; }

  // Normalized time for the networks: index / (T - 1).
  double t_norm(int index) const {
    const int T = frame_count();
    return T > 1 ? static_cast<double>(index) / (T - 1) : 0.0;
  }

  void validate() const;
};

// Raster view of a piece of the canonical domain. origin is the canonical
// coordinate of the center of pixel (0,0); scale is canonical units per
// pixel, identical in u and v.
struct RasterCanvas {
  Image image;
  double origin_u = 0.0;
  double origin_v = 0.0;
  double scale = 1.0;

  int height() const { return image.height; }
  int width() const { return image.width; }
  int channels() const { return image.channels; }

  double pixel_u(int x) const { return origin_u + x * scale; }
  double pixel_v(int y) const { return origin_v + y * scale; }

  // Canonical coordinate -> continuous pixel coordinate.
  double to_px(double u) const { return (u - origin_u) / scale; }
  double to_py(double v) const { return (v - origin_v) / scale; }

  // True when the canonical point lies inside the canvas pixel extent
  // (half a pixel beyond the outermost centers).
  bool covers(double u, double v) const {
    const double px = to_px(u), py = to_py(v);
    const double eps = 1e-9;
    return px >= -0.5 - eps && px <= width() - 0.5 + eps &&
           py >= -0.5 - eps && py <= height() - 0.5 + eps;
  }

  bool same_geometry(const RasterCanvas& other) const {
    return origin_u == other.origin_u && origin_v == other.origin_v &&
           scale == other.scale && image.height == other.image.height &&
           image.width == other.image.width;
  }

  void validate() const;
};

// Pixel-center normalized coordinates of video frames:
// u = (x + 0.5) / W, v = (y + 0.5) / H.
inline double frame_u(int x, int width) { return (x + 0.5) / width; }
inline double frame_v(int y, int height) { return (y + 0.5) / height; }

double mse(const Image& a, const Image& b);

}  // namespace narcan
