#include "narcan/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cstring>

namespace narcan {

namespace {

uint32_t format_for_channels(int channels) {
  switch (channels) {
    case 1: return PNG_FORMAT_GRAY;
    case 3: return PNG_FORMAT_RGB;
    case 4: return PNG_FORMAT_RGBA;
    default:
      raise(ErrorCode::InvalidArgument, "png: unsupported channel count " +
                                            std::to_string(channels));
  }
}

Image finish_read(png_image& png, int desired_channels,
                  const std::string& what) {
  int channels = desired_channels;
  if (channels == 0)
    channels = (png.format & PNG_FORMAT_FLAG_ALPHA) ? 4 : 3;
  png.format = format_for_channels(channels);

  Image out(static_cast<int>(png.height), static_cast<int>(png.width),
            channels);
  std::vector<uint8_t> buffer(static_cast<size_t>(png.height) * png.width *
                              channels);
  if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
    std::string msg = png.message;
    png_image_free(&png);
    raise(ErrorCode::DecodeFailure, what + ": " + msg);
  }
  for (size_t i = 0; i < buffer.size(); ++i)
    out.data[i] = static_cast<float>(buffer[i]) / 255.0f;
  return out;
}

std::vector<uint8_t> quantize(const Image& image) {
  std::vector<uint8_t> buffer(image.data.size());
  for (size_t i = 0; i < buffer.size(); ++i) {
    const float v = std::clamp(image.data[i], 0.0f, 1.0f);
    buffer[i] = static_cast<uint8_t>(std::lround(v * 255.0f));
  }
  return buffer;
}

}  // namespace

Image decode_png_file(const std::string& path, int desired_channels) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    std::string msg = png.message;
    png_image_free(&png);
    raise(ErrorCode::DecodeFailure, path + ": " + msg);
  }
  return finish_read(png, desired_channels, path);
}

Image decode_png_bytes(const std::vector<uint8_t>& bytes,
                       int desired_channels) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    std::string msg = png.message;
    png_image_free(&png);
    raise(ErrorCode::DecodeFailure, std::string("png buffer: ") + msg);
  }
  return finish_read(png, desired_channels, "png buffer");
}

void encode_png_file(const Image& image, const std::string& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = format_for_channels(image.channels);
  const std::vector<uint8_t> buffer = quantize(image);
  if (!png_image_write_to_file(&png, path.c_str(), 0, buffer.data(), 0,
                               nullptr)) {
    std::string msg = png.message;
    png_image_free(&png);
    raise(ErrorCode::IoFailure, path + ": " + msg);
  }
}

std::vector<uint8_t> encode_png_bytes(const Image& image) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = format_for_channels(image.channels);
  const std::vector<uint8_t> buffer = quantize(image);

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, buffer.data(), 0,
                                 nullptr))
    raise(ErrorCode::IoFailure, std::string("png encode: ") + png.message);
  std::vector<uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, buffer.data(), 0,
                                 nullptr)) {
    std::string msg = png.message;
    png_image_free(&png);
    raise(ErrorCode::IoFailure, std::string("png encode: ") + msg);
  }
  out.resize(size);
  return out;
}

}  // namespace narcan
