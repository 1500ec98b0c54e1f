#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "narcan/image.hpp"

namespace narcan {

// 8-bit PNG codec. desired_channels in {1, 3, 4}; 0 keeps the file's own
// channel count (alpha preserved when present, otherwise RGB; gray files
// expand to the requested layout). Values map linearly to [0,1].
Image decode_png_file(const std::string& path, int desired_channels = 3);
Image decode_png_bytes(const std::vector<uint8_t>& bytes,
                       int desired_channels = 3);

// Quantizes to 8 bits per channel (round-to-nearest after clamping).
void encode_png_file(const Image& image, const std::string& path);
std::vector<uint8_t> encode_png_bytes(const Image& image);

}  // namespace narcan
