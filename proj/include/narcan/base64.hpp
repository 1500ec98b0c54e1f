#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace narcan {

std::string base64_encode(const std::vector<uint8_t>& bytes);
std::vector<uint8_t> base64_decode(const std::string& text);

}  // namespace narcan
