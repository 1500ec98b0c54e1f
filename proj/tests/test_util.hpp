#pragma once

#include <filesystem>
#include <string>

#include "narcan/image.hpp"
#include "narcan/rng.hpp"

namespace narcan::test {

// Unique scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = (std::filesystem::temp_directory_path() /
             ("narcan_test_" + tag + "_" + std::to_string(counter_++)))
                .string();
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::string& path() const { return path_; }
  std::string file(const std::string& name) const {
    return (std::filesystem::path(path_) / name).string();
  }

 private:
  static inline int counter_ = 0;
  std::string path_;
};

inline Image random_image(int h, int w, int c, uint64_t seed) {
  Rng rng(seed);
  Image img(h, w, c);
  for (float& v : img.data) v = static_cast<float>(rng.uniform());
  return img;
}

// Smooth low-frequency test image (easy for bilinear comparisons).
inline Image smooth_image(int h, int w, int c, double phase = 0.0) {
  Image img(h, w, c);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch)
        img.at(y, x, ch) = static_cast<float>(
            0.5 + 0.35 * std::sin(6.283 * (1.1 * x / w + 0.7 * y / h) +
                                  phase + 1.3 * ch));
  return img;
}

inline double max_abs_diff(const Image& a, const Image& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a.data[i]) - b.data[i]));
  return m;
}

}  // namespace narcan::test
