#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace narcan {

// Seeded generator with pinned distribution code. std::uniform_* are
// implementation-defined, so sampling is done by hand to keep results
// identical across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Multiply-shift mapping; n is tiny relative
  // to 2^64 so the bias is negligible for sampling.
  uint64_t uniform_int(uint64_t n) {
    const unsigned __int128 m =
        static_cast<unsigned __int128>(engine_()) * n;
    return static_cast<uint64_t>(m >> 64);
  }

  // Standard normal via Box-Muller; consumes two draws per call.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace narcan
