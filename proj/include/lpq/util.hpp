#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace lpq {

// Deterministic value generation for fixtures and calibration subsampling.
// Uses raw mt19937 draws with explicit integer->float mapping so the output
// is identical across standard libraries and platforms.
class DetRng {
public:
  explicit DetRng(uint64_t seed) : eng_(static_cast<uint32_t>(seed)) {}

  uint32_t next_u32() { return eng_(); }

  // [0, 1), 24-bit resolution, exactly representable.
  float next_unit() {
    return static_cast<float>(eng_() >> 8) * (1.0f / 16777216.0f);
  }

  float uniform(float lo, float hi) { return lo + next_unit() * (hi - lo); }

  // Irwin-Hall sum of 12 uniforms, approximately N(0,1); no libm involved.
  float normalish() {
    float s = 0.0f;
    for (int i = 0; i < 12; ++i) s += next_unit();
    return s - 6.0f;
  }

  // Fisher-Yates over [0, n).
  std::vector<size_t> permutation(size_t n);

private:
  std::mt19937 eng_;
};

// Runs fn(i) for i in [0, n). Results must be written to per-index slots;
// assembly order is then independent of thread scheduling.
void parallel_for(size_t n, int jobs, const std::function<void(size_t)>& fn);

}  // namespace lpq
