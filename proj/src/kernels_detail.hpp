#pragma once

// Shared per-element helpers. Scalar kernels are built from these, and the
// AVX2 kernels use them for loop tails, so both backends run literally the
// same arithmetic on every element.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstddef>

namespace lpq::kernels::detail {

inline float relu_one(float x) { return x > 0.0f ? x : 0.0f; }

struct FqConsts {
  double scale;
  double inv_scale;
  double lo;
  double hi;
};

inline FqConsts fq_consts(int bw, int fl) {
  FqConsts c;
  c.scale = std::ldexp(1.0, fl);
  c.inv_scale = std::ldexp(1.0, -fl);
  c.hi = std::ldexp(1.0, bw - 1) - 1.0;
  c.lo = -std::ldexp(1.0, bw - 1);
  return c;
}

inline double quantize_one(double x, const FqConsts& c) {
  double r = std::round(x * c.scale);  // round half away from zero
  return std::min(std::max(r, c.lo), c.hi);
}

inline float fake_quant_one(float x, const FqConsts& c) {
  return static_cast<float>(quantize_one(static_cast<double>(x), c) * c.inv_scale);
}

inline int32_t kmeans_index_one(float x, double lo, double range, double k,
                                double kmax) {
  double t = ((static_cast<double>(x) - lo) / range) * k;
  double f = std::floor(t);
  f = std::min(std::max(f, 0.0), kmax);
  return static_cast<int32_t>(f);
}

// Reduction trees fixed to mirror the AVX2 horizontal reductions exactly.
inline double reduce4_pd(const double acc[4]) {
  return (acc[0] + acc[2]) + (acc[1] + acc[3]);
}

inline float reduce8_ps(const float acc[8]) {
  const float s40 = acc[0] + acc[4];
  const float s41 = acc[1] + acc[5];
  const float s42 = acc[2] + acc[6];
  const float s43 = acc[3] + acc[7];
  return (s40 + s42) + (s41 + s43);
}

inline float conv_out_one(const float* padded, int ic, int ph, int pw,
                          const float* w, float bias, int oc, int oy, int ox,
                          int kh, int kw, int stride) {
  float acc = 0.0f;
  for (int c = 0; c < ic; ++c) {
    for (int ky = 0; ky < kh; ++ky) {
      const float* row = padded + (static_cast<size_t>(c) * ph + oy * stride + ky) * pw +
                         static_cast<size_t>(ox) * stride;
      const float* wr = w + ((static_cast<size_t>(oc) * ic + c) * kh + ky) * kw;
      for (int kx = 0; kx < kw; ++kx) acc += wr[kx] * row[kx];
    }
  }
  return acc + bias;
}

}  // namespace lpq::kernels::detail
