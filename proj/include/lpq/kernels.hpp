#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace lpq::kernels {

// Inner-loop kernels behind the inference and quantization passes. Each entry
// has a scalar reference implementation and, on x86-64, an AVX2 variant that
// is bitwise identical to it (same operation order per output, same partial
// sum trees, same rounding path). Equivalence is enforced by tests/.
struct Kernels {
  // y[i] = x[i] > 0 ? x[i] : +0
  void (*relu)(const float* x, float* y, size_t n);

  // Fixed-point quantize->dequantize in one pass:
  // y[i] = clamp(round_half_away(x[i] * 2^fl), -2^(bw-1), 2^(bw-1)-1) * 2^-fl
  // computed in double, narrowed to float once at the end.
  void (*fake_quant_fixed)(const float* x, float* y, size_t n, int bw, int fl);

  // Uniform-interval codebook mapping. For hi > lo:
  //   t = ((x[i] - lo) / (hi - lo)) * k, j = clamp(floor(t), 0, k-1)
  //   y[i] = centers[j], idx[i] = j (idx may be null).
  // Degenerate ranges (hi <= lo) map everything to centers[0].
  void (*kmeans_map)(const float* x, float* y, int32_t* idx, size_t n,
                     double lo, double hi, int64_t k, const float* centers);

  // Sum of squared differences in double (Eq. 1 without the sqrt), using a
  // fixed 4-lane partial-sum layout so scalar and AVX2 agree bitwise.
  double (*sqdiff_sum)(const float* a, const float* b, size_t n);

  // y[j] = dot(w[j*in_n .. ], x) + bias[j], 8-lane partial sums per output.
  void (*fc_forward)(const float* w, const float* bias, const float* x,
                     float* y, size_t in_n, size_t out_n);

  // 2D convolution over an explicitly padded input [ic][ph][pw]. Each output
  // accumulates over (ic, ky, kx) in that order; padding cells are zeros in
  // the buffer so every output runs the identical chain of mul+add.
  void (*conv2d)(const float* padded, int ic, int ph, int pw, const float* w,
                 const float* bias, float* out, int oc, int oh, int ow, int kh,
                 int kw, int stride);
};

enum class Backend { Scalar, Avx2 };

const char* backend_name(Backend b);
bool backend_available(Backend b);

const Kernels& scalar_kernels();
// Null when the AVX2 variant was not built or the CPU lacks support.
const Kernels* avx2_kernels();

// Active table: picked once (AVX2 when available, else scalar; the
// LPQ_KERNELS env var or set_backend() overrides).
const Kernels& active();
Backend active_backend();
void set_backend(Backend b);  // throws Error::usage if unavailable

}  // namespace lpq::kernels
