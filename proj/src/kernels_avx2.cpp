// AVX2 kernel variants. Every loop is arranged so the per-element operation
// chain is identical to the scalar reference: per-output accumulation for
// conv/FC (lanes are independent outputs or a fixed lane-striped partial-sum
// layout mirrored by the scalar code), double-precision arithmetic with a
// round-half-away-from-zero fixup matching std::round, and shared scalar
// helpers for loop tails. Built only on x86-64; avx2_kernels() reports null
// elsewhere.

#include "lpq/kernels.hpp"

#include "kernels_detail.hpp"

#if defined(__AVX2__)

#include <immintrin.h>

namespace lpq::kernels {
namespace {

using namespace detail;

void relu_avx2(const float* x, float* y, size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_max_ps(_mm256_loadu_ps(x + i), zero));
  for (; i < n; ++i) y[i] = relu_one(x[i]);
}

// std::round for 4 double lanes: round-to-nearest-even, then push exact .5
// ties that landed toward zero one step away from it. Blended (not added) so
// untouched lanes keep the rounded value bit for bit, -0.0 included.
inline __m256d round_half_away_pd(__m256d t) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  const __m256d rne = _mm256_round_pd(t, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  const __m256d diff = _mm256_sub_pd(t, rne);  // exact
  const __m256d sign = _mm256_and_pd(t, sign_mask);
  const __m256d half = _mm256_or_pd(_mm256_set1_pd(0.5), sign);
  const __m256d one = _mm256_or_pd(_mm256_set1_pd(1.0), sign);
  const __m256d tie_toward_zero = _mm256_cmp_pd(diff, half, _CMP_EQ_OQ);
  return _mm256_blendv_pd(rne, _mm256_add_pd(rne, one), tie_toward_zero);
}

void fake_quant_fixed_avx2(const float* x, float* y, size_t n, int bw, int fl) {
  const FqConsts c = fq_consts(bw, fl);
  const __m256d vscale = _mm256_set1_pd(c.scale);
  const __m256d vinv = _mm256_set1_pd(c.inv_scale);
  const __m256d vlo = _mm256_set1_pd(c.lo);
  const __m256d vhi = _mm256_set1_pd(c.hi);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xd = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
    __m256d r = round_half_away_pd(_mm256_mul_pd(xd, vscale));
    r = _mm256_min_pd(_mm256_max_pd(r, vlo), vhi);
    _mm_storeu_ps(y + i, _mm256_cvtpd_ps(_mm256_mul_pd(r, vinv)));
  }
  for (; i < n; ++i) y[i] = fake_quant_one(x[i], c);
}

void kmeans_map_avx2(const float* x, float* y, int32_t* idx, size_t n,
                     double lo, double hi, int64_t k, const float* centers) {
  if (!(hi > lo)) {
    for (size_t i = 0; i < n; ++i) {
      y[i] = centers[0];
      if (idx) idx[i] = 0;
    }
    return;
  }
  const double range = hi - lo;
  const double kd = static_cast<double>(k);
  const double kmax = kd - 1.0;
  const __m256d vlo = _mm256_set1_pd(lo);
  const __m256d vrange = _mm256_set1_pd(range);
  const __m256d vk = _mm256_set1_pd(kd);
  const __m256d vkmax = _mm256_set1_pd(kmax);
  const __m256d vzero = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xd = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
    const __m256d t = _mm256_mul_pd(_mm256_div_pd(_mm256_sub_pd(xd, vlo), vrange), vk);
    __m256d f = _mm256_floor_pd(t);
    f = _mm256_min_pd(_mm256_max_pd(f, vzero), vkmax);
    const __m128i j = _mm256_cvttpd_epi32(f);  // exact: f is integral, in range
    _mm_storeu_ps(y + i, _mm_i32gather_ps(centers, j, 4));
    if (idx) _mm_storeu_si128(reinterpret_cast<__m128i*>(idx + i), j);
  }
  for (; i < n; ++i) {
    const int32_t j = kmeans_index_one(x[i], lo, range, kd, kmax);
    y[i] = centers[j];
    if (idx) idx[i] = j;
  }
}

double sqdiff_sum_avx2(const float* a, const float* b, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  const size_t n4 = n & ~size_t{3};
  for (size_t i = 0; i < n4; i += 4) {
    const __m256d da = _mm256_cvtps_pd(_mm_loadu_ps(a + i));
    const __m256d db = _mm256_cvtps_pd(_mm_loadu_ps(b + i));
    const __m256d d = _mm256_sub_pd(da, db);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  // (acc0+acc2) + (acc1+acc3), matching detail::reduce4_pd
  const __m128d s = _mm_add_pd(_mm256_castpd256_pd128(acc),
                               _mm256_extractf128_pd(acc, 1));
  const double r = _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
  double tail = 0.0;
  for (size_t i = n4; i < n; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    tail += d * d;
  }
  return r + tail;
}

// lane-sum order matches detail::reduce8_ps
inline float hreduce8(__m256 v) {
  const __m128 s4 = _mm_add_ps(_mm256_castps256_ps128(v), _mm256_extractf128_ps(v, 1));
  const __m128 s2 = _mm_add_ps(s4, _mm_movehl_ps(s4, s4));
  const __m128 s1 = _mm_add_ss(s2, _mm_shuffle_ps(s2, s2, 0x1));
  return _mm_cvtss_f32(s1);
}

void fc_forward_avx2(const float* w, const float* bias, const float* x,
                     float* y, size_t in_n, size_t out_n) {
  const size_t n8 = in_n & ~size_t{7};
  for (size_t j = 0; j < out_n; ++j) {
    const float* wr = w + j * in_n;
    __m256 vacc = _mm256_setzero_ps();
    for (size_t i = 0; i < n8; i += 8)
      vacc = _mm256_add_ps(vacc, _mm256_mul_ps(_mm256_loadu_ps(wr + i),
                                               _mm256_loadu_ps(x + i)));
    float tail = 0.0f;
    for (size_t i = n8; i < in_n; ++i) tail += wr[i] * x[i];
    y[j] = (hreduce8(vacc) + tail) + bias[j];
  }
}

void conv2d_avx2(const float* padded, int ic, int ph, int pw, const float* w,
                 const float* bias, float* out, int oc, int oh, int ow, int kh,
                 int kw, int stride) {
  if (stride != 1) {  // strided lanes would need gathers; scalar chain instead
    for (int c = 0; c < oc; ++c) {
      float* plane = out + static_cast<size_t>(c) * oh * ow;
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox)
          plane[static_cast<size_t>(oy) * ow + ox] =
              conv_out_one(padded, ic, ph, pw, w, bias[c], c, oy, ox, kh, kw, stride);
    }
    return;
  }
  for (int c = 0; c < oc; ++c) {
    const __m256 vbias = _mm256_set1_ps(bias[c]);
    float* plane = out + static_cast<size_t>(c) * oh * ow;
    for (int oy = 0; oy < oh; ++oy) {
      float* orow = plane + static_cast<size_t>(oy) * ow;
      int ox = 0;
      for (; ox + 8 <= ow; ox += 8) {
        __m256 vacc = _mm256_setzero_ps();
        for (int cc = 0; cc < ic; ++cc) {
          for (int ky = 0; ky < kh; ++ky) {
            const float* irow =
                padded + (static_cast<size_t>(cc) * ph + oy + ky) * pw + ox;
            const float* wr = w + ((static_cast<size_t>(c) * ic + cc) * kh + ky) * kw;
            for (int kx = 0; kx < kw; ++kx)
              vacc = _mm256_add_ps(vacc, _mm256_mul_ps(_mm256_set1_ps(wr[kx]),
                                                       _mm256_loadu_ps(irow + kx)));
          }
        }
        _mm256_storeu_ps(orow + ox, _mm256_add_ps(vacc, vbias));
      }
      for (; ox < ow; ++ox)
        orow[ox] = conv_out_one(padded, ic, ph, pw, w, bias[c], c, oy, ox, kh, kw, 1);
    }
  }
}

}  // namespace

const Kernels* avx2_kernels() {
  static const Kernels table = {
      relu_avx2,    fake_quant_fixed_avx2, kmeans_map_avx2,
      sqdiff_sum_avx2, fc_forward_avx2,    conv2d_avx2,
  };
  return &table;
}

}  // namespace lpq::kernels

#else  // !__AVX2__

namespace lpq::kernels {
const Kernels* avx2_kernels() { return nullptr; }
}  // namespace lpq::kernels

#endif
