#include "lpq/kernels.hpp"

#include "kernels_detail.hpp"

namespace lpq::kernels {
namespace {

using namespace detail;

void relu_scalar(const float* x, float* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] = relu_one(x[i]);
}

void fake_quant_fixed_scalar(const float* x, float* y, size_t n, int bw, int fl) {
  const FqConsts c = fq_consts(bw, fl);
  for (size_t i = 0; i < n; ++i) y[i] = fake_quant_one(x[i], c);
}

void kmeans_map_scalar(const float* x, float* y, int32_t* idx, size_t n,
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
  for (size_t i = 0; i < n; ++i) {
    const int32_t j = kmeans_index_one(x[i], lo, range, kd, kmax);
    y[i] = centers[j];
    if (idx) idx[i] = j;
  }
}

double sqdiff_sum_scalar(const float* a, const float* b, size_t n) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  const size_t n4 = n & ~size_t{3};
  for (size_t i = 0; i < n4; i += 4) {
    for (size_t l = 0; l < 4; ++l) {
      const double d = static_cast<double>(a[i + l]) - static_cast<double>(b[i + l]);
      acc[l] += d * d;
    }
  }
  double tail = 0.0;
  for (size_t i = n4; i < n; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    tail += d * d;
  }
  return reduce4_pd(acc) + tail;
}

void fc_forward_scalar(const float* w, const float* bias, const float* x,
                       float* y, size_t in_n, size_t out_n) {
  const size_t n8 = in_n & ~size_t{7};
  for (size_t j = 0; j < out_n; ++j) {
    const float* wr = w + j * in_n;
    float acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    for (size_t i = 0; i < n8; i += 8)
      for (size_t l = 0; l < 8; ++l) acc[l] += wr[i + l] * x[i + l];
    float tail = 0.0f;
    for (size_t i = n8; i < in_n; ++i) tail += wr[i] * x[i];
    y[j] = (reduce8_ps(acc) + tail) + bias[j];
  }
}

void conv2d_scalar(const float* padded, int ic, int ph, int pw, const float* w,
                   const float* bias, float* out, int oc, int oh, int ow,
                   int kh, int kw, int stride) {
  for (int c = 0; c < oc; ++c) {
    float* plane = out + static_cast<size_t>(c) * oh * ow;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox)
        plane[static_cast<size_t>(oy) * ow + ox] =
            conv_out_one(padded, ic, ph, pw, w, bias[c], c, oy, ox, kh, kw, stride);
    }
  }
}

}  // namespace

const Kernels& scalar_kernels() {
  static const Kernels table = {
      relu_scalar,    fake_quant_fixed_scalar, kmeans_map_scalar,
      sqdiff_sum_scalar, fc_forward_scalar,    conv2d_scalar,
  };
  return table;
}

}  // namespace lpq::kernels
