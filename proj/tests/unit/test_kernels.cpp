// Scalar vs AVX2 equivalence: the SIMD variants must be bitwise identical to
// the scalar reference kernels on every input, tails and edge values included.

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "lpq/kernels.hpp"

using namespace lpq;

namespace {

const kernels::Kernels& scalar() { return kernels::scalar_kernels(); }

bool have_avx2() { return kernels::backend_available(kernels::Backend::Avx2); }

std::vector<float> random_floats(std::mt19937& rng, size_t n, float lo, float hi) {
  std::vector<float> v(n);
  for (auto& x : v) {
    const float u = static_cast<float>(rng() >> 8) * (1.0f / 16777216.0f);
    x = lo + u * (hi - lo);
  }
  return v;
}

// Values that stress the rounding and clamping paths.
std::vector<float> adversarial_floats() {
  std::vector<float> v = {
      0.0f, -0.0f, 0.5f, -0.5f, 1.5f, -1.5f, 2.5f, -2.5f,
      0.49999997f, -0.49999997f, 0.50000006f, -0.50000006f,
      1e-30f, -1e-30f, 1e30f, -1e30f, 3.4e38f, -3.4e38f,
      127.5f, -127.5f, 128.0f, -128.0f, 1.0f, -1.0f,
  };
  for (int k = 0; k < 64; ++k) {
    v.push_back(static_cast<float>(k) + 0.5f);
    v.push_back(-(static_cast<float>(k) + 0.5f));
    v.push_back(std::nextafterf(static_cast<float>(k) + 0.5f, 0.0f));
    v.push_back(std::nextafterf(static_cast<float>(k) + 0.5f, 1e9f));
  }
  return v;
}

bool bitwise_equal(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

}  // namespace

TEST_CASE("backend dispatch") {
  CHECK(kernels::backend_available(kernels::Backend::Scalar));
  const auto original = kernels::active_backend();
  kernels::set_backend(kernels::Backend::Scalar);
  CHECK(kernels::active_backend() == kernels::Backend::Scalar);
  if (have_avx2()) {
    kernels::set_backend(kernels::Backend::Avx2);
    CHECK(kernels::active_backend() == kernels::Backend::Avx2);
    CHECK(kernels::avx2_kernels() != nullptr);
  }
  kernels::set_backend(original);
}

TEST_CASE("relu equivalence") {
  if (!have_avx2()) { MESSAGE("AVX2 unavailable; skipping"); return; }
  std::mt19937 rng(11);
  for (size_t n : {0ul, 1ul, 7ul, 8ul, 9ul, 255ul, 1024ul}) {
    auto x = random_floats(rng, n, -4.0f, 4.0f);
    if (n > 2) { x[0] = -0.0f; x[1] = 0.0f; }
    std::vector<float> ys(n), yv(n);
    scalar().relu(x.data(), ys.data(), n);
    kernels::avx2_kernels()->relu(x.data(), yv.data(), n);
    CHECK(bitwise_equal(ys, yv));
    for (size_t i = 0; i < n; ++i) CHECK(ys[i] == (x[i] > 0.0f ? x[i] : 0.0f));
  }
}

TEST_CASE("fake_quant_fixed equivalence") {
  if (!have_avx2()) { MESSAGE("AVX2 unavailable; skipping"); return; }
  std::mt19937 rng(12);
  const auto adv = adversarial_floats();
  for (int bw : {2, 4, 8, 12, 16, 24, 32}) {
    for (int fl : {0, 1, 2, 5, 8, 12, 20}) {
      auto x = random_floats(rng, 1001, -300.0f, 300.0f);
      x.insert(x.end(), adv.begin(), adv.end());
      std::vector<float> ys(x.size()), yv(x.size());
      scalar().fake_quant_fixed(x.data(), ys.data(), x.size(), bw, fl);
      kernels::avx2_kernels()->fake_quant_fixed(x.data(), yv.data(), x.size(), bw, fl);
      CHECK(bitwise_equal(ys, yv));
    }
  }
}

TEST_CASE("fake_quant rounding matches std::round semantics") {
  // scaled by 2^0 the kernel is round-half-away-from-zero plus clamping
  const auto& k = kernels::active();
  std::vector<float> x = {0.5f, 1.5f, 2.5f, -0.5f, -1.5f, -2.5f, 0.49999997f,
                          -0.49999997f};
  std::vector<float> y(x.size());
  k.fake_quant_fixed(x.data(), y.data(), x.size(), 16, 0);
  const std::vector<float> want = {1.0f, 2.0f, 3.0f, -1.0f, -2.0f, -3.0f, 0.0f, -0.0f};
  for (size_t i = 0; i < x.size(); ++i) CHECK(y[i] == want[i]);
}

TEST_CASE("kmeans_map equivalence") {
  if (!have_avx2()) { MESSAGE("AVX2 unavailable; skipping"); return; }
  std::mt19937 rng(13);
  for (int bw : {1, 2, 4, 8}) {
    const int64_t k = int64_t{1} << bw;
    const double lo = -2.5, hi = 3.25;
    std::vector<float> centers(static_cast<size_t>(k));
    for (int64_t i = 0; i < k; ++i)
      centers[static_cast<size_t>(i)] =
          static_cast<float>(lo + (static_cast<double>(i) + 0.5) * (hi - lo) / static_cast<double>(k));
    for (size_t n : {1ul, 5ul, 64ul, 333ul}) {
      auto x = random_floats(rng, n, -6.0f, 6.0f);
      // exact interval edges stress the floor/boundary path
      for (size_t i = 0; i + 1 < n && i < static_cast<size_t>(k); ++i)
        x[i] = static_cast<float>(lo + static_cast<double>(i) * (hi - lo) / static_cast<double>(k));
      std::vector<float> ys(n), yv(n);
      std::vector<int32_t> is(n), iv(n);
      scalar().kmeans_map(x.data(), ys.data(), is.data(), n, lo, hi, k, centers.data());
      kernels::avx2_kernels()->kmeans_map(x.data(), yv.data(), iv.data(), n, lo, hi, k,
                                          centers.data());
      CHECK(bitwise_equal(ys, yv));
      CHECK(std::memcmp(is.data(), iv.data(), n * sizeof(int32_t)) == 0);
      for (size_t i = 0; i < n; ++i) {
        CHECK(is[i] >= 0);
        CHECK(is[i] < k);
      }
    }
  }
}

TEST_CASE("kmeans_map degenerate range") {
  const float center = 1.25f;
  std::vector<float> x = {-5.0f, 0.0f, 7.0f};
  std::vector<float> y(x.size());
  std::vector<int32_t> idx(x.size());
  kernels::active().kmeans_map(x.data(), y.data(), idx.data(), x.size(), 2.0, 2.0, 4,
                               &center);
  for (size_t i = 0; i < x.size(); ++i) {
    CHECK(y[i] == center);
    CHECK(idx[i] == 0);
  }
}

TEST_CASE("sqdiff_sum equivalence and oracle") {
  std::mt19937 rng(14);
  for (size_t n : {0ul, 1ul, 3ul, 4ul, 5ul, 127ul, 4096ul}) {
    const auto a = random_floats(rng, n, -2.0f, 2.0f);
    const auto b = random_floats(rng, n, -2.0f, 2.0f);
    const double s = scalar().sqdiff_sum(a.data(), b.data(), n);
    if (have_avx2()) {
      const double v = kernels::avx2_kernels()->sqdiff_sum(a.data(), b.data(), n);
      CHECK(std::memcmp(&s, &v, sizeof(double)) == 0);
    }
    // independent naive-order oracle at tolerance
    double naive = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
      naive += d * d;
    }
    CHECK(s == doctest::Approx(naive).epsilon(1e-12));
  }
}

TEST_CASE("fc_forward equivalence") {
  if (!have_avx2()) { MESSAGE("AVX2 unavailable; skipping"); return; }
  std::mt19937 rng(15);
  for (size_t in_n : {1ul, 7ul, 8ul, 9ul, 64ul, 100ul, 1024ul}) {
    for (size_t out_n : {1ul, 3ul, 10ul}) {
      const auto w = random_floats(rng, in_n * out_n, -1.0f, 1.0f);
      const auto b = random_floats(rng, out_n, -1.0f, 1.0f);
      const auto x = random_floats(rng, in_n, -1.0f, 1.0f);
      std::vector<float> ys(out_n), yv(out_n);
      scalar().fc_forward(w.data(), b.data(), x.data(), ys.data(), in_n, out_n);
      kernels::avx2_kernels()->fc_forward(w.data(), b.data(), x.data(), yv.data(),
                                          in_n, out_n);
      CHECK(bitwise_equal(ys, yv));
    }
  }
}

TEST_CASE("conv2d equivalence") {
  if (!have_avx2()) { MESSAGE("AVX2 unavailable; skipping"); return; }
  std::mt19937 rng(16);
  struct Case { int ic, oc, h, w, k, stride, pad; };
  for (const Case& c : {Case{1, 1, 4, 4, 1, 1, 0}, Case{3, 8, 16, 16, 3, 1, 1},
                        Case{8, 16, 8, 8, 3, 1, 1}, Case{2, 4, 9, 11, 3, 2, 1},
                        Case{4, 4, 7, 7, 5, 1, 2}}) {
    const int ph = c.h + 2 * c.pad, pw = c.w + 2 * c.pad;
    const int oh = (ph - c.k) / c.stride + 1, ow = (pw - c.k) / c.stride + 1;
    std::vector<float> padded(static_cast<size_t>(c.ic) * ph * pw, 0.0f);
    // interior filled, border left zero like the real pass
    for (int cc = 0; cc < c.ic; ++cc)
      for (int y = 0; y < c.h; ++y) {
        auto row = random_floats(rng, static_cast<size_t>(c.w), -1.5f, 1.5f);
        std::copy(row.begin(), row.end(),
                  padded.begin() + (static_cast<size_t>(cc) * ph + y + c.pad) * pw + c.pad);
      }
    const auto w = random_floats(rng, static_cast<size_t>(c.oc) * c.ic * c.k * c.k,
                                 -0.5f, 0.5f);
    const auto bias = random_floats(rng, static_cast<size_t>(c.oc), -0.2f, 0.2f);
    std::vector<float> ys(static_cast<size_t>(c.oc) * oh * ow);
    std::vector<float> yv(ys.size());
    scalar().conv2d(padded.data(), c.ic, ph, pw, w.data(), bias.data(), ys.data(),
                    c.oc, oh, ow, c.k, c.k, c.stride);
    kernels::avx2_kernels()->conv2d(padded.data(), c.ic, ph, pw, w.data(), bias.data(),
                                    yv.data(), c.oc, oh, ow, c.k, c.k, c.stride);
    CHECK(bitwise_equal(ys, yv));
  }
}
