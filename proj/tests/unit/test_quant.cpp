// Codec, k-means table and memory model oracles. Expected values are either
// asserted directly, verified by exhaustive enumeration, or checked against
// independent brute-force constructions.

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "lpq/quant.hpp"

using namespace lpq;

TEST_CASE("fit_il covering guarantee") {
  CHECK(fit_il_from_max_abs(6.0) == 3);    // ceil(log2 6) = 3, 2^3 >= 6
  CHECK(fit_il_from_max_abs(1.0) == 0);    // equality case
  CHECK(fit_il_from_max_abs(0.3) == -1);   // 2^-1 = 0.5 >= 0.3
  CHECK(fit_il_from_max_abs(0.0) == 0);    // all-zero convention
  CHECK(fit_il_from_max_abs(8.0) == 3);    // exact power of two
  CHECK(fit_il_from_max_abs(8.0000001) == 4);

  std::mt19937 rng(21);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::ldexp(1.0 + (rng() % 1000000) * 1e-6, (int)(rng() % 40) - 20);
    const int il = fit_il_from_max_abs(v);
    CHECK(std::ldexp(1.0, il) >= v);
    CHECK(std::ldexp(1.0, il - 1) < v);  // tightness
  }

  const float vals[] = {-1.0f, 0.0f, 1.0f};
  CHECK(fit_il(vals, 3) == 0);
}

TEST_CASE("fit_fl with and without the cap") {
  CHECK(fit_fl(16, 3, 20) == 12);  // 16-1-3 below the cap
  CHECK(fit_fl(32, 3, 14) == 14);  // cap binds
  CHECK(fit_fl(8, 7, 20) == 0);    // no fractional bits remain
  CHECK(fit_fl(8, 9, 20) == 0);    // clamped at zero
}

TEST_CASE("quantize_fixed examples") {
  const FixedParams p8{8, 5, 2};
  CHECK(quantize_fixed(0.0f, p8) == 0);
  CHECK(quantize_fixed(1.25f, p8) == 5);
  CHECK(dequantize_fixed(5, p8) == 1.25f);
  CHECK(quantize_fixed(1000.0f, p8) == 127);    // saturates
  CHECK(quantize_fixed(-1000.0f, p8) == -128);  // saturates
  CHECK(dequantize_fixed(0, p8) == 0.0f);
}

TEST_CASE("exhaustive code round-trip, BW <= 12") {
  for (int bw = 2; bw <= 12; ++bw) {
    for (int fl : {0, 3, 7, 12, 20}) {
      const FixedParams p{bw, bw - 1 - fl, fl};
      const int32_t lo = -(int32_t{1} << (bw - 1));
      const int32_t hi = (int32_t{1} << (bw - 1)) - 1;
      for (int32_t code = lo; code <= hi; ++code)
        REQUIRE(quantize_fixed(dequantize_fixed(code, p), p) == code);
    }
  }
}

TEST_CASE("codec error bound and monotonicity") {
  std::mt19937 rng(22);
  for (int bw : {4, 8, 12, 16}) {
    for (int fl : {2, 6, 10}) {
      const FixedParams p{bw, 0, fl};
      const double step = std::ldexp(1.0, -fl);
      const double lo = -std::ldexp(1.0, bw - 1) * step;
      const double hi = (std::ldexp(1.0, bw - 1) - 1.0) * step;
      float prev_v = 0.0f;
      int32_t prev_c = 0;
      for (int i = 0; i < 20000; ++i) {
        const double u = (rng() >> 8) * (1.0 / 16777216.0);
        const float v = static_cast<float>(lo + u * (hi - lo));
        const int32_t c = quantize_fixed(v, p);
        const double err = std::abs(static_cast<double>(dequantize_fixed(c, p)) -
                                    static_cast<double>(v));
        REQUIRE(err <= step / 2);
        REQUIRE(c >= -(int32_t{1} << (bw - 1)));
        REQUIRE(c <= (int32_t{1} << (bw - 1)) - 1);
        if (i > 0 && v >= prev_v) REQUIRE(c >= prev_c);
        if (i > 0 && v < prev_v) REQUIRE(c <= prev_c);
        prev_v = v;
        prev_c = c;
      }
    }
  }
}

TEST_CASE("k-means table construction") {
  SUBCASE("linear [0,4] bw=1") {
    const auto t = build_kmeans_table(0.0, 4.0, 2.0, 1.0, 1, KMeansKind::Linear, 3.0, 16, 12);
    const auto c = t.centers();
    REQUIRE(c.size() == 2);
    CHECK(c[0] == 1.0f);
    CHECK(c[1] == 3.0f);
  }
  SUBCASE("linear [0,4] bw=2") {
    const auto t = build_kmeans_table(0.0, 4.0, 2.0, 1.0, 2, KMeansKind::Linear, 3.0, 16, 12);
    const auto c = t.centers();
    REQUIRE(c.size() == 4);
    CHECK(c[0] == 0.5f);
    CHECK(c[1] == 1.5f);
    CHECK(c[2] == 2.5f);
    CHECK(c[3] == 3.5f);
  }
  SUBCASE("gaussian mean 0, std 1, 3 sigma, bw=1") {
    const auto t = build_kmeans_table(-9.0, 9.0, 0.0, 1.0, 1, KMeansKind::Gaussian, 3.0, 16, 12);
    CHECK(t.lo == -3.0);
    CHECK(t.hi == 3.0);
    const auto c = t.centers();
    REQUIRE(c.size() == 2);
    CHECK(c[0] == -1.5f);
    CHECK(c[1] == 1.5f);
  }
  SUBCASE("degenerate range keeps a single center") {
    const auto t = build_kmeans_table(2.0, 2.0, 2.0, 0.0, 3, KMeansKind::Linear, 3.0, 16, 10);
    CHECK(t.degenerate());
    const auto m = quantize_kmeans(Tensor({3}, {1.0f, 2.0f, 9.0f}), t);
    for (int64_t i = 0; i < 3; ++i) {
      CHECK(m.indices[static_cast<size_t>(i)] == 0);
      CHECK(m.reconstructed[i] == 2.0f);
    }
  }
  SUBCASE("strictly increasing centers") {
    const auto t = build_kmeans_table(-1.5, 2.25, 0.0, 1.0, 4, KMeansKind::Linear, 3.0, 16, 12);
    const auto c = t.centers();
    for (size_t i = 1; i < c.size(); ++i) CHECK(c[i] > c[i - 1]);
  }
}

TEST_CASE("quantize_kmeans mapping") {
  const auto t = build_kmeans_table(0.0, 4.0, 2.0, 1.0, 2, KMeansKind::Linear, 3.0, 16, 12);
  SUBCASE("interval centers are fixed points") {
    const auto centers = t.centers();
    Tensor v({4}, {centers[0], centers[1], centers[2], centers[3]});
    const auto m = quantize_kmeans(v, t);
    for (int j = 0; j < 4; ++j) {
      CHECK(m.indices[static_cast<size_t>(j)] == j);
      CHECK(m.reconstructed[j] == centers[static_cast<size_t>(j)]);
    }
  }
  SUBCASE("floor assignment") {
    const auto m = quantize_kmeans(Tensor({1}, {1.7f}), t);
    CHECK(m.indices[0] == 1);  // floor(1.7/4*4) = 1
    CHECK(m.reconstructed[0] == 1.5f);
  }
  SUBCASE("out-of-range saturates to the end intervals") {
    const auto g = build_kmeans_table(0.0, 0.0, 0.0, 1.0, 3, KMeansKind::Gaussian, 3.0, 16, 12);
    CHECK(g.lo == -3.0);
    CHECK(g.hi == 3.0);
    const auto m = quantize_kmeans(Tensor({2}, {10.0f, -10.0f}), g);
    CHECK(m.indices[0] == g.intervals() - 1);
    CHECK(m.indices[1] == 0);
  }
}

TEST_CASE("k-means reconstruction error bound") {
  std::mt19937 rng(23);
  for (int bw : {1, 2, 4, 6}) {
    const double lo = -2.0, hi = 3.0;
    const int table_fl = 12;
    const auto t = build_kmeans_table(lo, hi, 0.5, 1.0, bw, KMeansKind::Linear, 3.0, 16, table_fl);
    const double step = (hi - lo) / static_cast<double>(t.intervals());
    const double bound = step / 2 + std::ldexp(1.0, -(table_fl + 1));
    std::vector<float> vals(3000);
    for (auto& v : vals)
      v = static_cast<float>(lo + (rng() >> 8) * (1.0 / 16777216.0) * (hi - lo));
    const auto m = quantize_kmeans(Tensor({3000}, vals), t);
    for (size_t i = 0; i < vals.size(); ++i)
      REQUIRE(std::abs(static_cast<double>(m.reconstructed[static_cast<int64_t>(i)]) -
                       static_cast<double>(vals[i])) <= bound + 1e-12);
  }
}

TEST_CASE("linear k-means is lossless on midpoint-valued data") {
  // Data sitting exactly on the interval midpoints of [0, 4] at a dyadic
  // table FL reconstructs bit for bit.
  const int bw = 3;
  const auto t = build_kmeans_table(0.0, 4.0, 2.0, 1.0, bw, KMeansKind::Linear, 3.0, 16, 10);
  const auto centers = t.centers();
  std::vector<float> vals;
  for (int rep = 0; rep < 5; ++rep)
    for (float c : centers) vals.push_back(c);
  const auto m = quantize_kmeans(Tensor({static_cast<int64_t>(vals.size())}, vals), t);
  for (size_t i = 0; i < vals.size(); ++i)
    REQUIRE(m.reconstructed[static_cast<int64_t>(i)] == vals[i]);
}

TEST_CASE("memory saving model") {
  SUBCASE("Eq. 5 examples") {
    CHECK(memory_saving(32, 6, 64, 16, 1).per_value_ratio == doctest::Approx(0.1875));
    CHECK(memory_saving(32, 32, int64_t{1} << 32, 16, 1).per_value_ratio == 1.0);
    CHECK(memory_saving(32, 4, 16, 16, 1000).total_bits == 4000 + 256);
  }
  SUBCASE("consistency: ratio times original width is exactly bw") {
    for (int bw = 1; bw <= 16; ++bw)
      CHECK(memory_saving(32, bw, int64_t{1} << bw, 16, 10).per_value_ratio * 32.0 ==
            static_cast<double>(bw));
  }
  SUBCASE("non-power-of-two interval count is rejected") {
    CHECK_THROWS_AS(memory_saving(32, 2, 3, 16, 10), Error);
    CHECK_THROWS_AS(memory_saving(32, 3, 4, 16, 10), Error);  // k != 2^bw
  }
  SUBCASE("fixed-point traffic") {
    CHECK(fixed_point_traffic(10, 8) == 80);
    CHECK(fixed_point_traffic(0, 8) == 0);
    // matches Eq. 5 total when k = 2^bw and the table is excluded
    for (int bw : {2, 5, 9})
      CHECK(fixed_point_traffic(777, bw) ==
            memory_saving(32, bw, int64_t{1} << bw, 16, 777).total_bits -
                (int64_t{1} << bw) * 16);
  }
}

TEST_CASE("scheme storage and traffic bits") {
  QuantScheme fixed;
  fixed.technique = Technique::DynamicFixed;
  fixed.bw = 8;
  fixed.fixed = {8, 2, 5};
  CHECK(fixed.storage_bits(100) == 800);
  CHECK(fixed.traffic_bits(100) == 800);

  QuantScheme km;
  km.technique = Technique::KMeansLinear;
  km.bw = 6;
  km.table = std::make_shared<KMeansTable>(
      build_kmeans_table(0.0, 1.0, 0.5, 0.2, 6, KMeansKind::Linear, 3.0, 16, 12));
  CHECK(km.storage_bits(1000) == 1000 * 6 + 64 * 16);
  CHECK(km.traffic_bits(1000) == 1000 * 6);  // table is storage, not traffic
}
