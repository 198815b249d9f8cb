#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "unclean/common.hpp"
#include "unclean/dct.hpp"

using namespace unclean;

namespace {

ImageTensor random_image(int h, int w, int c, Rng& rng) {
  ImageTensor img(h, w, c);
  for (double& v : img.data) v = rng.uniform();
  return img;
}

}  // namespace

TEST_CASE("dct2 matches the definitional oracle on 8x8 inputs") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    ImageTensor img = random_image(8, 8, 1, rng);
    CHECK(dct2(img).max_abs_diff(oracle::dct2(img)) <= 1e-6);
  }
}

TEST_CASE("idct2 matches the definitional inverse oracle") {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    ImageTensor coef = random_image(8, 8, 1, rng);
    CHECK(idct2(coef).max_abs_diff(oracle::idct2(coef)) <= 1e-6);
  }
}

TEST_CASE("round-trip error stays below 1e-5 over 100 random images") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int h = 4 + rng.uniform_int(29);
    const int w = 4 + rng.uniform_int(29);
    const int c = 1 + rng.uniform_int(3);
    ImageTensor img = random_image(h, w, c, rng);
    CHECK(idct2(dct2(img)).max_abs_diff(img) <= 1e-5);
    CHECK(dct2(idct2(img)).max_abs_diff(img) <= 1e-5);
  }
}

TEST_CASE("hand-computed 2x2 transform") {
  // For H=W=2 the orthonormal DCT-II reduces to the scaled Hadamard:
  // [[(a+b+c+d), (a-b)+(c-d)], [(a+b)-(c+d), (a-b)-(c-d)]] / 2.
  ImageTensor img(2, 2, 1);
  img.at(0, 0, 0) = 1.0;
  img.at(0, 0, 1) = 2.0;
  img.at(0, 1, 0) = 3.0;
  img.at(0, 1, 1) = 4.0;
  ImageTensor c = dct2(img);
  CHECK(c.at(0, 0, 0) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(c.at(0, 0, 1) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(c.at(0, 1, 0) == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(c.at(0, 1, 1) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("constant image concentrates all energy in the DC coefficient") {
  ImageTensor img(4, 4, 1, 0.5);
  ImageTensor c = dct2(img);
  CHECK(c.at(0, 0, 0) == doctest::Approx(0.5 * 4.0).epsilon(1e-12));
  for (int u = 0; u < 4; ++u)
    for (int v = 0; v < 4; ++v)
      if (u || v) CHECK(std::fabs(c.at(0, u, v)) <= 1e-12);
}

TEST_CASE("transform is orthonormal: energy is preserved") {
  Rng rng(13);
  ImageTensor img = random_image(16, 16, 1, rng);
  ImageTensor c = dct2(img);
  double e_in = 0.0, e_out = 0.0;
  for (double v : img.data) e_in += v * v;
  for (double v : c.data) e_out += v * v;
  CHECK(e_out == doctest::Approx(e_in).epsilon(1e-10));
}

TEST_CASE("transform is linear") {
  Rng rng(17);
  ImageTensor a = random_image(8, 8, 1, rng);
  ImageTensor b = random_image(8, 8, 1, rng);
  ImageTensor sum(8, 8, 1);
  for (size_t i = 0; i < sum.data.size(); ++i) sum.data[i] = 2.0 * a.data[i] - 3.0 * b.data[i];
  ImageTensor ca = dct2(a), cb = dct2(b), cs = dct2(sum);
  for (size_t i = 0; i < cs.data.size(); ++i)
    CHECK(cs.data[i] == doctest::Approx(2.0 * ca.data[i] - 3.0 * cb.data[i]).epsilon(1e-9));
}

TEST_CASE("channels transform independently") {
  Rng rng(19);
  ImageTensor img = random_image(8, 8, 3, rng);
  ImageTensor whole = dct2(img);
  for (int ch = 0; ch < 3; ++ch) {
    ImageTensor single(8, 8, 1);
    for (int i = 0; i < 64; ++i) single.data[i] = img.plane(ch)[i];
    ImageTensor c = dct2(single);
    for (int i = 0; i < 64; ++i) CHECK(c.data[i] == doctest::Approx(whole.plane(ch)[i]).epsilon(1e-12));
  }
}

TEST_CASE("non-finite input is rejected") {
  ImageTensor img(4, 4, 1);
  img.data[5] = std::nan("");
  CHECK_THROWS(dct2(img));
}

TEST_CASE("frequency mask matches the enumerated band definition") {
  for (const auto& [h, w] : {std::pair{4, 4}, std::pair{8, 8}}) {
    for (const auto& [lo, hi] : {std::pair{1.0, 3.0}, std::pair{0.0, 2.5}, std::pair{2.0, 100.0}}) {
      FrequencyMask mask = build_frequency_mask(h, w, lo, hi);
      int expected = 0;
      for (int u = 0; u < h; ++u)
        for (int v = 0; v < w; ++v) {
          CHECK(mask.at(u, v) == oracle::in_band(u, v, lo, hi));
          expected += oracle::in_band(u, v, lo, hi);
        }
      CHECK(mask.count() == expected);
    }
  }
}

TEST_CASE("mask boundary radii are inclusive") {
  // (3,4) sits exactly at radius 5.
  FrequencyMask lo_edge = build_frequency_mask(8, 8, 5.0, 6.0);
  CHECK(lo_edge.at(3, 4));
  FrequencyMask hi_edge = build_frequency_mask(8, 8, 4.0, 5.0);
  CHECK(hi_edge.at(3, 4));
  FrequencyMask outside = build_frequency_mask(8, 8, 5.001, 6.0);
  CHECK_FALSE(outside.at(3, 4));
}

TEST_CASE("mask rejects degenerate parameters") {
  CHECK_THROWS(build_frequency_mask(0, 4, 1.0, 2.0));
  CHECK_THROWS(build_frequency_mask(4, 4, -1.0, 2.0));
  CHECK_THROWS(build_frequency_mask(4, 4, 2.0, 2.0));
  CHECK_THROWS(build_frequency_mask(4, 4, 3.0, 2.0));
}

TEST_CASE("default band for common sizes") {
  CHECK(default_f_min(16, 16) == 2.0);
  CHECK(default_f_max(16, 16) == 8.0);
  CHECK(default_f_min(28, 28) == 4.0);
  CHECK(default_f_max(28, 28) == 14.0);
}
