#include <doctest.h>

#include <random>

#include "mods/imgproc.hpp"
#include "oracles.hpp"

using namespace mods;

TEST_CASE("gaussian_blur degenerate sigmas are the identity") {
  Image img = oracles::textured_image(40, 30, 1);
  Image out = gaussian_blur(img, 0.0, 0.0);
  REQUIRE(out.width() == img.width());
  REQUIRE(out.height() == img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) CHECK(out.at(y, x) == img.at(y, x));
}

TEST_CASE("gaussian_blur keeps constants constant") {
  Image img(33, 21, 0.37f);
  for (double s : {0.5, 2.0, 5.0}) {
    Image out = gaussian_blur(img, s, s * 0.5);
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) CHECK(out.at(y, x) == doctest::Approx(0.37f).epsilon(1e-6));
  }
}

TEST_CASE("gaussian_blur impulse matches the dense reference") {
  Image img(41, 41, 0.0f);
  img.at(20, 20) = 1.0f;
  Image fast = gaussian_blur(img, 2.0, 2.0);
  Image ref = oracles::reference_blur(img, 2.0, 2.0);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) CHECK(std::abs(fast.at(y, x) - ref.at(y, x)) <= 1e-6);
}

TEST_CASE("gaussian_blur anisotropic matches the dense reference on texture") {
  Image img = oracles::textured_image(48, 36, 9);
  Image fast = gaussian_blur(img, 3.0, 1.0);
  Image ref = oracles::reference_blur(img, 3.0, 1.0);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) CHECK(std::abs(fast.at(y, x) - ref.at(y, x)) <= 1e-5);
}

TEST_CASE("gaussian_blur preserves mean intensity") {
  Image img = oracles::textured_image(256, 192, 2);
  double mean0 = img.v.cast<double>().mean();
  for (double s : {2.0, 2.5}) {
    Image out = gaussian_blur(img, s, s);
    double mean1 = out.v.cast<double>().mean();
    CHECK(std::abs(mean1 - mean0) <= 1e-4);
  }
}

TEST_CASE("oriented blur falls back to the separable path on axis-aligned angles") {
  Image img = oracles::textured_image(40, 40, 3);
  Image a = oriented_gaussian_blur(img, 2.0, 1.0, 0.0);
  Image b = gaussian_blur(img, 2.0, 1.0);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) CHECK(a.at(y, x) == b.at(y, x));
}

TEST_CASE("oriented blur at 90 degrees swaps the axes") {
  Image img = oracles::textured_image(40, 40, 4);
  Image a = oriented_gaussian_blur(img, 2.0, 0.8, kPi / 2.0);
  Image b = gaussian_blur(img, 0.8, 2.0);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) CHECK(a.at(y, x) == doctest::Approx(b.at(y, x)).epsilon(1e-6));
}

TEST_CASE("warp_affine identity is bit-identical") {
  Image img = oracles::textured_image(31, 22, 5);
  WarpResult res = warp_affine(img, ImageTransform::identity());
  REQUIRE(res.image.width() == img.width());
  REQUIRE(res.image.height() == img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      CHECK(res.image.at(y, x) == img.at(y, x));
      CHECK(res.mask.at(y, x) == 1.0f);
    }
}

TEST_CASE("warp_affine pure tilt halves the canvas width") {
  Image img = oracles::textured_image(100, 100, 6);
  ImageTransform t;
  t.a << 0.5, 0.0, 0.0, 1.0;
  WarpResult res = warp_affine(img, t);
  CHECK(res.image.width() == 50);
  CHECK(res.image.height() == 100);
}

TEST_CASE("warp_affine returns the exact inverse map") {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Image img = oracles::textured_image(64, 48, 7);
  for (int trial = 0; trial < 20; ++trial) {
    ImageTransform t;
    t.a << 1.0 + 0.5 * uni(rng), 0.4 * uni(rng), 0.4 * uni(rng), 1.0 + 0.5 * uni(rng);
    if (std::abs(t.a.determinant()) < 0.2) continue;
    t.b << 5.0 * uni(rng), 5.0 * uni(rng);
    WarpResult res = warp_affine(img, t);
    // The effective forward map is t shifted by the canvas offset; recover
    // the offset from the inverse at the canvas origin.
    Vec2 offset = t.apply(res.inverse.apply(Vec2(0.0, 0.0)));
    for (int i = 0; i < 50; ++i) {
      Vec2 out_pt(uni(rng) * res.image.width() * 0.5 + res.image.width() * 0.5,
                  uni(rng) * res.image.height() * 0.5 + res.image.height() * 0.5);
      Vec2 src = res.inverse.apply(out_pt);
      CHECK((t.apply(src) - offset - out_pt).norm() <= 1e-9);
    }
  }
}

TEST_CASE("warp_affine rotation by 90 degrees equals index permutation") {
  Image img = oracles::textured_image(40, 40, 10);
  ImageTransform t;
  t.a << 0.0, -1.0, 1.0, 0.0;
  WarpResult res = warp_affine(img, t);
  REQUIRE(res.image.width() == 40);
  REQUIRE(res.image.height() == 40);
  // (x, y) -> (-y, x); canvas shifts x by h-1
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 40; ++x) CHECK(std::abs(res.image.at(x, 39 - y) - img.at(y, x)) <= 1e-6);
}

TEST_CASE("warp_affine rejects sub-pixel canvases") {
  Image img = oracles::textured_image(16, 16, 11);
  ImageTransform t;
  t.a << 0.01, 0.0, 0.0, 0.01;
  CHECK_THROWS_AS(warp_affine(img, t), Error);
}

TEST_CASE("downsample dimensions and domain") {
  Image img = oracles::textured_image(256, 256, 12);
  Image quarter = downsample(img, 0.25);
  CHECK(quarter.width() == 64);
  CHECK(quarter.height() == 64);

  Image same = downsample(img, 1.0);
  CHECK(same.width() == 256);
  CHECK(same.height() == 256);
  // blur-only path: equals the plain Gaussian at sigma_base
  Image blurred = gaussian_blur(img, kSigmaBase, kSigmaBase);
  for (int y = 0; y < 256; y += 7)
    for (int x = 0; x < 256; x += 7) CHECK(same.at(y, x) == blurred.at(y, x));

  CHECK_THROWS_AS(downsample(img, 0.0), Error);
  CHECK_THROWS_AS(downsample(img, 1.5), Error);
}

TEST_CASE("downsample keeps constants constant at every scale") {
  Image img(100, 80, 0.61f);
  for (double s : {1.0, 0.5, 0.25, 0.125}) {
    Image out = downsample(img, s);
    for (int y = 0; y < out.height(); ++y)
      for (int x = 0; x < out.width(); ++x) CHECK(out.at(y, x) == doctest::Approx(0.61f).epsilon(1e-5));
  }
}

TEST_CASE("transforms are deterministic") {
  Image img = oracles::textured_image(50, 40, 13);
  ImageTransform t;
  t.a << 0.7, -0.3, 0.2, 1.1;
  WarpResult a = warp_affine(img, t);
  WarpResult b = warp_affine(img, t);
  CHECK((a.image.v == b.image.v).all());
  Image ba = gaussian_blur(img, 1.7, 0.6);
  Image bb = gaussian_blur(img, 1.7, 0.6);
  CHECK((ba.v == bb.v).all());
}
