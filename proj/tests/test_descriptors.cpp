#include <doctest.h>

#include <random>

#include "mods/descriptors.hpp"
#include "mods/imgproc.hpp"
#include "oracles.hpp"

using namespace mods;

namespace {

Image noise_patch(int size, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> uni(0.0f, 1.0f);
  Image img(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) img.at(y, x) = uni(rng);
  return img;
}

AffineFrame circular_frame(double x, double y, double s) {
  AffineFrame f;
  f.center = Vec2(x, y);
  f.shape = s * Mat2::Identity();
  return f;
}

}  // namespace

TEST_CASE("normalize_patch equals a direct crop-and-resize for circular frames") {
  Image img(100, 100);
  for (int y = 0; y < 100; ++y)
    for (int x = 0; x < 100; ++x) img.at(y, x) = 0.003f * x + 0.007f * y;

  AffineFrame f = circular_frame(50.0, 50.0, 4.0);
  Image patch = normalize_patch(img, f, 0.0, 41);
  REQUIRE(patch.width() == 41);

  // independent resample: region radius 3*s around the center
  for (int j = 0; j < 41; ++j)
    for (int i = 0; i < 41; ++i) {
      double qx = 2.0 * (i + 0.5) / 41.0 - 1.0;
      double qy = 2.0 * (j + 0.5) / 41.0 - 1.0;
      double sx = 50.0 + 3.0 * 4.0 * qx;
      double sy = 50.0 + 3.0 * 4.0 * qy;
      int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
      double fx = sx - x0, fy = sy - y0;
      double v = img.at(y0, x0) * (1 - fx) * (1 - fy) + img.at(y0, x0 + 1) * fx * (1 - fy) +
                 img.at(y0 + 1, x0) * (1 - fx) * fy + img.at(y0 + 1, x0 + 1) * fx * fy;
      CHECK(std::abs(patch.at(j, i) - v) <= 1e-6);
    }
}

TEST_CASE("normalize_patch at orientation pi is the 180-degree rotation") {
  Image img = oracles::textured_image(100, 100, 40);
  AffineFrame f = circular_frame(47.0, 53.0, 5.0);
  Image a = normalize_patch(img, f, 0.0, 41);
  Image b = normalize_patch(img, f, kPi, 41);
  for (int j = 0; j < 41; ++j)
    for (int i = 0; i < 41; ++i) CHECK(a.at(j, i) == doctest::Approx(b.at(40 - j, 40 - i)).epsilon(1e-5));
}

TEST_CASE("normalize_patch zero-fills outside the image") {
  Image img = oracles::textured_image(60, 60, 41);
  AffineFrame f = circular_frame(2.0, 30.0, 5.0);  // half the region is off-image
  Image patch = normalize_patch(img, f, 0.0, 41);
  int zeros = 0;
  for (int j = 0; j < 41; ++j)
    for (int i = 0; i < 41; ++i)
      if (patch.at(j, i) == 0.0f) ++zeros;
  CHECK(zeros > 200);  // a broad zero margin, and no exception
}

TEST_CASE("dominant_orientations on a step edge") {
  // horizontal edge: dark top half, bright bottom half -> vertical gradient
  Image patch(41, 41);
  for (int y = 0; y < 41; ++y)
    for (int x = 0; x < 41; ++x) patch.at(y, x) = y < 20 ? 0.1f : 0.9f;
  patch = gaussian_blur(patch, 1.0, 1.0);
  auto angles = dominant_orientations(patch);
  REQUIRE(!angles.empty());
  double deg = rad2deg(angles[0]);
  bool near90 = std::abs(deg - 90.0) <= 5.0 || std::abs(deg - 270.0) <= 5.0;
  CHECK(near90);
}

TEST_CASE("dominant_orientations of a flat patch") {
  Image patch(41, 41, 0.42f);
  auto angles = dominant_orientations(patch);
  REQUIRE(angles.size() == 1);
  CHECK(angles[0] == 0.0);
}

TEST_CASE("dominant_orientations shift with patch rotation") {
  // Sampling through R(rot) rotates patch content by -rot; a grating's
  // single orientation must follow exactly.
  double rot = deg2rad(40.0);
  for (double theta_deg : {17.0, 63.0, 200.0}) {
    double th = deg2rad(theta_deg);
    Image img(140, 140);
    for (int y = 0; y < 140; ++y)
      for (int x = 0; x < 140; ++x)
        img.at(y, x) = 0.5f + 0.45f * static_cast<float>(std::sin(0.5 * (std::cos(th) * x + std::sin(th) * y)));
    AffineFrame f = circular_frame(70.0, 70.0, 6.0);
    auto base = dominant_orientations(normalize_patch(img, f, 0.0, 41));
    auto turned = dominant_orientations(normalize_patch(img, f, rot, 41));
    REQUIRE(!base.empty());
    REQUIRE(!turned.empty());
    double best = 360.0;
    for (double b : base)
      for (double t : turned) {
        double diff = std::abs(wrap_angle(b - rot) - t);
        diff = std::min(diff, 2.0 * kPi - diff);
        best = std::min(best, rad2deg(diff));
      }
    CHECK(best <= 2.0);
  }

  // Textured spots: peaks can merge or split, so a small minority may drift.
  int matched = 0, total = 0;
  for (std::uint32_t seed : {42u, 52u, 62u, 72u}) {
    Image img = oracles::textured_image(140, 140, seed);
    for (double cx : {55.0, 70.0, 85.0}) {
      AffineFrame f = circular_frame(cx, 70.0, 6.0);
      auto base = dominant_orientations(normalize_patch(img, f, 0.0, 41));
      auto turned = dominant_orientations(normalize_patch(img, f, rot, 41));
      ++total;
      bool ok = false;
      for (double b : base)
        for (double t : turned) {
          double diff = std::abs(wrap_angle(b - rot) - t);
          diff = std::min(diff, 2.0 * kPi - diff);
          if (rad2deg(diff) <= 5.0) ok = true;
        }
      matched += ok ? 1 : 0;
    }
  }
  CHECK(matched >= total - 2);
}

TEST_CASE("root_sift construction invariants") {
  Image patch = normalize_patch(oracles::textured_image(120, 120, 43), circular_frame(60, 60, 5.0), 0.0, 41);
  Descriptor d = root_sift(patch);
  REQUIRE(d.kind == DescriptorKind::RootSift);
  REQUIRE(d.values.size() == 128);
  double norm = 0.0;
  for (float v : d.values) {
    CHECK(v >= 0.0f);
    norm += static_cast<double>(v) * v;
  }
  CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("root_sift is invariant to affine photometric changes") {
  Image img = oracles::textured_image(120, 120, 44);
  AffineFrame f = circular_frame(60, 60, 5.0);
  Image patch = normalize_patch(img, f, 0.0, 41);
  Descriptor base = root_sift(patch);

  for (double gamma : {0.7, 1.0, 1.3, 1.4}) {
    Image adjusted = patch;
    adjusted.v = adjusted.v * static_cast<float>(gamma) + 0.1f;
    Descriptor other = root_sift(adjusted);
    CHECK(descriptor_distance(base, other) <= 0.05);
  }
}

TEST_CASE("root_sift separates patches of independent random content") {
  AffineFrame f = circular_frame(60, 60, 5.0);
  for (int s = 0; s < 4; ++s) {
    Image a_src = oracles::textured_image(120, 120, 100 + s);
    Image b_src = oracles::textured_image(120, 120, 200 + s);
    Descriptor a = root_sift(normalize_patch(a_src, f, 0.0, 41));
    Descriptor b = root_sift(normalize_patch(b_src, f, 0.0, 41));
    CHECK(descriptor_distance(a, b) >= 0.5);
  }
}

TEST_CASE("root_sift zero-gradient patch gives the uniform unit vector") {
  Image flat(41, 41, 0.3f);
  Descriptor d = root_sift(flat);
  for (float v : d.values) CHECK(v == doctest::Approx(1.0 / std::sqrt(128.0)));
}

TEST_CASE("brief basics") {
  Image patch = gaussian_blur(noise_patch(32, 3), 2.0, 2.0);
  Descriptor a = brief(patch);
  Descriptor b = brief(patch);
  CHECK(hamming_distance(a.bits, b.bits) == 0);

  Image inverted(32, 32);
  inverted.v = 1.0f - patch.v;
  Descriptor c = brief(inverted);
  CHECK(hamming_distance(a.bits, c.bits) == 256);
}

TEST_CASE("brief tolerates a one-pixel translation") {
  Image big = gaussian_blur(oracles::textured_image(64, 64, 45), 2.0, 2.0);
  Image patch(32, 32), shifted(32, 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      patch.at(y, x) = big.at(y + 16, x + 16);
      shifted.at(y, x) = big.at(y + 16, x + 17);
    }
  CHECK(hamming_distance(brief(patch).bits, brief(shifted).bits) <= 80);
}

TEST_CASE("brief pattern is frozen") {
  // Wire-format guard: descriptors of this fixed ramp must never change.
  Image ramp(32, 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) ramp.at(y, x) = static_cast<float>((3 * x + 11 * y) % 29) / 29.0f;
  Descriptor d = brief(ramp);
  CHECK(d.bits[0] == 0xFA32CE3EB70AE41FULL);
  CHECK(d.bits[1] == 0x6473B5543433A4F6ULL);
}

TEST_CASE("describe_features emits at most two orientations per frame") {
  Image img = oracles::textured_image(160, 160, 46);
  auto frames = detect_dog(img, DetectorParams::dog_defaults());
  REQUIRE(!frames.empty());
  auto described = describe_features(img, frames, DescriptorKind::RootSift);
  CHECK(described.size() >= frames.size());
  CHECK(described.size() <= 2 * frames.size());
  for (const auto& df : described) {
    CHECK(df.orientation >= 0.0);
    CHECK(df.orientation < 2.0 * kPi);
    REQUIRE(df.descriptor.values.size() == 128);
  }
}
