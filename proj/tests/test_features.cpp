#include <doctest.h>

#include <random>

#include "mods/features.hpp"
#include "oracles.hpp"

using namespace mods;

namespace {

Image gaussian_blob(int size, double cx, double cy, double sx, double sy, double angle = 0.0) {
  Image img(size, size, 0.05f);
  double ca = std::cos(angle), sa = std::sin(angle);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      double dx = x - cx, dy = y - cy;
      double u = ca * dx + sa * dy, v = -sa * dx + ca * dy;
      img.at(y, x) += 0.9f * static_cast<float>(std::exp(-0.5 * (u * u / (sx * sx) + v * v / (sy * sy))));
    }
  return img;
}

double hausdorff(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  auto directed = [](const std::vector<Vec2>& from, const std::vector<Vec2>& to) {
    double worst = 0.0;
    for (const auto& p : from) {
      double best = 1e300;
      for (const auto& q : to) best = std::min(best, (p - q).norm());
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

}  // namespace

TEST_CASE("all detectors return nothing on constant images") {
  Image img(64, 64, 0.5f);
  CHECK(detect_fast(img, DetectorParams::fast_defaults()).empty());
  CHECK(detect_dog(img, DetectorParams::dog_defaults()).empty());
  CHECK(detect_hessaff(img, DetectorParams::hessaff_defaults()).empty());
}

TEST_CASE("fast finds an isolated bright square") {
  Image img(64, 64, 0.0f);
  for (int y = 31; y <= 33; ++y)
    for (int x = 31; x <= 33; ++x) img.at(y, x) = 1.0f;
  auto frames = detect_fast(img, DetectorParams::fast_defaults());
  REQUIRE(!frames.empty());
  bool near = false;
  for (const auto& f : frames)
    if ((f.center - Vec2(32, 32)).norm() <= 3.0) near = true;
  CHECK(near);
}

TEST_CASE("fast corners are equivariant to 90 degree rotation") {
  Image img = oracles::textured_image(160, 160, 31);
  ImageTransform rot90;
  rot90.a << 0.0, -1.0, 1.0, 0.0;
  WarpResult rotated = warp_affine(img, rot90);

  auto base = detect_fast(img, DetectorParams::fast_defaults());
  auto turned = detect_fast(rotated.image, DetectorParams::fast_defaults());
  REQUIRE(base.size() > 10);

  std::vector<Vec2> base_pts, turned_back;
  for (const auto& f : base) base_pts.push_back(f.center);
  for (const auto& f : turned) turned_back.push_back(rotated.inverse.apply(f.center));
  CHECK(hausdorff(base_pts, turned_back) <= 2.0);
}

TEST_CASE("fast frames are similarity frames with the stated invariants") {
  Image img = oracles::textured_image(120, 100, 32);
  auto frames = detect_fast(img, DetectorParams::fast_defaults());
  REQUIRE(!frames.empty());
  for (const auto& f : frames) {
    CHECK(f.shape.determinant() > 0.0);
    Eigen::JacobiSVD<Mat2> svd(f.shape);
    CHECK(svd.singularValues()(0) == doctest::Approx(svd.singularValues()(1)));  // circular
    CHECK(svd.singularValues()(1) > 0.5);
    CHECK(f.tier == DetectorTier::Fast);
  }
  for (std::size_t i = 1; i < frames.size(); ++i) CHECK(frames[i - 1].response >= frames[i].response);
}

TEST_CASE("dog finds the blob at its scale") {
  Image img = gaussian_blob(72, 36.0, 36.0, 6.0, 6.0);
  auto frames = detect_dog(img, DetectorParams::dog_defaults());
  REQUIRE(!frames.empty());
  const AffineFrame& top = frames.front();
  CHECK((top.center - Vec2(36, 36)).norm() <= 3.0);
  double scale = top.scale();
  CHECK(scale <= 6.0 * 1.3);
  CHECK(scale >= 6.0 / 1.3);
}

TEST_CASE("dog frames track a 2x downsample") {
  Image img = oracles::textured_image(256, 256, 33);
  Image half = downsample(img, 0.5);
  auto fine = detect_dog(img, DetectorParams::dog_defaults());
  auto coarse = detect_dog(half, DetectorParams::dog_defaults());
  REQUIRE(coarse.size() > 10);

  int matched = 0;
  for (const auto& c : coarse) {
    Vec2 up = 2.0 * c.center + Vec2(0.5, 0.5);
    double want_scale = 2.0 * c.scale();
    for (const auto& f : fine) {
      if ((f.center - up).norm() <= 2.0 && f.scale() / want_scale < 1.5 && want_scale / f.scale() < 1.5) {
        ++matched;
        break;
      }
    }
  }
  CHECK(matched >= static_cast<int>(0.6 * coarse.size()));
}

TEST_CASE("hessaff recovers the anisotropy of an elliptical blob") {
  Image img = gaussian_blob(128, 64.0, 64.0, 15.0, 5.0);
  auto frames = detect_hessaff(img, DetectorParams::hessaff_defaults());
  REQUIRE(!frames.empty());
  const AffineFrame& top = frames.front();
  CHECK((top.center - Vec2(64, 64)).norm() <= 4.0);
  Eigen::JacobiSVD<Mat2> svd(top.shape);
  double ratio = svd.singularValues()(0) / svd.singularValues()(1);
  CHECK(ratio >= 2.2);
  CHECK(ratio <= 3.8);
}

namespace {

/// Rasterized overlap error of two concentric measurement ellipses given in
/// covariance form: 1 - intersection/union.
double overlap_error(const Mat2& c1, const Mat2& c2) {
  double r = 2.5 * std::sqrt(std::max(std::sqrt(c1.determinant()), std::sqrt(c2.determinant())));
  Mat2 i1 = c1.inverse(), i2 = c2.inverse();
  int n = 120;
  double both = 0, either = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      Vec2 p((2.0 * (i + 0.5) / n - 1.0) * r, (2.0 * (j + 0.5) / n - 1.0) * r);
      bool in1 = p.dot(i1 * p) <= 1.0, in2 = p.dot(i2 * p) <= 1.0;
      if (in1 && in2) ++both;
      if (in1 || in2) ++either;
    }
  return either > 0 ? 1.0 - both / either : 1.0;
}

}  // namespace

TEST_CASE("hessaff shapes are affine covariant") {
  // Shape discrepancy = overlap error of the measurement ellipses after
  // mapping through the known warp; aggregated over several stimuli.
  struct Stimulus {
    std::uint32_t seed;
    double a00, a01, a10, a11;
  };
  const Stimulus stimuli[] = {{34, 1.3, 0.25, 0.1, 0.85}, {35, 0.8, -0.2, 0.15, 1.1}, {36, 1.15, 0.3, -0.2, 0.95}};

  int matched = 0, attempted = 0;
  for (const auto& st : stimuli) {
    Image img = oracles::textured_image(220, 220, st.seed);
    ImageTransform t;
    t.a << st.a00, st.a01, st.a10, st.a11;
    WarpResult warped = warp_affine(img, t);

    auto base = detect_hessaff(img, DetectorParams::hessaff_defaults());
    auto other = detect_hessaff(warped.image, DetectorParams::hessaff_defaults(), &warped.mask);
    REQUIRE(base.size() > 10);
    REQUIRE(other.size() > 10);

    ImageTransform fwd = warped.inverse.inverse();
    for (const auto& f : base) {
      Vec2 mapped = fwd.apply(f.center);
      double sigma_mapped = std::sqrt(std::abs(fwd.a.determinant())) * f.scale();
      double m = 2.0 * sigma_mapped + 2.0;
      // A counterpart can only exist where the detector's own support gate
      // passes in the warped view.
      bool feasible = true;
      for (double dx : {-m, m})
        for (double dy : {-m, m}) {
          Vec2 corner = mapped + Vec2(dx, dy);
          if (corner.x() < 0 || corner.y() < 0 || corner.x() >= warped.image.width() ||
              corner.y() >= warped.image.height())
            feasible = false;
          Vec2 src = warped.inverse.apply(corner);
          if (src.x() < 0 || src.y() < 0 || src.x() > img.width() - 1.0 || src.y() > img.height() - 1.0)
            feasible = false;
        }
      if (!feasible) continue;
      ++attempted;
      Mat2 want = fwd.a * f.frame_cov() * fwd.a.transpose();
      for (const auto& g : other) {
        if ((g.center - mapped).norm() > 3.0) continue;
        if (overlap_error(want, g.frame_cov()) <= 0.3) {
          ++matched;
          break;
        }
      }
    }
  }
  REQUIRE(attempted > 100);
  CHECK(matched >= static_cast<int>(0.5 * attempted));
}

TEST_CASE("reproject_frames identity view keeps frames") {
  SynthView view;
  view.back_map = ImageTransform::identity();
  std::vector<AffineFrame> frames(3);
  frames[0].center = Vec2(10, 20);
  frames[1].center = Vec2(5, 5);
  frames[2].center = Vec2(99, 99);
  auto out = reproject_frames(frames, view, 100, 100);
  REQUIRE(out.size() == 3);
  CHECK(out[0].center == frames[0].center);
  CHECK(out[1].shape.isApprox(frames[1].shape));
}

TEST_CASE("reproject_frames maps the unit circle linearly") {
  SynthView view;
  view.back_map.a << 2.0, 0.0, 0.0, 1.0;  // undo a t=2 horizontal shrink
  view.back_map.b = Vec2::Zero();
  AffineFrame f;
  f.center = Vec2(10, 20);
  f.shape = 4.0 * Mat2::Identity();
  auto out = reproject_frames({f}, view, 200, 200);
  REQUIRE(out.size() == 1);
  CHECK(out[0].center.x() == doctest::Approx(20.0));
  CHECK(out[0].center.y() == doctest::Approx(20.0));
  Eigen::JacobiSVD<Mat2> svd(out[0].shape);
  CHECK(svd.singularValues()(0) == doctest::Approx(8.0));
  CHECK(svd.singularValues()(1) == doctest::Approx(4.0));
}

TEST_CASE("reproject_frames matches a scalar oracle and drops outsiders") {
  std::mt19937 rng(35);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    SynthView view;
    view.back_map.a << 1.0 + 0.4 * uni(rng), 0.3 * uni(rng), 0.3 * uni(rng), 1.0 + 0.4 * uni(rng);
    view.back_map.b << 30.0 * uni(rng), 30.0 * uni(rng);
    AffineFrame f;
    f.center = Vec2(40.0 + 10.0 * uni(rng), 40.0 + 10.0 * uni(rng));
    f.shape = Mat2::Identity() * (2.0 + uni(rng));
    auto out = reproject_frames({f}, view, 100, 100);

    double ex = view.back_map.a(0, 0) * f.center.x() + view.back_map.a(0, 1) * f.center.y() + view.back_map.b.x();
    double ey = view.back_map.a(1, 0) * f.center.x() + view.back_map.a(1, 1) * f.center.y() + view.back_map.b.y();
    bool inside = ex >= 0 && ey >= 0 && ex < 100 && ey < 100;
    CHECK(out.size() == (inside ? 1u : 0u));
    if (inside) {
      CHECK(std::abs(out[0].center.x() - ex) <= 1e-9);
      CHECK(std::abs(out[0].center.y() - ey) <= 1e-9);
    }
  }
}

TEST_CASE("detectors are deterministic and respect the cap") {
  Image img = oracles::textured_image(180, 140, 36);
  DetectorParams p = DetectorParams::dog_defaults();
  auto a = detect_dog(img, p);
  auto b = detect_dog(img, p);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].center == b[i].center);
    CHECK(a[i].response == b[i].response);
  }
  p.max_features = 5;
  auto capped = detect_dog(img, p);
  CHECK(capped.size() <= 5);
  for (std::size_t i = 0; i < capped.size(); ++i) CHECK(capped[i].response == a[i].response);
}
