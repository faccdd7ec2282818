#include "mods/imgproc.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace mods {

namespace {

std::vector<float> gaussian_kernel(double sigma) {
  int radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[i + radius] = w;
    sum += w;
  }
  std::vector<float> out(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) out[i] = static_cast<float>(k[i] / sum);
  return out;
}

}  // namespace

float sample_bilinear(const Image& img, double x, double y) {
  int x0 = static_cast<int>(std::floor(x));
  int y0 = static_cast<int>(std::floor(y));
  if (x0 < -1 || y0 < -1 || x0 >= img.width() || y0 >= img.height()) return 0.0f;
  float fx = static_cast<float>(x - x0);
  float fy = static_cast<float>(y - y0);
  auto tap = [&](int yy, int xx) -> float {
    if (xx < 0 || yy < 0 || xx >= img.width() || yy >= img.height()) return 0.0f;
    return img.at(yy, xx);
  };
  float top = tap(y0, x0) * (1.0f - fx) + tap(y0, x0 + 1) * fx;
  float bot = tap(y0 + 1, x0) * (1.0f - fx) + tap(y0 + 1, x0 + 1) * fx;
  return top * (1.0f - fy) + bot * fy;
}

float sample_bilinear_clamped(const Image& img, double x, double y) {
  int x0 = static_cast<int>(std::floor(x));
  int y0 = static_cast<int>(std::floor(y));
  float fx = static_cast<float>(x - x0);
  float fy = static_cast<float>(y - y0);
  float top = img.at_clamped(y0, x0) * (1.0f - fx) + img.at_clamped(y0, x0 + 1) * fx;
  float bot = img.at_clamped(y0 + 1, x0) * (1.0f - fx) + img.at_clamped(y0 + 1, x0 + 1) * fx;
  return top * (1.0f - fy) + bot * fy;
}

Image gaussian_blur(const Image& img, double sigma_x, double sigma_y) {
  if (sigma_x < 0 || sigma_y < 0) fail(ErrorCode::DomainError, "gaussian_blur: negative sigma");
  Image cur = img;
  if (sigma_x > 0) {
    auto k = gaussian_kernel(sigma_x);
    int radius = static_cast<int>(k.size() / 2);
    Image out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) {
        float acc = 0.0f;
        for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * cur.at_clamped(y, x + i);
        out.at(y, x) = acc;
      }
    cur = std::move(out);
  }
  if (sigma_y > 0) {
    auto k = gaussian_kernel(sigma_y);
    int radius = static_cast<int>(k.size() / 2);
    Image out(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) {
        float acc = 0.0f;
        for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * cur.at_clamped(y + i, x);
        out.at(y, x) = acc;
      }
    cur = std::move(out);
  }
  return cur;
}

Image oriented_gaussian_blur(const Image& img, double sigma_u, double sigma_v, double angle) {
  double s = std::sin(angle), c = std::cos(angle);
  if (std::abs(s) < 1e-12) return gaussian_blur(img, sigma_u, sigma_v);
  if (std::abs(c) < 1e-12) return gaussian_blur(img, sigma_v, sigma_u);

  Image cur = img;
  auto pass = [&](double sigma, double dx, double dy) {
    if (sigma <= 0) return;
    auto k = gaussian_kernel(sigma);
    int radius = static_cast<int>(k.size() / 2);
    Image out(cur.width(), cur.height());
    for (int y = 0; y < cur.height(); ++y)
      for (int x = 0; x < cur.width(); ++x) {
        float acc = 0.0f;
        for (int i = -radius; i <= radius; ++i)
          acc += k[i + radius] * sample_bilinear_clamped(cur, x + i * dx, y + i * dy);
        out.at(y, x) = acc;
      }
    cur = std::move(out);
  };
  pass(sigma_u, c, s);
  pass(sigma_v, -s, c);
  return cur;
}

WarpResult warp_affine(const Image& img, const ImageTransform& t) {
  if (std::abs(t.a.determinant()) < 1e-12) fail(ErrorCode::SingularMatrix, "warp_affine: singular transform");

  // The source raster covers [-0.5, W-0.5] x [-0.5, H-0.5] in pixel-center
  // coordinates; the canvas is the bounding box of its warped corners.
  double w = img.width(), h = img.height();
  Vec2 corners[4] = {t.apply({-0.5, -0.5}), t.apply({w - 0.5, -0.5}),
                     t.apply({-0.5, h - 0.5}), t.apply({w - 0.5, h - 0.5})};
  double xlo = corners[0].x(), xhi = corners[0].x(), ylo = corners[0].y(), yhi = corners[0].y();
  for (const auto& p : corners) {
    xlo = std::min(xlo, p.x());
    xhi = std::max(xhi, p.x());
    ylo = std::min(ylo, p.y());
    yhi = std::max(yhi, p.y());
  }
  if (xhi - xlo < 1.0 - 1e-9 || yhi - ylo < 1.0 - 1e-9)
    fail(ErrorCode::EmptyOutput, "warp_affine: output box below 1x1");
  int out_w = static_cast<int>(std::ceil(xhi - xlo - 1e-9));
  int out_h = static_cast<int>(std::ceil(yhi - ylo - 1e-9));

  // Output pixel (ix, iy) sits at continuous (xlo + 0.5 + ix, ylo + 0.5 + iy).
  ImageTransform forward = t;
  forward.b -= Vec2(xlo + 0.5, ylo + 0.5);
  ImageTransform inv = forward.inverse();

  WarpResult res;
  res.image = Image(out_w, out_h);
  res.mask = Image(out_w, out_h);
  res.inverse = inv;
  for (int y = 0; y < out_h; ++y)
    for (int x = 0; x < out_w; ++x) {
      Vec2 src = inv.apply({static_cast<double>(x), static_cast<double>(y)});
      res.image.at(y, x) = sample_bilinear(img, src.x(), src.y());
      bool inside = src.x() >= 0.0 && src.y() >= 0.0 && src.x() <= w - 1.0 && src.y() <= h - 1.0;
      res.mask.at(y, x) = inside ? 1.0f : 0.0f;
    }
  return res;
}

Image downsample(const Image& img, double s, double sigma_base) {
  if (!(s > 0.0) || s > 1.0) fail(ErrorCode::DomainError, "downsample: S must be in (0, 1]");
  Image blurred = gaussian_blur(img, sigma_base / s, sigma_base / s);
  if (s == 1.0) return blurred;
  int out_w = static_cast<int>(std::ceil(s * img.width()));
  int out_h = static_cast<int>(std::ceil(s * img.height()));
  Image out(out_w, out_h);
  for (int y = 0; y < out_h; ++y)
    for (int x = 0; x < out_w; ++x)
      out.at(y, x) = sample_bilinear_clamped(blurred, (x + 0.5) / s - 0.5, (y + 0.5) / s - 0.5);
  return out;
}

void gradient(const Image& img, Image& gx, Image& gy) {
  gx = Image(img.width(), img.height());
  gy = Image(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      gx.at(y, x) = 0.5f * (img.at_clamped(y, x + 1) - img.at_clamped(y, x - 1));
      gy.at(y, x) = 0.5f * (img.at_clamped(y + 1, x) - img.at_clamped(y - 1, x));
    }
}

}  // namespace mods
