#pragma once

#include "mods/core.hpp"
#include "mods/image.hpp"

namespace mods {

/// Default anti-alias level for unit-spaced resampling, pixels.
constexpr double kSigmaBase = 0.8;

/// Affine pixel-coordinate map p -> A*p + b. Rows of `a` are the 2x2 part.
struct ImageTransform {
  Mat2 a = Mat2::Identity();
  Vec2 b = Vec2::Zero();

  Vec2 apply(const Vec2& p) const { return a * p + b; }
  ImageTransform inverse() const {
    ImageTransform inv;
    inv.a = a.inverse();
    inv.b = -inv.a * b;
    return inv;
  }
  static ImageTransform identity() { return {}; }
};

inline ImageTransform compose(const ImageTransform& outer, const ImageTransform& inner) {
  ImageTransform out;
  out.a = outer.a * inner.a;
  out.b = outer.a * inner.b + outer.b;
  return out;
}

/// Bilinear sample with zero outside the source raster.
float sample_bilinear(const Image& img, double x, double y);

/// Bilinear sample with replicated border.
float sample_bilinear_clamped(const Image& img, double x, double y);

/// Separable Gaussian, kernel truncated at 4*sigma, replicated border.
/// sigma = 0 along an axis is the identity along that axis.
Image gaussian_blur(const Image& img, double sigma_x, double sigma_y);

/// Gaussian with principal axes rotated by `angle`: sigma_u along
/// (cos a, sin a), sigma_v across. Falls back to the axis-aligned path for
/// angles that are multiples of pi.
Image oriented_gaussian_blur(const Image& img, double sigma_u, double sigma_v, double angle);

struct WarpResult {
  Image image;
  Image mask;             // 1 where all bilinear taps were inside the source
  ImageTransform inverse; // output pixel coords -> source pixel coords
};

/// Resamples through the affine map T (source -> target pixel coords).
/// The canvas is the bounding box of the warped source extent; samples that
/// fall outside the source are 0 and flagged in the mask.
/// Throws EmptyOutput when the box degenerates below 1x1.
WarpResult warp_affine(const Image& img, const ImageTransform& t);

/// Anti-alias blur followed by bilinear resampling to ceil(S*W) x ceil(S*H).
/// S = 1 only applies the blur. Throws DomainError unless 0 < S <= 1.
Image downsample(const Image& img, double s, double sigma_base = kSigmaBase);

/// Central-difference gradients, replicated border.
void gradient(const Image& img, Image& gx, Image& gy);

}  // namespace mods
