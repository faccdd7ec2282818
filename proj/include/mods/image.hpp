#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>

#include "mods/core.hpp"

namespace mods {

/// Single-channel raster with real-valued samples, row-major.
template <typename Scalar>
struct PlanarImage {
  using Plane = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Plane v;  // v(y, x)

  PlanarImage() = default;
  PlanarImage(int width, int height, Scalar fill = Scalar(0)) { v = Plane::Constant(height, width, fill); }
  explicit PlanarImage(Plane plane) : v(std::move(plane)) {}

  int width() const { return static_cast<int>(v.cols()); }
  int height() const { return static_cast<int>(v.rows()); }
  bool empty() const { return v.size() == 0; }

  Scalar& at(int y, int x) { return v(y, x); }
  Scalar at(int y, int x) const { return v(y, x); }

  /// Nearest in-bounds sample (replicated border).
  Scalar at_clamped(int y, int x) const {
    int cy = y < 0 ? 0 : (y >= height() ? height() - 1 : y);
    int cx = x < 0 ? 0 : (x >= width() ? width() - 1 : x);
    return v(cy, cx);
  }

  bool contains(double x, double y) const {
    return x >= 0.0 && y >= 0.0 && x < static_cast<double>(width()) && y < static_cast<double>(height());
  }
};

using Image = PlanarImage<float>;

/// 8-bit RGB canvas used only for overlay rendering.
struct RgbImage {
  int w = 0, h = 0;
  std::vector<std::uint8_t> data;  // 3 bytes per pixel, row-major

  RgbImage() = default;
  RgbImage(int width, int height) : w(width), h(height), data(static_cast<std::size_t>(width) * height * 3, 0) {}

  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    if (x < 0 || y < 0 || x >= w || y >= h) return;
    std::size_t i = (static_cast<std::size_t>(y) * w + x) * 3;
    data[i] = r;
    data[i + 1] = g;
    data[i + 2] = b;
  }
};

/// Loads an 8-bit PGM (P2/P5) or PNG file as luminance in [0,1].
/// Color PNG input is converted with BT.601 weights.
Image load_image(const std::string& path);

/// Writes a grayscale image as 8-bit PNG.
void save_png(const std::string& path, const Image& img);

/// Writes an RGB canvas as 8-bit PNG.
void save_png(const std::string& path, const RgbImage& img);

/// Writes a grayscale image as binary 8-bit PGM.
void save_pgm(const std::string& path, const Image& img);

}  // namespace mods
