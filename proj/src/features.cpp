#include "mods/features.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace mods {

const char* tier_name(DetectorTier t) {
  switch (t) {
    case DetectorTier::Fast: return "fast";
    case DetectorTier::DoG: return "dog";
    case DetectorTier::HessAff: return "hessaff";
  }
  return "?";
}

DetectorParams DetectorParams::fast_defaults() {
  DetectorParams p;
  p.response_threshold = 0.06;
  return p;
}

DetectorParams DetectorParams::dog_defaults() {
  DetectorParams p;
  p.response_threshold = 0.006;
  return p;
}

DetectorParams DetectorParams::hessaff_defaults() {
  DetectorParams p;
  p.response_threshold = 1e-5;
  return p;
}

DetectorParams DetectorParams::defaults_for(DetectorTier tier) {
  switch (tier) {
    case DetectorTier::Fast: return fast_defaults();
    case DetectorTier::DoG: return dog_defaults();
    case DetectorTier::HessAff: return hessaff_defaults();
  }
  return {};
}

namespace {

// ---------------------------------------------------------------------------
// Candidate gating against the image bounds and the view validity mask.

class SupportGate {
 public:
  SupportGate(int w, int h, const Image* valid) : w_(w), h_(h) {
    if (!valid) return;
    // Integral image of invalid-pixel counts.
    integral_.resize(static_cast<std::size_t>(w + 1) * (h + 1), 0);
    for (int y = 0; y < h; ++y) {
      int row = 0;
      for (int x = 0; x < w; ++x) {
        row += valid->at(y, x) > 0.5f ? 0 : 1;
        integral_[idx(y + 1, x + 1)] = integral_[idx(y, x + 1)] + row;
      }
    }
  }

  /// True when the box [cx +- m, cy +- m] lies inside the raster and is free
  /// of invalid pixels.
  bool ok(double cx, double cy, double m) const {
    int x0 = static_cast<int>(std::floor(cx - m));
    int y0 = static_cast<int>(std::floor(cy - m));
    int x1 = static_cast<int>(std::ceil(cx + m));
    int y1 = static_cast<int>(std::ceil(cy + m));
    if (x0 < 0 || y0 < 0 || x1 >= w_ || y1 >= h_) return false;
    if (integral_.empty()) return true;
    int bad = integral_[idx(y1 + 1, x1 + 1)] - integral_[idx(y0, x1 + 1)] -
              integral_[idx(y1 + 1, x0)] + integral_[idx(y0, x0)];
    return bad == 0;
  }

 private:
  std::size_t idx(int y, int x) const { return static_cast<std::size_t>(y) * (w_ + 1) + x; }
  int w_, h_;
  std::vector<int> integral_;
};

// ---------------------------------------------------------------------------
// Gaussian scale-space shared by the DoG and Hessian detectors.

struct Pyramid {
  int levels = 3;       // extrema-carrying levels per octave
  double sigma0 = 1.6;  // blur of level 0 within each octave
  std::vector<std::vector<Image>> octaves;  // levels + 3 images each
  std::vector<double> level_sigma;          // within-octave sigma per image

  double abs_sigma(int octave, double level) const {
    return sigma0 * std::pow(2.0, level / levels) * std::ldexp(1.0, octave);
  }
};

Pyramid build_pyramid(const Image& img, int levels_per_octave) {
  constexpr double kAssumedBlur = 0.5;
  constexpr int kMinSize = 16;
  Pyramid pyr;
  pyr.levels = levels_per_octave;

  int n_images = levels_per_octave + 3;
  pyr.level_sigma.resize(n_images);
  for (int l = 0; l < n_images; ++l)
    pyr.level_sigma[l] = pyr.sigma0 * std::pow(2.0, static_cast<double>(l) / levels_per_octave);

  double boost = std::sqrt(std::max(0.0, pyr.sigma0 * pyr.sigma0 - kAssumedBlur * kAssumedBlur));
  Image base = gaussian_blur(img, boost, boost);

  while (std::min(base.width(), base.height()) >= kMinSize) {
    std::vector<Image> octave;
    octave.reserve(n_images);
    octave.push_back(std::move(base));
    for (int l = 1; l < n_images; ++l) {
      double inc = std::sqrt(pyr.level_sigma[l] * pyr.level_sigma[l] -
                             pyr.level_sigma[l - 1] * pyr.level_sigma[l - 1]);
      octave.push_back(gaussian_blur(octave[l - 1], inc, inc));
    }
    // Decimate the 2*sigma0 image to seed the next octave.
    const Image& seed = octave[levels_per_octave];
    int nw = (seed.width() + 1) / 2, nh = (seed.height() + 1) / 2;
    base = Image(nw, nh);
    for (int y = 0; y < nh; ++y)
      for (int x = 0; x < nw; ++x) base.at(y, x) = seed.at(2 * y, 2 * x);
    pyr.octaves.push_back(std::move(octave));
  }
  return pyr;
}

struct ScaleSpaceExtremum {
  int octave = 0;
  double x = 0, y = 0;    // octave grid coords, refined
  double level = 0;       // refined level index
  double value = 0;       // interpolated response
};

/// 3D quadratic refinement on a per-octave response stack. Returns nullopt
/// when the refinement walks out of the stack or fails to settle.
std::optional<ScaleSpaceExtremum> refine_extremum(const std::vector<Image>& stack, int octave, int level,
                                                  int x, int y, int margin) {
  const int max_moves = 5;
  Eigen::Vector3d delta = Eigen::Vector3d::Zero();
  double value = 0.0;
  for (int attempt = 0; attempt < max_moves; ++attempt) {
    const Image& c = stack[level];
    const Image& lo = stack[level - 1];
    const Image& hi = stack[level + 1];

    Eigen::Vector3d g;
    g << 0.5 * (c.at(y, x + 1) - c.at(y, x - 1)),
         0.5 * (c.at(y + 1, x) - c.at(y - 1, x)),
         0.5 * (hi.at(y, x) - lo.at(y, x));
    Eigen::Matrix3d h;
    double dxx = c.at(y, x + 1) + c.at(y, x - 1) - 2.0 * c.at(y, x);
    double dyy = c.at(y + 1, x) + c.at(y - 1, x) - 2.0 * c.at(y, x);
    double dss = hi.at(y, x) + lo.at(y, x) - 2.0 * c.at(y, x);
    double dxy = 0.25 * (c.at(y + 1, x + 1) - c.at(y + 1, x - 1) - c.at(y - 1, x + 1) + c.at(y - 1, x - 1));
    double dxs = 0.25 * (hi.at(y, x + 1) - hi.at(y, x - 1) - lo.at(y, x + 1) + lo.at(y, x - 1));
    double dys = 0.25 * (hi.at(y + 1, x) - hi.at(y - 1, x) - lo.at(y + 1, x) + lo.at(y - 1, x));
    h << dxx, dxy, dxs, dxy, dyy, dys, dxs, dys, dss;

    if (std::abs(h.determinant()) < 1e-20) return std::nullopt;
    delta = h.ldlt().solve(-g);
    if (!delta.allFinite()) return std::nullopt;

    if (std::abs(delta(0)) < 0.5 && std::abs(delta(1)) < 0.5 && std::abs(delta(2)) < 0.5) {
      value = c.at(y, x) + 0.5 * g.dot(delta);
      ScaleSpaceExtremum e;
      e.octave = octave;
      e.x = x + delta(0);
      e.y = y + delta(1);
      e.level = level + delta(2);
      e.value = value;
      return e;
    }
    x += static_cast<int>(std::lround(std::clamp(delta(0), -1.0, 1.0)));
    y += static_cast<int>(std::lround(std::clamp(delta(1), -1.0, 1.0)));
    level += static_cast<int>(std::lround(std::clamp(delta(2), -1.0, 1.0)));
    if (level < 1 || level > static_cast<int>(stack.size()) - 2) return std::nullopt;
    if (x < margin || y < margin || x >= c.width() - margin || y >= c.height() - margin) return std::nullopt;
  }
  return std::nullopt;
}

bool is_extremum_3x3x3(const std::vector<Image>& stack, int level, int x, int y) {
  float v = stack[level].at(y, x);
  bool is_max = true, is_min = true;
  for (int dl = -1; dl <= 1 && (is_max || is_min); ++dl)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dl == 0 && dy == 0 && dx == 0) continue;
        float n = stack[level + dl].at(y + dy, x + dx);
        if (n >= v) is_max = false;
        if (n <= v) is_min = false;
      }
  return is_max || is_min;
}

// ---------------------------------------------------------------------------
// DoG detector.

std::vector<AffineFrame> run_dog(const Image& img, const DetectorParams& params, const SupportGate& gate) {
  std::vector<AffineFrame> frames;
  Pyramid pyr = build_pyramid(img, params.levels_per_octave);
  const int margin = 5;
  const double edge_r = 10.0;
  const double edge_limit = (edge_r + 1.0) * (edge_r + 1.0) / edge_r;

  for (std::size_t o = 0; o < pyr.octaves.size(); ++o) {
    const auto& g = pyr.octaves[o];
    std::vector<Image> dog(g.size() - 1);
    for (std::size_t l = 0; l + 1 < g.size(); ++l) dog[l] = Image(Image::Plane(g[l + 1].v - g[l].v));

    double grid = std::ldexp(1.0, static_cast<int>(o));
    for (int l = 1; l <= pyr.levels; ++l) {
      const Image& d = dog[l];
      for (int y = margin; y < d.height() - margin; ++y)
        for (int x = margin; x < d.width() - margin; ++x) {
          float v = d.at(y, x);
          if (std::abs(v) < 0.8f * params.response_threshold) continue;
          if (!is_extremum_3x3x3(dog, l, x, y)) continue;
          auto e = refine_extremum(dog, static_cast<int>(o), l, x, y, margin);
          if (!e || std::abs(e->value) < params.response_threshold) continue;

          // Edge response: ratio of principal curvatures of the response.
          int rx = static_cast<int>(std::lround(e->x)), ry = static_cast<int>(std::lround(e->y));
          int rl = std::clamp(static_cast<int>(std::lround(e->level)), 1, pyr.levels);
          const Image& dd = dog[rl];
          double dxx = dd.at(ry, rx + 1) + dd.at(ry, rx - 1) - 2.0 * dd.at(ry, rx);
          double dyy = dd.at(ry + 1, rx) + dd.at(ry - 1, rx) - 2.0 * dd.at(ry, rx);
          double dxy = 0.25 * (dd.at(ry + 1, rx + 1) - dd.at(ry + 1, rx - 1) -
                               dd.at(ry - 1, rx + 1) + dd.at(ry - 1, rx - 1));
          double tr = dxx + dyy, det = dxx * dyy - dxy * dxy;
          if (det <= 0 || tr * tr / det >= edge_limit) continue;

          double sigma = pyr.abs_sigma(static_cast<int>(o), e->level);
          AffineFrame f;
          f.center = Vec2(e->x * grid, e->y * grid);
          f.shape = sigma * Mat2::Identity();
          f.response = std::abs(e->value);
          f.tier = DetectorTier::DoG;
          if (!gate.ok(f.center.x(), f.center.y(), 2.0 * sigma + 2.0)) continue;
          frames.push_back(f);
        }
    }
  }
  rank_and_cap(frames, params.max_features);
  return frames;
}

// ---------------------------------------------------------------------------
// Hessian detector with affine adaptation.

/// Inverse square root of an SPD 2x2 matrix, normalized to unit determinant.
std::optional<Mat2> inv_sqrt_unit_det(const Mat2& m, double& aniso) {
  Eigen::SelfAdjointEigenSolver<Mat2> eig(m);
  double l0 = eig.eigenvalues()(0), l1 = eig.eigenvalues()(1);
  if (!(l0 > 0.0) || !(l1 > 0.0)) return std::nullopt;
  aniso = std::sqrt(l1 / l0);  // >= 1
  Vec2 inv_sqrt(1.0 / std::sqrt(l0), 1.0 / std::sqrt(l1));
  Mat2 r = eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
  return Mat2(r / std::sqrt(r.determinant()));
}

/// Baumberg iteration on the second moment matrix of the patch sampled
/// through the current shape. Returns the unit-determinant shape, or nullopt
/// when the loop fails to converge or the ellipse turns degenerate.
std::optional<Mat2> adapt_shape(const Image& img, const Vec2& center, double radius,
                                const DetectorParams& params) {
  constexpr int kWin = 19;
  static thread_local std::vector<float> patch(kWin * kWin);

  Mat2 u = Mat2::Identity();
  for (int iter = 0; iter < params.adaptation_iterations; ++iter) {
    for (int j = 0; j < kWin; ++j)
      for (int i = 0; i < kWin; ++i) {
        double qx = (2.0 * (i + 0.5) / kWin - 1.0) * radius;
        double qy = (2.0 * (j + 0.5) / kWin - 1.0) * radius;
        Vec2 p = center + u * Vec2(qx, qy);
        patch[j * kWin + i] = sample_bilinear_clamped(img, p.x(), p.y());
      }
    double sxx = 0, sxy = 0, syy = 0, wsum = 0;
    double gauss_sigma = kWin / 4.0;
    for (int j = 1; j < kWin - 1; ++j)
      for (int i = 1; i < kWin - 1; ++i) {
        double gx = 0.5 * (patch[j * kWin + i + 1] - patch[j * kWin + i - 1]);
        double gy = 0.5 * (patch[(j + 1) * kWin + i] - patch[(j - 1) * kWin + i]);
        double dx = i - (kWin - 1) / 2.0, dy = j - (kWin - 1) / 2.0;
        double w = std::exp(-0.5 * (dx * dx + dy * dy) / (gauss_sigma * gauss_sigma));
        sxx += w * gx * gx;
        sxy += w * gx * gy;
        syy += w * gy * gy;
        wsum += w;
      }
    if (wsum <= 0 || sxx + syy <= 1e-12) return std::nullopt;
    Mat2 smm;
    smm << sxx / wsum, sxy / wsum, sxy / wsum, syy / wsum;
    double update_aniso = 1.0;
    auto step = inv_sqrt_unit_det(smm, update_aniso);
    if (!step) return std::nullopt;
    u = u * (*step);
    u /= std::sqrt(u.determinant());

    Eigen::JacobiSVD<Mat2> svd(u);
    double cond = svd.singularValues()(0) / svd.singularValues()(1);
    if (cond > params.max_condition) return std::nullopt;
    if (update_aniso - 1.0 < params.adaptation_convergence) return u;
  }
  return std::nullopt;
}

std::vector<AffineFrame> run_hessaff(const Image& img, const DetectorParams& params, const SupportGate& gate) {
  std::vector<AffineFrame> frames;
  Pyramid pyr = build_pyramid(img, params.levels_per_octave);
  const int margin = 5;

  for (std::size_t o = 0; o < pyr.octaves.size(); ++o) {
    const auto& g = pyr.octaves[o];
    // Scale-normalized Hessian determinant per level.
    std::vector<Image> resp(g.size());
    for (std::size_t l = 0; l < g.size(); ++l) {
      double s2 = pyr.level_sigma[l] * pyr.level_sigma[l];
      double norm = s2 * s2;
      const Image& im = g[l];
      resp[l] = Image(im.width(), im.height());
      for (int y = 1; y < im.height() - 1; ++y)
        for (int x = 1; x < im.width() - 1; ++x) {
          double dxx = im.at(y, x + 1) + im.at(y, x - 1) - 2.0 * im.at(y, x);
          double dyy = im.at(y + 1, x) + im.at(y - 1, x) - 2.0 * im.at(y, x);
          double dxy = 0.25 * (im.at(y + 1, x + 1) - im.at(y + 1, x - 1) -
                               im.at(y - 1, x + 1) + im.at(y - 1, x - 1));
          resp[l].at(y, x) = static_cast<float>(norm * (dxx * dyy - dxy * dxy));
        }
    }

    double grid = std::ldexp(1.0, static_cast<int>(o));
    for (int l = 1; l <= pyr.levels; ++l) {
      const Image& d = resp[l];
      for (int y = margin; y < d.height() - margin; ++y)
        for (int x = margin; x < d.width() - margin; ++x) {
          if (d.at(y, x) < params.response_threshold) continue;
          if (!is_extremum_3x3x3(resp, l, x, y)) continue;
          auto e = refine_extremum(resp, static_cast<int>(o), l, x, y, margin);
          if (!e || e->value < params.response_threshold) continue;

          double sigma = pyr.abs_sigma(static_cast<int>(o), e->level);
          Vec2 center(e->x * grid, e->y * grid);
          if (!gate.ok(center.x(), center.y(), 2.0 * sigma + 2.0)) continue;

          // Adapt on the lightly smoothed full-resolution image: octave
          // blur levels flatten the very anisotropy the loop measures.
          auto u = adapt_shape(pyr.octaves[0][0], center, 3.0 * sigma, params);
          if (!u) continue;

          AffineFrame f;
          f.center = center;
          f.shape = sigma * (*u);
          f.response = e->value;
          f.tier = DetectorTier::HessAff;
          Eigen::JacobiSVD<Mat2> svd(f.shape);
          if (svd.singularValues()(1) <= 0.5) continue;
          frames.push_back(f);
        }
    }
  }
  rank_and_cap(frames, params.max_features);
  return frames;
}

// ---------------------------------------------------------------------------
// FAST-style corner detector with orientation.

constexpr int kCircle[16][2] = {
    {0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0}, {3, 1}, {2, 2}, {1, 3},
    {0, 3}, {-1, 3}, {-2, 2}, {-3, 1}, {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3}};

float fast_score(const Image& img, int x, int y, float thr) {
  float p = img.at(y, x);
  float d[16];
  for (int i = 0; i < 16; ++i) d[i] = img.at(y + kCircle[i][1], x + kCircle[i][0]) - p;

  // Quick reject: of the 4 compass points at least 3 must deviate one way.
  int nb = 0, nd = 0;
  for (int i : {0, 4, 8, 12}) {
    if (d[i] > thr) ++nb;
    if (d[i] < -thr) ++nd;
  }
  if (nb < 3 && nd < 3) return 0.0f;

  float best = 0.0f;
  for (int start = 0; start < 16; ++start) {
    float mn_b = d[start], mn_d = -d[start];
    for (int k = 1; k < 9; ++k) {
      float v = d[(start + k) % 16];
      mn_b = std::min(mn_b, v);
      mn_d = std::min(mn_d, -v);
    }
    best = std::max(best, std::max(mn_b, mn_d));
  }
  return best;
}

double harris_response(const Image& img, int x, int y) {
  double sxx = 0, sxy = 0, syy = 0;
  for (int dy = -3; dy <= 3; ++dy)
    for (int dx = -3; dx <= 3; ++dx) {
      double gx = 0.5 * (img.at_clamped(y + dy, x + dx + 1) - img.at_clamped(y + dy, x + dx - 1));
      double gy = 0.5 * (img.at_clamped(y + dy + 1, x + dx) - img.at_clamped(y + dy - 1, x + dx));
      sxx += gx * gx;
      sxy += gx * gy;
      syy += gy * gy;
    }
  return sxx * syy - sxy * sxy - 0.04 * (sxx + syy) * (sxx + syy);
}

std::vector<AffineFrame> run_fast(const Image& img, const DetectorParams& params, const SupportGate& gate) {
  constexpr double kFastScale = 5.2;  // circular frame radius, pixels
  std::vector<AffineFrame> frames;
  if (img.width() < 16 || img.height() < 16) return frames;

  float thr = static_cast<float>(params.response_threshold);
  Image score(img.width(), img.height(), 0.0f);
  for (int y = 3; y < img.height() - 3; ++y)
    for (int x = 3; x < img.width() - 3; ++x) score.at(y, x) = fast_score(img, x, y, thr);

  const double support = 2.0 * kFastScale + 2.0;
  for (int y = 3; y < img.height() - 3; ++y)
    for (int x = 3; x < img.width() - 3; ++x) {
      float s = score.at(y, x);
      if (s <= thr) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          float n = score.at(y + dy, x + dx);
          if (n > s || (n == s && (dy < 0 || (dy == 0 && dx < 0)))) {
            is_max = false;
            break;
          }
        }
      if (!is_max) continue;
      if (!gate.ok(x, y, support)) continue;

      // Sub-pixel peak of the corner score.
      auto parabola = [](float lo, float c, float hi) {
        float den = lo - 2.0f * c + hi;
        if (std::abs(den) < 1e-12f) return 0.0;
        return std::clamp(0.5 * (lo - hi) / den, -0.5, 0.5);
      };
      double ox = parabola(score.at(y, x - 1), s, score.at(y, x + 1));
      double oy = parabola(score.at(y - 1, x), s, score.at(y + 1, x));

      // Intensity-centroid orientation over a radius-15 disc.
      double m10 = 0, m01 = 0;
      for (int dy = -15; dy <= 15; ++dy)
        for (int dx = -15; dx <= 15; ++dx) {
          if (dx * dx + dy * dy > 15 * 15) continue;
          double v = img.at_clamped(y + dy, x + dx);
          m10 += dx * v;
          m01 += dy * v;
        }
      double theta = (m10 == 0.0 && m01 == 0.0) ? 0.0 : wrap_angle(std::atan2(m01, m10));

      AffineFrame f;
      f.center = Vec2(x + ox, y + oy);
      Mat2 rot;
      rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
      f.shape = kFastScale * rot;
      f.response = harris_response(img, x, y);
      f.tier = DetectorTier::Fast;
      frames.push_back(f);
    }
  rank_and_cap(frames, params.max_features);
  return frames;
}

}  // namespace

std::vector<AffineFrame> detect_fast(const Image& img, const DetectorParams& params, const Image* valid) {
  if (img.width() < 16 || img.height() < 16) return {};
  return run_fast(img, params, SupportGate(img.width(), img.height(), valid));
}

std::vector<AffineFrame> detect_dog(const Image& img, const DetectorParams& params, const Image* valid) {
  if (img.width() < 32 || img.height() < 32) return {};
  return run_dog(img, params, SupportGate(img.width(), img.height(), valid));
}

std::vector<AffineFrame> detect_hessaff(const Image& img, const DetectorParams& params, const Image* valid) {
  if (img.width() < 32 || img.height() < 32) return {};
  return run_hessaff(img, params, SupportGate(img.width(), img.height(), valid));
}

std::vector<AffineFrame> detect(DetectorTier tier, const Image& img, const DetectorParams& params,
                                const Image* valid) {
  switch (tier) {
    case DetectorTier::Fast: return detect_fast(img, params, valid);
    case DetectorTier::DoG: return detect_dog(img, params, valid);
    case DetectorTier::HessAff: return detect_hessaff(img, params, valid);
  }
  return {};
}

std::vector<AffineFrame> reproject_frames(const std::vector<AffineFrame>& frames, const SynthView& view,
                                          int orig_width, int orig_height) {
  std::vector<AffineFrame> out;
  out.reserve(frames.size());
  for (const AffineFrame& f : frames) {
    AffineFrame r = f;
    r.center = view.back_map.apply(f.center);
    r.shape = view.back_map.a * f.shape;
    if (r.center.x() < 0 || r.center.y() < 0 || r.center.x() >= orig_width || r.center.y() >= orig_height)
      continue;
    out.push_back(r);
  }
  return out;
}

void rank_and_cap(std::vector<AffineFrame>& frames, int cap) {
  std::sort(frames.begin(), frames.end(), [](const AffineFrame& a, const AffineFrame& b) {
    if (a.response != b.response) return a.response > b.response;
    if (a.center.y() != b.center.y()) return a.center.y() < b.center.y();
    return a.center.x() < b.center.x();
  });
  if (cap >= 0 && static_cast<int>(frames.size()) > cap) frames.resize(cap);
}

}  // namespace mods
