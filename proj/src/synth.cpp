#include "mods/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace mods {

namespace {

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

void SynthesisConfig::validate() const {
  if (scales.empty() || tilts.empty()) fail(ErrorCode::InvalidConfig, "synthesis: empty scale or tilt set");
  for (double s : scales)
    if (!(s > 0.0) || s > 1.0) fail(ErrorCode::InvalidConfig, "synthesis: scale outside (0, 1]");
  for (double t : tilts)
    if (!(t >= 1.0)) fail(ErrorCode::InvalidConfig, "synthesis: tilt below 1");
  if (!(delta_phi_base_deg > 0.0) || delta_phi_base_deg > 360.0)
    fail(ErrorCode::InvalidConfig, "synthesis: delta_phi_base outside (0, 360]");
  if (!(sigma_base > 0.0)) fail(ErrorCode::InvalidConfig, "synthesis: sigma_base must be positive");
}

std::vector<ViewParams> enumerate_views(const SynthesisConfig& cfg) {
  cfg.validate();
  std::vector<ViewParams> out;
  for (double s : sorted_unique(cfg.scales)) {
    for (double t : sorted_unique(cfg.tilts)) {
      if (t == 1.0) {
        out.push_back({s, t, 0.0});
        continue;
      }
      double step = cfg.delta_phi_base_deg / t;
      int count = static_cast<int>(std::ceil(360.0 / step - 1e-9));
      for (int k = 0; k < count; ++k) out.push_back({s, t, k * step});
    }
  }
  return out;
}

SynthView synthesize_view(const Image& img, const SynthesisConfig& cfg, const ViewParams& p) {
  SynthView view;
  view.params = p;

  const bool unit_scale = p.scale == 1.0;
  Image base;
  ImageTransform scale_back;  // scaled coords -> original coords
  if (unit_scale) {
    base = img;
    scale_back = ImageTransform::identity();
  } else {
    base = downsample(img, p.scale, cfg.sigma_base);
    scale_back.a = Mat2::Identity() / p.scale;
    double off = 0.5 / p.scale - 0.5;
    scale_back.b = Vec2(off, off);
  }

  if (p.tilt == 1.0 && p.phi_deg == 0.0) {
    view.image = std::move(base);
    view.mask = Image(view.image.width(), view.image.height(), 1.0f);
    view.back_map = scale_back;
    return view;
  }

  double phi = deg2rad(p.phi_deg);
  // The source direction that the fused warp compresses is the one the
  // rotation carries onto the x axis; anti-alias along it before warping.
  Image filtered = oriented_gaussian_blur(base, p.tilt * cfg.sigma_base, cfg.sigma_base, -phi);

  ImageTransform warp;
  Mat2 rot;
  rot << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
  Mat2 shrink = Mat2::Identity();
  shrink(0, 0) = 1.0 / p.tilt;
  warp.a = shrink * rot;

  WarpResult warped = warp_affine(filtered, warp);
  view.image = std::move(warped.image);
  view.mask = std::move(warped.mask);
  view.back_map = compose(scale_back, warped.inverse);
  return view;
}

std::vector<SynthView> synthesize(const Image& img, const SynthesisConfig& cfg) {
  std::vector<ViewParams> params = enumerate_views(cfg);
  std::vector<SynthView> views(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) views[i] = synthesize_view(img, cfg, params[i]);
  return views;
}

double synthesized_area(const Image& img, const SynthesisConfig& cfg) {
  double area = 0.0;
  double base = static_cast<double>(img.width()) * img.height();
  for (const auto& p : enumerate_views(cfg)) area += base * p.scale * p.scale / p.tilt;
  return area;
}

}  // namespace mods
