#pragma once

#include <vector>

#include "mods/core.hpp"
#include "mods/imgproc.hpp"

namespace mods {

/// View-sphere sampling for one synthesis pass.
struct SynthesisConfig {
  std::vector<double> scales = {1.0};   // each in (0, 1]
  std::vector<double> tilts = {1.0};    // each >= 1
  double delta_phi_base_deg = 360.0;    // longitude step at tilt 1, (0, 360]
  double sigma_base = kSigmaBase;

  void validate() const;  // throws InvalidConfig
};

struct ViewParams {
  double scale = 1.0;
  double tilt = 1.0;
  double phi_deg = 0.0;

  bool operator==(const ViewParams&) const = default;
};

/// A warped copy of an image together with the exact map back to it.
struct SynthView {
  Image image;
  Image mask;               // 1 where the view shows source content
  ImageTransform back_map;  // view pixel coords -> original image coords
  ViewParams params;
};

/// All (S, t, phi) triples of a config: ascending S, then t, then phi;
/// t = 1 contributes phi = 0 only, otherwise phi steps by delta_phi_base/t
/// over [0, 360).
std::vector<ViewParams> enumerate_views(const SynthesisConfig& cfg);

/// One view per enumerated triple. The (S=1, t=1, phi=0) view is the
/// untouched input; tilted views get the anisotropic anti-alias filter
/// (t*sigma_base along the to-be-shrunk direction) before a single fused
/// rotate+shrink resampling.
std::vector<SynthView> synthesize(const Image& img, const SynthesisConfig& cfg);

/// Builds the single view for the given triple (same contract as above).
SynthView synthesize_view(const Image& img, const SynthesisConfig& cfg, const ViewParams& params);

/// Sum over views of S^2 * (1/t) * W * H of the source: the synthesized area
/// that downstream detection cost tracks.
double synthesized_area(const Image& img, const SynthesisConfig& cfg);

}  // namespace mods
