#pragma once

#include <vector>

#include "mods/core.hpp"
#include "mods/imgproc.hpp"
#include "mods/synth.hpp"

namespace mods {

enum class DetectorTier { Fast, DoG, HessAff };

const char* tier_name(DetectorTier t);

/// An oriented local feature. `shape` maps the unit circle to the
/// measurement ellipse; its singular values are the ellipse semi-axes.
struct AffineFrame {
  Vec2 center = Vec2::Zero();   // pixels
  Mat2 shape = Mat2::Identity();
  double response = 0.0;
  DetectorTier tier = DetectorTier::Fast;
  int view_id = -1;

  double scale() const { return std::sqrt(std::abs(shape.determinant())); }

  /// Rotation-free ellipse matrix shape * shape^T; two frames describe the
  /// same measurement region iff these agree.
  Mat2 frame_cov() const { return shape * shape.transpose(); }
};

struct DetectorParams {
  double response_threshold = 0.0;  // tier-specific, see defaults below
  int max_features = 3000;          // per-view cap, response-ranked
  int levels_per_octave = 3;        // scale-space sampling density
  int adaptation_iterations = 16;   // affine adaptation cap
  double adaptation_convergence = 0.05;  // eccentricity update tolerance
  double max_condition = 20.0;      // adapted shapes beyond this are dropped

  static DetectorParams fast_defaults();
  static DetectorParams dog_defaults();
  static DetectorParams hessaff_defaults();
  static DetectorParams defaults_for(DetectorTier tier);
};

/// Segment-test corners with Harris re-ranking and intensity-centroid
/// orientation; frames are circular with the orientation folded into shape.
/// `valid` (optional) marks usable view pixels; candidates whose support
/// window touches invalid area are dropped.
std::vector<AffineFrame> detect_fast(const Image& img, const DetectorParams& params,
                                     const Image* valid = nullptr);

/// Difference-of-Gaussians scale-space extrema with sub-pixel refinement and
/// edge rejection; circular frames with radius equal to the detected sigma.
std::vector<AffineFrame> detect_dog(const Image& img, const DetectorParams& params,
                                    const Image* valid = nullptr);

/// Hessian-determinant extrema followed by second-moment-matrix affine
/// adaptation; frames that fail to converge are dropped.
std::vector<AffineFrame> detect_hessaff(const Image& img, const DetectorParams& params,
                                        const Image* valid = nullptr);

std::vector<AffineFrame> detect(DetectorTier tier, const Image& img, const DetectorParams& params,
                                const Image* valid = nullptr);

/// Maps frames detected in `view` back to original-image coordinates.
/// Frames whose center lands outside [0,w)x[0,h) of the original are dropped.
std::vector<AffineFrame> reproject_frames(const std::vector<AffineFrame>& frames, const SynthView& view,
                                          int orig_width, int orig_height);

/// Response-descending order with a stable (y, x) tie-break, truncated to cap.
void rank_and_cap(std::vector<AffineFrame>& frames, int cap);

}  // namespace mods
