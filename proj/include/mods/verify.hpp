#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mods/core.hpp"
#include "mods/geometry.hpp"
#include "mods/matching.hpp"

namespace mods {

struct RansacConfig {
  double h_inlier_threshold_px = 2.0;  // symmetric transfer, pixels
  double f_inlier_threshold_px = 1.0;  // Sampson, pixel scale
  double confidence = 0.999;
  int max_iterations = 10000;
  int lo_refit_rounds = 3;
  std::uint64_t rng_seed = 0x5eedu;    // fixed by default: runs are reproducible
  double degeneracy_h_fraction = 0.8;  // F inliers explained by an H -> report H
  double laf_threshold_factor = 2.0;   // extremal points get a looser gate

  void validate() const;
};

struct VerifiedResult {
  GeometryModel model;
  std::vector<int> inliers_after_laf;  // subset of model.inliers
  int discarded_by_laf = 0;
};

/// Symmetric transfer distance in pixels (max of the two directions).
double homography_transfer_error(const Mat3& h, const Vec2& u, const Vec2& v);

/// Sampson distance in pixels.
double sampson_error(const Mat3& f, const Vec2& u, const Vec2& v);

/// LO-RANSAC with a 4-point DLT minimal solver and least-squares refits that
/// never lose support. Returns nullopt when no model reaches 4 inliers.
/// Throws InsufficientCorrespondences below 4 input correspondences.
std::optional<GeometryModel> estimate_homography(const std::vector<TentativeCorrespondence>& tcs,
                                                 const RansacConfig& cfg);

/// LO-RANSAC with the 7-point minimal solver, rank-2 enforcement and Sampson
/// scoring. Throws below 7 input correspondences.
std::optional<GeometryModel> estimate_fundamental(const std::vector<TentativeCorrespondence>& tcs,
                                                  const RansacConfig& cfg);

/// Estimates F and degrades to the homography fitted on F's inliers when it
/// explains at least `degeneracy_h_fraction` of them; 4..6 correspondences
/// fall back to homography-only estimation.
std::optional<GeometryModel> auto_model(const std::vector<TentativeCorrespondence>& tcs,
                                        const RansacConfig& cfg);

/// Re-checks every model inlier with the extremal points of its local affine
/// frames: both frames sample the same unit-circle parameters, and the
/// transferred points must agree within laf_threshold_factor times the point
/// threshold (point-to-epipolar-line distance for F).
VerifiedResult laf_check(const std::vector<TentativeCorrespondence>& tcs, const GeometryModel& model,
                         const RansacConfig& cfg);

}  // namespace mods
