#pragma once

#include <vector>

#include "mods/core.hpp"

namespace mods {

/// Factors of A = lambda * R(psi) * diag(tilt, 1) * R(phi).
struct AffineDecomposition {
  double lambda = 1.0;    // uniform scale, > 0
  double psi = 0.0;       // camera roll, [0, 2*pi)
  double tilt = 1.0;      // absolute tilt, >= 1
  double phi = 0.0;       // longitude, [0, pi)
  double latitude = 0.0;  // arccos(1/tilt), derived

  Mat2 compose() const;
};

enum class ModelKind { Homography, Fundamental };

/// A 3x3 two-view model with its supporting correspondences.
/// The matrix is kept at unit Frobenius norm with the largest-magnitude
/// entry positive so that model comparisons are well defined.
struct GeometryModel {
  ModelKind kind = ModelKind::Homography;
  Mat3 matrix = Mat3::Identity();
  std::vector<int> inliers;       // indices into the correspondence list
  std::vector<double> residuals;  // per-inlier, pixels
};

/// Turntable rig description; all quantities positive, phi in radians.
struct TurntableCamera {
  double f = 1.0;        // focal length
  double fr_x = 1.0;     // focal plane resolution, x
  double fr_y = 1.0;     // focal plane resolution, y
  double m = 0.0;        // sensor width, pixels
  double n = 0.0;        // sensor height, pixels
  double r = 1.0;        // camera-to-object distance
  double phi = 0.0;      // viewpoint angle difference

  Mat3 intrinsics() const;
};

/// Scales M to unit Frobenius norm and flips the sign so the
/// largest-magnitude entry is positive.
Mat3 canonicalize(const Mat3& m);

/// SVD factorization of a nonsingular, orientation-preserving 2x2 map.
/// Throws SingularMatrix / MirrorMatrix.
AffineDecomposition decompose_affine(const Mat2& a);

/// arccos(1/t); DomainError for t < 1.
double latitude_of_tilt(double t);

/// Tilt (ratio of singular values) of the homography Jacobian at p.
/// Throws DegenerateJacobian when the local map is singular.
double transition_tilt(const Mat3& h, const Vec2& p);

/// Local 2x2 linearization of a homography at p.
Mat2 homography_jacobian(const Mat3& h, const Vec2& p);

/// Symmetric epipolar error in squared pixels for pixel points u, v
/// (implicit homogeneous 1). Invariant to rescaling f. Throws ZeroLine when
/// both epipolar lines are degenerate.
double sym_epipolar_error(const Mat3& f, const Vec2& u, const Vec2& v);

/// Ground-truth fundamental matrix of a turntable view pair.
/// Throws DegenerateMotion when phi == 0 (zero baseline).
GeometryModel turntable_fundamental(const TurntableCamera& cam);

}  // namespace mods
