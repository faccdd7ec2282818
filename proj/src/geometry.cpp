#include "mods/geometry.hpp"

#include <cmath>

namespace mods {

Mat2 AffineDecomposition::compose() const {
  Mat2 r1, r2, t;
  r1 << std::cos(psi), -std::sin(psi), std::sin(psi), std::cos(psi);
  r2 << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
  t << tilt, 0.0, 0.0, 1.0;
  return lambda * r1 * t * r2;
}

Mat3 TurntableCamera::intrinsics() const {
  Mat3 k = Mat3::Zero();
  k(0, 0) = m * f / fr_x;
  k(1, 1) = n * f / fr_y;
  k(0, 2) = m / 2.0;
  k(1, 2) = n / 2.0;
  k(2, 2) = 1.0;
  return k;
}

Mat3 canonicalize(const Mat3& m) {
  double norm = m.norm();
  if (norm == 0.0) return m;
  Mat3 out = m / norm;
  int r = 0, c = 0;
  out.cwiseAbs().maxCoeff(&r, &c);
  if (out(r, c) < 0) out = -out;
  return out;
}

AffineDecomposition decompose_affine(const Mat2& a) {
  double det = a.determinant();
  if (std::abs(det) < 1e-12) fail(ErrorCode::SingularMatrix, "decompose_affine: |det| < 1e-12");
  if (det < 0) fail(ErrorCode::MirrorMatrix, "decompose_affine: det < 0, mirror not representable");

  Eigen::JacobiSVD<Mat2> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat2 u = svd.matrixU();
  Mat2 v = svd.matrixV();
  double s1 = svd.singularValues()(0);
  double s2 = svd.singularValues()(1);

  // det(A) > 0 means det(U)*det(V) = +1: flip the second columns of both to
  // land on proper rotations without disturbing the product.
  if (u.determinant() < 0) {
    u.col(1) = -u.col(1);
    v.col(1) = -v.col(1);
  }

  AffineDecomposition d;
  d.lambda = s2;
  d.tilt = s1 / s2;

  if (d.tilt - 1.0 < 1e-9) {
    // Isotropic case: phi is unidentifiable, fold everything into psi.
    Mat2 rot = u * v.transpose();
    d.tilt = 1.0;
    d.phi = 0.0;
    d.psi = wrap_angle(std::atan2(rot(1, 0), rot(0, 0)));
  } else {
    double psi = std::atan2(u(1, 0), u(0, 0));
    double phi = std::atan2(v(0, 1), v(0, 0));  // angle of R2 = V^T
    // R(pi) = -I commutes with diag(t,1), so a half-turn can be moved
    // from R2 into R1 to land phi in [0, pi).
    if (phi < 0) {
      phi += kPi;
      psi += kPi;
    }
    if (phi >= kPi) {
      phi -= kPi;
      psi += kPi;
    }
    d.phi = phi;
    d.psi = wrap_angle(psi);
  }
  d.latitude = latitude_of_tilt(d.tilt);
  return d;
}

double latitude_of_tilt(double t) {
  if (t < 1.0) fail(ErrorCode::DomainError, "latitude_of_tilt: t < 1");
  return std::acos(1.0 / t);
}

Mat2 homography_jacobian(const Mat3& h, const Vec2& p) {
  double den = h(2, 0) * p.x() + h(2, 1) * p.y() + h(2, 2);
  if (std::abs(den) < 1e-15) fail(ErrorCode::DegenerateJacobian, "homography_jacobian: point maps to infinity");
  double num1 = h(0, 0) * p.x() + h(0, 1) * p.y() + h(0, 2);
  double num2 = h(1, 0) * p.x() + h(1, 1) * p.y() + h(1, 2);
  double den2 = den * den;
  Mat2 j;
  j(0, 0) = h(0, 0) / den - num1 * h(2, 0) / den2;
  j(0, 1) = h(0, 1) / den - num1 * h(2, 1) / den2;
  j(1, 0) = h(1, 0) / den - num2 * h(2, 0) / den2;
  j(1, 1) = h(1, 1) / den - num2 * h(2, 1) / den2;
  return j;
}

double transition_tilt(const Mat3& h, const Vec2& p) {
  Mat2 j = homography_jacobian(h, p);
  Eigen::JacobiSVD<Mat2> svd(j);
  double s1 = svd.singularValues()(0);
  double s2 = svd.singularValues()(1);
  if (s2 < 1e-12 * std::max(1.0, s1)) fail(ErrorCode::DegenerateJacobian, "transition_tilt: singular Jacobian");
  return s1 / s2;
}

double sym_epipolar_error(const Mat3& f, const Vec2& u, const Vec2& v) {
  Vec3 uh(u.x(), u.y(), 1.0);
  Vec3 vh(v.x(), v.y(), 1.0);
  Vec3 fu = f * uh;
  Vec3 ftv = f.transpose() * vh;
  double n1 = fu(0) * fu(0) + fu(1) * fu(1);
  double n2 = ftv(0) * ftv(0) + ftv(1) * ftv(1);
  if (n1 == 0.0 && n2 == 0.0) fail(ErrorCode::ZeroLine, "sym_epipolar_error: both epipolar lines degenerate");
  double s = vh.dot(fu);
  if (s == 0.0) return 0.0;
  return s * s * (1.0 / n1 + 1.0 / n2);
}

GeometryModel turntable_fundamental(const TurntableCamera& cam) {
  if (cam.phi == 0.0) fail(ErrorCode::DegenerateMotion, "turntable_fundamental: phi == 0 gives zero baseline");
  Mat3 k = cam.intrinsics();
  Mat3 r;
  r << std::cos(cam.phi), 0.0, -std::sin(cam.phi),
       0.0, 1.0, 0.0,
       std::sin(cam.phi), 0.0, std::cos(cam.phi);
  Vec3 t = cam.r * Vec3(std::sin(cam.phi), 0.0, 1.0 - std::cos(cam.phi));

  Vec3 e = k * r.transpose() * t;
  Mat3 ex;
  ex << 0.0, -e(2), e(1),
        e(2), 0.0, -e(0),
        -e(1), e(0), 0.0;
  Mat3 f = k.inverse().transpose() * r * k.transpose() * ex;

  GeometryModel model;
  model.kind = ModelKind::Fundamental;
  model.matrix = canonicalize(f);
  return model;
}

}  // namespace mods
