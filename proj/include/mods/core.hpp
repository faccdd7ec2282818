#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace mods {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat23 = Eigen::Matrix<double, 2, 3>;

enum class ErrorCode {
  SingularMatrix,
  MirrorMatrix,
  DomainError,
  ZeroLine,
  DegenerateJacobian,
  DegenerateMotion,
  EmptyOutput,
  KindMismatch,
  InsufficientCorrespondences,
  ImageTooSmall,
  MissingGroundTruth,
  IoError,
  InvalidConfig,
};

struct Error : std::runtime_error {
  ErrorCode code;
  Error(ErrorCode c, const std::string& what) : std::runtime_error(what), code(c) {}
};

[[noreturn]] inline void fail(ErrorCode c, const std::string& what) { throw Error(c, what); }

constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

/// Wraps an angle into [0, 2*pi).
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a < 0) a += 2.0 * kPi;
  // fmod of a tiny negative can round back up to 2*pi
  if (a >= 2.0 * kPi) a = 0.0;
  return a;
}

}  // namespace mods
