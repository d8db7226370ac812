#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "perch/error.hpp"

namespace perch {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Reduces an angle to (-pi, pi].
inline double wrap_angle(double theta) {
  if (!std::isfinite(theta)) {
    throw Error(ErrorCode::kInvalidArgument, "wrap_angle: non-finite angle");
  }
  if (theta > -kPi && theta <= kPi) return theta;
  double r = std::remainder(theta, 2.0 * kPi);  // [-pi, pi]
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

inline Mat3 rot_x(double a) { return Eigen::AngleAxisd(a, Vec3::UnitX()).toRotationMatrix(); }
inline Mat3 rot_y(double a) { return Eigen::AngleAxisd(a, Vec3::UnitY()).toRotationMatrix(); }
inline Mat3 rot_z(double a) { return Eigen::AngleAxisd(a, Vec3::UnitZ()).toRotationMatrix(); }

/// R = Rz(yaw) * Ry(pitch) * Rx(roll).
inline Mat3 rotation_from_ypr(double yaw, double pitch, double roll) {
  return rot_z(yaw) * rot_y(pitch) * rot_x(roll);
}

/// Yaw (rotation about z) under the ZYX Euler convention. Throws on gimbal lock.
inline double yaw_from_rotation(const Mat3 &r) {
  if (std::abs(r(2, 0)) > 1.0 - 1e-9) {
    throw Error(ErrorCode::kDegenerateOrientation, "yaw_from_rotation: pitch at +-90 deg");
  }
  return std::atan2(r(1, 0), r(0, 0));
}

/// Rotation + translation taking points from a source frame into a
/// destination frame: p_dst = rotation * p_src + translation.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }

  Vec3 apply(const Vec3 &p) const { return rotation * p + translation; }
};

inline RigidTransform compose(const RigidTransform &a, const RigidTransform &b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

inline RigidTransform invert(const RigidTransform &t) {
  const Mat3 rt = t.rotation.transpose();
  return {rt, -(rt * t.translation)};
}

/// True when the rotation block is orthonormal with det +1 to within `tol`.
inline bool is_valid_rotation(const Mat3 &r, double tol = 1e-9) {
  const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho < tol && std::abs(r.determinant() - 1.0) <= tol;
}

/// Rodrigues map from a rotation vector to a rotation matrix.
inline Mat3 exp_so3(const Vec3 &omega) {
  const double angle = omega.norm();
  if (angle < 1e-300) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix();
}

inline Mat3 skew(const Vec3 &v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

/// 4-DOF relative pose: translation (m) and yaw (rad).
struct Pose4 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double yaw = 0.0;

  friend bool operator==(const Pose4 &, const Pose4 &) = default;
};

/// Extracts (t, yaw) from a transform. Yaw is the ZYX yaw of the rotation.
inline Pose4 pose4_from_transform(const RigidTransform &t) {
  return {t.translation.x(), t.translation.y(), t.translation.z(),
          yaw_from_rotation(t.rotation)};
}

/// Transform with rotation Rz(yaw) and the pose's translation.
inline RigidTransform transform_from_pose4(const Pose4 &p) {
  return {rot_z(p.yaw), Vec3(p.x, p.y, p.z)};
}

}  // namespace perch
