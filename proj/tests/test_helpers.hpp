#pragma once

#include <cmath>

#include "perch/geometry.hpp"
#include "perch/rng.hpp"

namespace perch::testing {

inline double max_abs_diff(const Mat3 &a, const Mat3 &b) { return (a - b).cwiseAbs().maxCoeff(); }

inline RigidTransform random_transform(Rng &rng, double max_angle = kPi, double max_t = 2.0) {
  const Vec3 axis = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
  const Mat3 r = Eigen::AngleAxisd(rng.uniform(-max_angle, max_angle), axis).toRotationMatrix();
  return {r, Vec3(rng.uniform(-max_t, max_t), rng.uniform(-max_t, max_t), rng.uniform(-max_t, max_t))};
}

}  // namespace perch::testing
