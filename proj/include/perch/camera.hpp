#pragma once

#include <algorithm>
#include <cmath>

#include "perch/error.hpp"
#include "perch/geometry.hpp"

namespace perch {

/// Pinhole intrinsics with two radial distortion terms.
struct Intrinsics {
  double fx = 460.0;
  double fy = 460.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;
  double k1 = 0.0;
  double k2 = 0.0;

  void validate() const {
    if (!(fx > 0.0 && fy > 0.0)) throw Error(ErrorCode::kInvalidArgument, "intrinsics: focal lengths must be positive");
    if (width <= 0 || height <= 0) throw Error(ErrorCode::kInvalidArgument, "intrinsics: image size must be positive");
    if (!(cx >= 0.0 && cx <= width && cy >= 0.0 && cy <= height)) {
      throw Error(ErrorCode::kInvalidArgument, "intrinsics: principal point outside the image");
    }
    if (!std::isfinite(k1) || !std::isfinite(k2)) throw Error(ErrorCode::kInvalidArgument, "intrinsics: non-finite distortion");
  }

  /// Mean focal length, used for apparent-size reasoning.
  double mean_focal() const { return 0.5 * (fx + fy); }
};

struct PixelPoint {
  double u = 0.0;
  double v = 0.0;
};

namespace detail {
inline double radial_factor(double r2, const Intrinsics &k) {
  return 1.0 + k.k1 * r2 + k.k2 * r2 * r2;
}
}  // namespace detail

/// Applies radial distortion to normalized image coordinates.
inline Vec2 distort_normalized(const Vec2 &xn, const Intrinsics &k) {
  return xn * detail::radial_factor(xn.squaredNorm(), k);
}

inline PixelPoint project(const Vec3 &p, const Intrinsics &k) {
  if (!(p.z() > 1e-6)) throw Error(ErrorCode::kBehindCamera, "project: point at or behind the camera");
  const Vec2 xd = distort_normalized(Vec2(p.x() / p.z(), p.y() / p.z()), k);
  return {k.fx * xd.x() + k.cx, k.fy * xd.y() + k.cy};
}

/// Normalized image coordinates of a pixel with radial distortion removed.
/// The distorted radius r_d = r (1 + k1 r^2 + k2 r^4) is inverted with a
/// Newton fixed-point iteration on r (at most 20 iterations, 1e-10 tolerance).
inline Vec2 unproject_normalized(const PixelPoint &px, const Intrinsics &k) {
  if (!std::isfinite(px.u) || !std::isfinite(px.v)) {
    throw Error(ErrorCode::kInvalidArgument, "unproject_normalized: non-finite pixel");
  }
  const Vec2 xd((px.u - k.cx) / k.fx, (px.v - k.cy) / k.fy);
  const double rd = xd.norm();
  if ((k.k1 == 0.0 && k.k2 == 0.0) || rd == 0.0) return xd;

  double r = rd;
  for (int i = 0; i < 20; ++i) {
    const double r2 = r * r;
    const double f = r * detail::radial_factor(r2, k) - rd;
    const double df = 1.0 + 3.0 * k.k1 * r2 + 5.0 * k.k2 * r2 * r2;
    if (!(df > 0.0)) break;  // distortion not monotonic here
    const double step = f / df;
    r -= step;
    if (std::abs(step) < 1e-10 * std::max(1.0, r)) return xd * (r / rd);
  }
  throw Error(ErrorCode::kDistortionInversion, "unproject_normalized: iteration did not converge");
}

/// Half-open image bounds: 0 <= u < width, 0 <= v < height.
inline bool in_field_of_view(const PixelPoint &px, const Intrinsics &k) {
  return px.u >= 0.0 && px.u < k.width && px.v >= 0.0 && px.v < k.height;
}

}  // namespace perch
