#pragma once

#include <array>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "perch/camera.hpp"
#include "perch/detector.hpp"
#include "perch/error.hpp"
#include "perch/geometry.hpp"
#include "perch/target.hpp"

namespace perch {

using Homography = Eigen::Matrix3d;
using Residuals = Eigen::Matrix<double, 8, 1>;
using ReprojectionJacobian = Eigen::Matrix<double, 8, 6>;

struct MarkerPoseEstimate {
  int marker_id = 0;
  RigidTransform transform;  // camera <- marker
  Pose4 pose4;
  double reprojection_rmse = 0.0;  // px, after refinement
  double dlt_rmse = 0.0;           // px, linear solution before refinement
  bool refine_converged = true;
};

namespace detail {

// Similarity that centers the points and scales their mean distance to sqrt(2).
inline Mat3 normalizing_transform(const std::array<Vec2, 4> &pts) {
  Vec2 mean = Vec2::Zero();
  for (const auto &p : pts) mean += p;
  mean /= 4.0;
  double dist = 0.0;
  for (const auto &p : pts) dist += (p - mean).norm();
  dist /= 4.0;
  if (!(dist > 1e-15)) throw Error(ErrorCode::kDegenerateConfiguration, "homography: coincident points");
  const double s = std::sqrt(2.0) / dist;
  Mat3 t;
  t << s, 0.0, -s * mean.x(),
       0.0, s, -s * mean.y(),
       0.0, 0.0, 1.0;
  return t;
}

inline void require_no_three_collinear(const std::array<Vec2, 4> &pts, const char *what) {
  double scale = 0.0;
  for (const auto &a : pts)
    for (const auto &b : pts) scale = std::max(scale, (a - b).norm());
  if (!(scale > 0.0)) throw Error(ErrorCode::kDegenerateConfiguration, std::string(what) + ": coincident points");
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      for (int m = j + 1; m < 4; ++m) {
        const Vec2 ab = pts[j] - pts[i];
        const Vec2 ac = pts[m] - pts[i];
        const double area2 = std::abs(ab.x() * ac.y() - ab.y() * ac.x());
        if (area2 < 1e-9 * scale * scale) {
          throw Error(ErrorCode::kDegenerateConfiguration, std::string(what) + ": three collinear points");
        }
      }
    }
  }
}

}  // namespace detail

/// Planar homography H with img ~ H * [obj; 1], from exactly four
/// correspondences via the normalized DLT. Scaled to unit Frobenius norm with
/// the sign chosen so every correspondence has positive homogeneous depth.
inline Homography homography_dlt(const std::array<Vec2, 4> &img, const std::array<Vec2, 4> &obj) {
  detail::require_no_three_collinear(obj, "homography object points");
  detail::require_no_three_collinear(img, "homography image points");

  const Mat3 t_img = detail::normalizing_transform(img);
  const Mat3 t_obj = detail::normalizing_transform(obj);

  Eigen::Matrix<double, 9, 9> a = Eigen::Matrix<double, 9, 9>::Zero();  // 8 rows used
  for (int i = 0; i < 4; ++i) {
    const Vec3 o = t_obj * obj[i].homogeneous();
    const Vec3 p = t_img * img[i].homogeneous();
    const double u = p.x() / p.z();
    const double v = p.y() / p.z();
    const Eigen::RowVector3d ot = o.transpose();
    a.block<1, 3>(2 * i, 0) = ot;
    a.block<1, 3>(2 * i, 6) = -u * ot;
    a.block<1, 3>(2 * i + 1, 3) = ot;
    a.block<1, 3>(2 * i + 1, 6) = -v * ot;
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, 9, 9>> svd(a, Eigen::ComputeFullV);
  const auto &sv = svd.singularValues();
  if (!(sv(7) > 1e-12 * sv(0))) {
    throw Error(ErrorCode::kDegenerateConfiguration, "homography: rank-deficient design matrix");
  }
  const Eigen::Matrix<double, 9, 1> h = svd.matrixV().col(8);
  Homography hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);

  Homography hm = t_img.inverse() * hn * t_obj;
  hm /= hm.norm();
  double depth_sum = 0.0;
  for (const auto &o : obj) depth_sum += hm.row(2).dot(o.homogeneous());
  if (depth_sum < 0.0) hm = -hm;
  return hm;
}

/// Nearest rotation (Frobenius sense) to an arbitrary 3x3 matrix.
inline Mat3 nearest_rotation(const Mat3 &m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

/// Rotation and translation of a z = 0 plane from a homography expressed in
/// normalized camera coordinates.
inline RigidTransform pose_from_homography(const Homography &h) {
  const Vec3 h1 = h.col(0);
  const Vec3 h2 = h.col(1);
  const Vec3 h3 = h.col(2);
  const double n1 = h1.norm();
  const double n2 = h2.norm();
  if (n1 < 1e-12 || n2 < 1e-12) throw Error(ErrorCode::kDegenerateConfiguration, "pose_from_homography: degenerate columns");

  const double lambda = 2.0 / (n1 + n2);
  Vec3 r1 = lambda * h1;
  Vec3 r2 = lambda * h2;
  Vec3 t = lambda * h3;
  if (t.z() < 0.0) {
    r1 = -r1;
    r2 = -r2;
    t = -t;
  }
  Mat3 r;
  r.col(0) = r1;
  r.col(1) = r2;
  r.col(2) = r1.cross(r2);
  return {nearest_rotation(r), t};
}

/// Stacked pixel residuals project(R p_i + t) - img_i, ordered (u0, v0, u1, ...).
inline Residuals reprojection_residuals(const RigidTransform &pose, const std::array<PixelPoint, 4> &img,
                                        const std::array<Vec3, 4> &obj, const Intrinsics &k) {
  Residuals r;
  for (int i = 0; i < 4; ++i) {
    const PixelPoint p = project(pose.apply(obj[i]), k);
    r(2 * i) = p.u - img[i].u;
    r(2 * i + 1) = p.v - img[i].v;
  }
  return r;
}

inline double reprojection_rmse(const RigidTransform &pose, const std::array<PixelPoint, 4> &img,
                                const std::array<Vec3, 4> &obj, const Intrinsics &k) {
  return std::sqrt(reprojection_residuals(pose, img, obj, k).squaredNorm() / 4.0);
}

/// Jacobian of the residuals with respect to a left perturbation
/// (R, t) -> (exp(w) R, t + dt), parameter order (w, dt).
inline ReprojectionJacobian reprojection_jacobian(const RigidTransform &pose, const std::array<Vec3, 4> &obj,
                                                  const Intrinsics &k) {
  ReprojectionJacobian j;
  for (int i = 0; i < 4; ++i) {
    const Vec3 rp = pose.rotation * obj[i];
    const Vec3 pc = rp + pose.translation;
    const double iz = 1.0 / pc.z();
    const double xn = pc.x() * iz;
    const double yn = pc.y() * iz;
    const double r2 = xn * xn + yn * yn;
    const double d = 1.0 + k.k1 * r2 + k.k2 * r2 * r2;
    const double dd = k.k1 + 2.0 * k.k2 * r2;  // d(d)/d(r2)

    // d(distorted normalized)/d(xn, yn)
    Eigen::Matrix2d ddist;
    ddist << d + 2.0 * xn * xn * dd, 2.0 * xn * yn * dd,
             2.0 * xn * yn * dd, d + 2.0 * yn * yn * dd;
    Eigen::Matrix<double, 2, 3> dnorm;
    dnorm << iz, 0.0, -xn * iz,
             0.0, iz, -yn * iz;
    Eigen::Matrix<double, 2, 3> dpix = Eigen::Vector2d(k.fx, k.fy).asDiagonal() * ddist * dnorm;

    j.block<2, 3>(2 * i, 0) = -dpix * skew(rp);
    j.block<2, 3>(2 * i, 3) = dpix;
  }
  return j;
}

struct RefineResult {
  RigidTransform pose;
  bool converged = false;
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
};

/// Gauss-Newton on the summed squared reprojection error. Steps that would
/// raise the cost are halved; the final cost never exceeds the initial one.
inline RefineResult refine_pose(const RigidTransform &init, const std::array<PixelPoint, 4> &img,
                                const std::array<Vec3, 4> &obj, const Intrinsics &k, int max_iterations = 50) {
  RefineResult out{init, false, 0, 0.0, 0.0};
  auto cost_of = [&](const RigidTransform &p) -> double {
    for (const auto &o : obj) {
      if (!(p.apply(o).z() > 1e-6)) return std::numeric_limits<double>::infinity();
    }
    return reprojection_residuals(p, img, obj, k).squaredNorm();
  };
  out.initial_cost = cost_of(init);
  out.final_cost = out.initial_cost;
  if (!std::isfinite(out.initial_cost)) return out;

  RigidTransform cur = init;
  double cost = out.initial_cost;
  for (int it = 0; it < max_iterations; ++it) {
    out.iterations = it + 1;
    const Residuals r = reprojection_residuals(cur, img, obj, k);
    const ReprojectionJacobian j = reprojection_jacobian(cur, obj, k);
    const Eigen::Matrix<double, 6, 6> jtj = j.transpose() * j;
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> eig(jtj, Eigen::EigenvaluesOnly);
    const Eigen::LDLT<Eigen::Matrix<double, 6, 6>> ldlt(jtj);
    const double ev_max = eig.eigenvalues().maxCoeff();
    if (eig.info() != Eigen::Success || ldlt.info() != Eigen::Success || !(ev_max > 0.0) ||
        !(eig.eigenvalues().minCoeff() > 1e-14 * ev_max)) {
      // Singular normal matrix: hand back the seed, flagged.
      out.pose = init;
      out.final_cost = out.initial_cost;
      out.converged = false;
      return out;
    }
    Eigen::Matrix<double, 6, 1> step = -ldlt.solve(j.transpose() * r);

    bool accepted = false;
    for (int halvings = 0; halvings < 30; ++halvings) {
      const RigidTransform cand{exp_so3(step.head<3>()) * cur.rotation, cur.translation + step.tail<3>()};
      const double c = cost_of(cand);
      if (c <= cost) {
        cur = cand;
        cost = c;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || step.norm() < 1e-10) {
      out.converged = true;
      break;
    }
  }
  out.pose = cur;
  out.final_cost = cost;
  return out;
}

/// The planar mirror candidate: the target normal reflected about the line of
/// sight to the target origin, translation kept.
inline RigidTransform mirror_candidate(const RigidTransform &pose) {
  const Vec3 v = pose.translation.normalized();
  const Vec3 n = pose.rotation.col(2);
  const Vec3 n_ref = 2.0 * v.dot(n) * v - n;
  const Eigen::Quaterniond q = Eigen::Quaterniond::FromTwoVectors(n, n_ref);
  return {q.toRotationMatrix() * pose.rotation, pose.translation};
}

/// Full single-marker pose pipeline: undistort, DLT, decompose, refine, and
/// resolve the planar two-fold ambiguity.
inline MarkerPoseEstimate solve_marker_pose(const MarkerDetection &det, const PerchingTarget &target,
                                            const Intrinsics &k) {
  const auto spec = marker_by_id(target, det.marker_id);
  if (!spec) throw Error(ErrorCode::kNotFound, "solve_marker_pose: unknown marker id " + std::to_string(det.marker_id));

  std::array<Vec2, 4> img_n{};
  std::array<Vec2, 4> obj2{};
  for (int i = 0; i < 4; ++i) {
    img_n[i] = unproject_normalized(det.corners[i], k);
    obj2[i] = spec->corner_points[i].head<2>();
  }
  const RigidTransform seed = pose_from_homography(homography_dlt(img_n, obj2));
  const auto &obj = spec->corner_points;

  MarkerPoseEstimate est;
  est.marker_id = det.marker_id;
  est.dlt_rmse = reprojection_rmse(seed, det.corners, obj, k);

  RefineResult best = refine_pose(seed, det.corners, obj, k);

  // Only refine the mirror when its seed cost is within 10% of the primary's.
  const RigidTransform alt = mirror_candidate(seed);
  bool alt_valid = true;
  for (const auto &o : obj) alt_valid = alt_valid && alt.apply(o).z() > 1e-6;
  if (alt_valid) {
    const double c_seed = reprojection_residuals(seed, det.corners, obj, k).squaredNorm();
    const double c_alt = reprojection_residuals(alt, det.corners, obj, k).squaredNorm();
    const double hi = std::max(c_seed, c_alt);
    const bool close = hi < 1e-18 || std::abs(c_seed - c_alt) < 0.1 * hi;
    if (close) {
      const RefineResult other = refine_pose(alt, det.corners, obj, k);
      if (other.final_cost < best.final_cost) best = other;
    }
  }

  est.transform = best.pose;
  est.refine_converged = best.converged;
  est.reprojection_rmse = std::sqrt(best.final_cost / 4.0);
  est.pose4 = pose4_from_transform(est.transform);
  return est;
}

}  // namespace perch
