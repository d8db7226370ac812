#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "perch/error.hpp"
#include "perch/geometry.hpp"

namespace perch {

enum class Stage { kNone, kS1, kS2, kS3 };

inline const char *to_string(Stage s) {
  switch (s) {
    case Stage::kNone: return "none";
    case Stage::kS1: return "S1";
    case Stage::kS2: return "S2";
    case Stage::kS3: return "S3";
  }
  return "?";
}

/// Blend weights of the large-marker pose; the small marker gets 1 - sigma.
struct SigmaSet {
  double x = 0.275;
  double y = 0.306;
  double z = 0.728;
  double psi = 0.469;

  void validate() const {
    for (double v : {x, y, z, psi}) {
      if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "sigma values must lie in [0, 1]");
    }
  }
};

struct FusedPose {
  Pose4 pose;
  Stage stage = Stage::kNone;
  std::vector<int> sources;
};

inline Stage select_stage(bool large_available, bool small_available) {
  if (large_available && small_available) return Stage::kS2;
  if (large_available) return Stage::kS1;
  if (small_available) return Stage::kS3;
  return Stage::kNone;
}

/// 4x8 blending matrix acting on (x1, x2, y1, y2, z1, z2, psi1, psi2).
inline Eigen::Matrix<double, 4, 8> blend_matrix(const SigmaSet &s) {
  Eigen::Matrix<double, 4, 8> a = Eigen::Matrix<double, 4, 8>::Zero();
  const double w[4] = {s.x, s.y, s.z, s.psi};
  for (int r = 0; r < 4; ++r) {
    a(r, 2 * r) = w[r];
    a(r, 2 * r + 1) = 1.0 - w[r];
  }
  return a;
}

/// Stage-dependent merge. In S2 translation is a per-axis convex blend and yaw
/// is blended along the shorter arc from the small-marker yaw.
inline Pose4 merge(Stage stage, const std::optional<Pose4> &p1, const std::optional<Pose4> &p2, const SigmaSet &s) {
  switch (stage) {
    case Stage::kS1:
      if (!p1) throw Error(ErrorCode::kContractViolation, "merge: S1 requires the large-marker pose");
      return *p1;
    case Stage::kS3:
      if (!p2) throw Error(ErrorCode::kContractViolation, "merge: S3 requires the small-marker pose");
      return *p2;
    case Stage::kS2: {
      if (!p1 || !p2) throw Error(ErrorCode::kContractViolation, "merge: S2 requires both marker poses");
      const Pose4 &a = *p1;
      const Pose4 &b = *p2;
      return {s.x * a.x + (1.0 - s.x) * b.x, s.y * a.y + (1.0 - s.y) * b.y, s.z * a.z + (1.0 - s.z) * b.z,
              wrap_angle(b.yaw + s.psi * wrap_angle(a.yaw - b.yaw))};
    }
    case Stage::kNone:
      break;
  }
  throw Error(ErrorCode::kContractViolation, "merge: nothing to merge in stage none");
}

/// Filtered output of one per-marker track; `pose` is empty when the track is
/// not live this frame.
struct TrackOutput {
  int marker_id = 0;
  std::optional<Pose4> pose;
};

inline std::optional<FusedPose> fuse_frame(const TrackOutput &large, const TrackOutput &small, const SigmaSet &s) {
  const Stage stage = select_stage(large.pose.has_value(), small.pose.has_value());
  if (stage == Stage::kNone) return std::nullopt;
  FusedPose out{merge(stage, large.pose, small.pose, s), stage, {}};
  if (large.pose) out.sources.push_back(large.marker_id);
  if (small.pose) out.sources.push_back(small.marker_id);
  return out;
}

}  // namespace perch
