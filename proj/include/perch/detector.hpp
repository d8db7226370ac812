#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

#include "perch/camera.hpp"
#include "perch/error.hpp"
#include "perch/geometry.hpp"
#include "perch/rng.hpp"
#include "perch/target.hpp"

namespace perch {

struct MarkerDetection {
  int marker_id = 0;
  std::array<PixelPoint, 4> corners{};
};

struct DetectionFrame {
  double timestamp = 0.0;
  std::vector<MarkerDetection> detections;

  const MarkerDetection *find(int id) const {
    for (const auto &d : detections) {
      if (d.marker_id == id) return &d;
    }
    return nullptr;
  }
};

struct DetectorConfig {
  double corner_noise_sigma = 0.0;  // px, per coordinate
  double dropout_prob = 0.0;        // per marker per frame
  double min_side_px = 20.0;        // fallback apparent-side threshold
  bool require_full_fov = true;
  std::uint64_t rng_seed = 0;
  /// Per-marker thresholds; override min_side_px for the listed ids.
  std::map<int, double> min_side_px_by_id;

  double threshold_for(int id) const {
    const auto it = min_side_px_by_id.find(id);
    return it == min_side_px_by_id.end() ? min_side_px : it->second;
  }

  void validate() const {
    if (!(corner_noise_sigma >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "detector: corner_noise_sigma must be >= 0");
    if (!(dropout_prob >= 0.0 && dropout_prob <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "detector: dropout_prob must lie in [0, 1]");
    }
    if (!(min_side_px > 0.0)) throw Error(ErrorCode::kInvalidArgument, "detector: min_side_px must be positive");
    for (const auto &[id, v] : min_side_px_by_id) {
      if (!(v > 0.0)) throw Error(ErrorCode::kInvalidArgument, "detector: per-marker min_side_px must be positive");
    }
  }
};

/// Mean length of the four edges of a projected quad, in pixels.
inline double apparent_side_px(const std::array<PixelPoint, 4> &c) {
  double sum = 0.0;
  for (int i = 0; i < 4; ++i) {
    const auto &a = c[i];
    const auto &b = c[(i + 1) % 4];
    sum += std::hypot(b.u - a.u, b.v - a.v);
  }
  return 0.25 * sum;
}

/// Exact corner projections of one marker, or nullopt when any corner is at
/// or behind the camera.
inline std::optional<std::array<PixelPoint, 4>> project_marker(const RigidTransform &cam_from_target,
                                                               const MarkerSpec &m, const Intrinsics &k) {
  std::array<PixelPoint, 4> out{};
  for (int i = 0; i < 4; ++i) {
    const Vec3 pc = cam_from_target.apply(m.corner_points[i]);
    if (!(pc.z() > 1e-6)) return std::nullopt;
    out[i] = project(pc, k);
  }
  return out;
}

/// Camera is in front of the printed face when its center lies on the -z side
/// of the target plane.
inline bool camera_faces_target(const RigidTransform &cam_from_target) {
  return invert(cam_from_target).translation.z() < 0.0;
}

/// Random stream for one marker in one frame. Derived from (seed, timestamp,
/// marker id) so results do not depend on marker iteration order.
inline Rng marker_stream(std::uint64_t seed, double t, int marker_id) {
  return Rng(mix_seed(mix_seed(seed, bits_of(t)), static_cast<std::uint64_t>(static_cast<std::int64_t>(marker_id))));
}

/// Emits noisy corner detections for the markers that pass the visibility
/// model: full FOV containment (optional), apparent side >= threshold, and a
/// Bernoulli(1 - dropout_prob) draw.
inline DetectionFrame simulate_frame(const RigidTransform &cam_from_target, const PerchingTarget &target,
                                     const Intrinsics &k, const DetectorConfig &cfg, double t) {
  DetectionFrame frame{t, {}};
  if (!camera_faces_target(cam_from_target)) return frame;

  for (const MarkerSpec *m : {&target.large, &target.small}) {
    const auto corners = project_marker(cam_from_target, *m, k);
    if (!corners) continue;
    if (cfg.require_full_fov &&
        !std::all_of(corners->begin(), corners->end(), [&](const PixelPoint &p) { return in_field_of_view(p, k); })) {
      continue;
    }
    if (apparent_side_px(*corners) < cfg.threshold_for(m->id)) continue;

    Rng rng = marker_stream(cfg.rng_seed, t, m->id);
    if (rng.uniform() < cfg.dropout_prob) continue;

    MarkerDetection det{m->id, *corners};
    if (cfg.corner_noise_sigma > 0.0) {
      for (auto &c : det.corners) {
        c.u += rng.normal(0.0, cfg.corner_noise_sigma);
        c.v += rng.normal(0.0, cfg.corner_noise_sigma);
      }
    }
    frame.detections.push_back(det);
  }
  return frame;
}

/// Smallest fronto-parallel depth at which all four corners of a centered
/// marker are inside the image.
inline double fov_loss_distance(const MarkerSpec &m, const Intrinsics &k) {
  // Bisection on the half-open FOV predicate; containment is monotone in z
  // for a centered fronto-parallel marker.
  auto inside = [&](double z) {
    const auto c = project_marker(RigidTransform{Mat3::Identity(), Vec3(0, 0, z)}, m, k);
    return c && std::all_of(c->begin(), c->end(), [&](const PixelPoint &p) { return in_field_of_view(p, k); });
  };
  double lo = 1e-6;
  double hi = 1.0;
  while (!inside(hi)) {
    hi *= 2.0;
    if (hi > 1e6) throw Error(ErrorCode::kCalibration, "marker never fits in the field of view");
  }
  for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    (inside(mid) ? hi : lo) = mid;
  }
  return hi;
}

struct ThresholdCalibration {
  DetectorConfig config;
  double large_threshold_px = 0.0;
  double small_threshold_px = 0.0;
  /// Depth below which the large marker leaves the FOV (emergent z3).
  double large_fov_loss_z = 0.0;
  double small_fov_loss_z = 0.0;
};

/// Chooses per-marker apparent-side thresholds so that, for a fronto-parallel
/// approach, the large marker becomes detectable at z1 and the small one at z2.
inline ThresholdCalibration calibrate_thresholds(const Intrinsics &k, const PerchingTarget &target, double z1,
                                                 double z2, DetectorConfig base = {}) {
  if (!(z2 > 0.0 && z1 > z2)) {
    throw Error(ErrorCode::kCalibration, "calibrate_thresholds: require z1 > z2 > 0");
  }
  ThresholdCalibration out;
  out.large_fov_loss_z = fov_loss_distance(target.large, k);
  out.small_fov_loss_z = fov_loss_distance(target.small, k);
  if (!(z1 > out.large_fov_loss_z) || !(z2 > out.small_fov_loss_z)) {
    std::ostringstream msg;
    msg << "calibrate_thresholds: onset distances must exceed the FOV limits; achievable ranges are z1 > "
        << out.large_fov_loss_z << " m and z2 > " << out.small_fov_loss_z << " m";
    throw Error(ErrorCode::kCalibration, msg.str());
  }
  const double f = k.mean_focal();
  out.large_threshold_px = f * target.large.side / z1;
  out.small_threshold_px = f * target.small.side / z2;
  out.config = std::move(base);
  out.config.min_side_px_by_id[target.large.id] = out.large_threshold_px;
  out.config.min_side_px_by_id[target.small.id] = out.small_threshold_px;
  return out;
}

}  // namespace perch
