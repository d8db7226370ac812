#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "perch/config.hpp"
#include "perch/detector.hpp"
#include "perch/fusion.hpp"
#include "perch/kalman.hpp"
#include "perch/log.hpp"
#include "perch/pnp.hpp"

namespace perch {

struct TimedTransform {
  double t = 0.0;
  RigidTransform cam_from_target;
  Pose4 truth;
};

/// Evenly timestamped camera <- target poses, t_i = i / frame_rate for
/// i < round(duration * frame_rate). Waypoint sequences use the summed dwell
/// when duration <= 0.
inline std::vector<TimedTransform> generate_trajectory(const TrajectorySpec &spec, double frame_rate,
                                                       double duration) {
  if (!(frame_rate > 0.0)) throw Error(ErrorCode::kConfig, "trajectory: frame rate must be positive");
  double total = duration;
  if (spec.type == TrajectoryType::kWaypointSequence) {
    if (spec.waypoints.empty()) throw Error(ErrorCode::kConfig, "trajectory: no waypoints");
    if (total <= 0.0) {
      total = 0.0;
      for (const auto &w : spec.waypoints) total += w.dwell;
    }
  }
  if (!(total > 0.0)) throw Error(ErrorCode::kConfig, "trajectory: duration must be positive");
  if (spec.type == TrajectoryType::kLinearApproach && !(spec.end.z < spec.start.z)) {
    throw Error(ErrorCode::kConfig, "trajectory: linear_approach must decrease z");
  }

  const auto n = static_cast<long>(std::llround(total * frame_rate));
  std::vector<TimedTransform> out;
  out.reserve(static_cast<std::size_t>(std::max(0L, n)));
  for (long i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / frame_rate;
    Pose4 p;
    switch (spec.type) {
      case TrajectoryType::kHold:
        p = spec.start;
        break;
      case TrajectoryType::kLinearApproach: {
        const double s = t / total;
        const Pose4 &a = spec.start;
        const Pose4 &b = spec.end;
        p = {a.x + s * (b.x - a.x), a.y + s * (b.y - a.y), a.z + s * (b.z - a.z),
             wrap_angle(a.yaw + s * wrap_angle(b.yaw - a.yaw))};
        break;
      }
      case TrajectoryType::kWaypointSequence: {
        double acc = 0.0;
        p = spec.waypoints.back().pose;
        for (const auto &w : spec.waypoints) {
          acc += w.dwell;
          if (t < acc) {
            p = w.pose;
            break;
          }
        }
        break;
      }
    }
    if (!(p.z > 0.0)) throw Error(ErrorCode::kConfig, "trajectory: target must stay in front of the camera");
    out.push_back({t, transform_from_pose4(p), p});
  }
  return out;
}

/// Per-marker columns of one frame.
struct MarkerTrace {
  std::optional<Pose4> raw;
  double raw_rmse = std::numeric_limits<double>::quiet_NaN();
  std::optional<Pose4> filtered;
  int miss_count = 0;
  KfEvent event = KfEvent::kIdle;
};

struct FrameRecord {
  int frame = 0;
  double t = 0.0;
  Pose4 truth;
  std::array<MarkerTrace, 2> markers;  // [0] large, [1] small
  Stage stage = Stage::kNone;
  std::optional<Pose4> fused;
};

struct RunMetrics {
  std::size_t frames = 0;
  std::size_t frames_with_output = 0;
  std::array<double, 4> peak_to_peak{};  // x, y, z (cm), psi (deg)
  std::array<double, 4> rmse{};          // x, y, z (cm), psi (deg)
  std::array<double, 4> occupancy{};     // none, S1, S2, S3
  int dropout_bridges = 0;
  int track_lost = 0;
};

/// Fused-minus-truth error in reporting units: cm for x, y, z and degrees
/// (wrapped) for yaw.
inline std::array<double, 4> reporting_error(const Pose4 &fused, const Pose4 &truth) {
  return {fused.x * 100.0 - truth.x * 100.0, fused.y * 100.0 - truth.y * 100.0, fused.z * 100.0 - truth.z * 100.0,
          rad_to_deg(wrap_angle(fused.yaw - truth.yaw))};
}

inline RunMetrics compute_metrics(const std::vector<FrameRecord> &log) {
  if (log.empty()) throw Error(ErrorCode::kEmptyInput, "compute_metrics: empty log");
  RunMetrics m;
  m.frames = log.size();
  std::array<double, 4> lo, hi, sq{};
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  std::array<std::size_t, 4> stage_counts{};
  std::array<bool, 2> coasting{};

  for (const auto &f : log) {
    ++stage_counts[static_cast<std::size_t>(f.stage)];
    for (int mk = 0; mk < 2; ++mk) {
      const KfEvent e = f.markers[mk].event;
      if (e == KfEvent::kTrackLost) ++m.track_lost;
      if (e == KfEvent::kUpdated && coasting[mk]) ++m.dropout_bridges;
      coasting[mk] = e == KfEvent::kCoasted;
    }
    if (!f.fused) continue;
    ++m.frames_with_output;
    const auto err = reporting_error(*f.fused, f.truth);
    for (int a = 0; a < 4; ++a) {
      lo[a] = std::min(lo[a], err[a]);
      hi[a] = std::max(hi[a], err[a]);
      sq[a] += err[a] * err[a];
    }
  }
  if (m.frames_with_output > 0) {
    for (int a = 0; a < 4; ++a) {
      m.peak_to_peak[a] = hi[a] - lo[a];
      m.rmse[a] = std::sqrt(sq[a] / static_cast<double>(m.frames_with_output));
    }
  }
  for (int s = 0; s < 4; ++s) m.occupancy[s] = static_cast<double>(stage_counts[s]) / static_cast<double>(m.frames);
  return m;
}

struct ScenarioRun {
  std::vector<FrameRecord> frames;
  RunMetrics metrics;
};

inline bool forced_out(const std::vector<ForcedDropout> &drops, int frame, int marker_id) {
  for (const auto &d : drops) {
    if (frame < d.first_frame || frame >= d.first_frame + d.frames) continue;
    if (d.marker_ids.empty() ||
        std::find(d.marker_ids.begin(), d.marker_ids.end(), marker_id) != d.marker_ids.end()) {
      return true;
    }
  }
  return false;
}

/// Detect -> PnP -> per-marker KF -> fuse, frame by frame.
inline ScenarioRun run_scenario(const ScenarioConfig &cfg) {
  validate(cfg);
  const DetectorConfig det_cfg = cfg.effective_detector();
  const auto traj = generate_trajectory(cfg.trajectory, cfg.frame_rate, cfg.duration);

  ScenarioRun run;
  run.frames.reserve(traj.size());
  std::array<std::optional<KfState>, 2> tracks;
  const std::array<int, 2> ids{cfg.target.large.id, cfg.target.small.id};

  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto &tp = traj[i];
    FrameRecord rec;
    rec.frame = static_cast<int>(i);
    rec.t = tp.t;
    rec.truth = tp.truth;

    const DetectionFrame frame = simulate_frame(tp.cam_from_target, cfg.target, cfg.intrinsics, det_cfg, tp.t);
    for (int mk = 0; mk < 2; ++mk) {
      MarkerTrace &tr = rec.markers[mk];
      const MarkerDetection *det = frame.find(ids[mk]);
      if (det && !forced_out(cfg.forced_dropouts, rec.frame, ids[mk])) {
        try {
          const MarkerPoseEstimate est = solve_marker_pose(*det, cfg.target, cfg.intrinsics);
          tr.raw = est.pose4;
          tr.raw_rmse = est.reprojection_rmse;
          log::debug("frame " + std::to_string(i) + " marker " + std::to_string(ids[mk]) + " dlt_rmse " +
                     std::to_string(est.dlt_rmse) + " refined_rmse " + std::to_string(est.reprojection_rmse));
        } catch (const Error &e) {
          log::debug("frame " + std::to_string(i) + " marker " + std::to_string(ids[mk]) + ": " + e.what());
        }
      }
      const KfStepResult step = kf_step(tracks[mk], tr.raw, tp.t, cfg.kf);
      tracks[mk] = step.state;
      tr.event = step.event;
      tr.filtered = step.pose();
      tr.miss_count = step.state ? step.state->miss_count : 0;
    }

    const auto fused = fuse_frame({ids[0], rec.markers[0].filtered}, {ids[1], rec.markers[1].filtered}, cfg.sigma);
    if (fused) {
      rec.stage = fused->stage;
      rec.fused = fused->pose;
    }
    run.frames.push_back(rec);
  }
  run.metrics = compute_metrics(run.frames);
  return run;
}

namespace detail {
inline void put_number(std::ostream &os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

inline void put_pose(std::ostream &os, const std::optional<Pose4> &p) {
  if (!p) {
    os << ",,,,";
    return;
  }
  for (double v : {p->x * 100.0, p->y * 100.0, p->z * 100.0, rad_to_deg(p->yaw)}) {
    os << ',';
    put_number(os, v);
  }
}
}  // namespace detail

/// Column list of frames.csv; poses in cm and degrees.
inline std::string frames_csv_header() {
  std::string h = "frame,t";
  auto pose_cols = [&](const std::string &prefix) {
    for (const char *c : {"_x_cm", "_y_cm", "_z_cm", "_psi_deg"}) h += "," + prefix + c;
  };
  pose_cols("true");
  pose_cols("raw_large");
  pose_cols("raw_small");
  pose_cols("filt_large");
  pose_cols("filt_small");
  h += ",miss_large,miss_small,event_large,event_small,stage";
  pose_cols("fused");
  return h;
}

inline void write_frames_csv(std::ostream &os, const std::vector<FrameRecord> &frames) {
  os << frames_csv_header() << '\n';
  for (const auto &f : frames) {
    os << f.frame << ',';
    detail::put_number(os, f.t);
    detail::put_pose(os, f.truth);
    detail::put_pose(os, f.markers[0].raw);
    detail::put_pose(os, f.markers[1].raw);
    detail::put_pose(os, f.markers[0].filtered);
    detail::put_pose(os, f.markers[1].filtered);
    os << ',' << f.markers[0].miss_count << ',' << f.markers[1].miss_count << ',' << to_string(f.markers[0].event)
       << ',' << to_string(f.markers[1].event) << ',' << to_string(f.stage);
    detail::put_pose(os, f.fused);
    os << '\n';
  }
}

inline Json metrics_to_json(const RunMetrics &m) {
  auto axes = [](const std::array<double, 4> &v) {
    return Json{{"x_cm", v[0]}, {"y_cm", v[1]}, {"z_cm", v[2]}, {"psi_deg", v[3]}};
  };
  return Json{{"frames", m.frames},
              {"frames_with_output", m.frames_with_output},
              {"peak_to_peak", axes(m.peak_to_peak)},
              {"rmse", axes(m.rmse)},
              {"stage_occupancy",
               {{"none", m.occupancy[0]}, {"S1", m.occupancy[1]}, {"S2", m.occupancy[2]}, {"S3", m.occupancy[3]}}},
              {"dropout_bridges", m.dropout_bridges},
              {"track_lost", m.track_lost}};
}

}  // namespace perch
