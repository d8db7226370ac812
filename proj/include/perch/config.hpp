#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "perch/camera.hpp"
#include "perch/detector.hpp"
#include "perch/error.hpp"
#include "perch/fusion.hpp"
#include "perch/geometry.hpp"
#include "perch/kalman.hpp"
#include "perch/target.hpp"

namespace perch {

using Json = nlohmann::json;

enum class TrajectoryType { kHold, kLinearApproach, kWaypointSequence };

struct Waypoint {
  Pose4 pose;
  double dwell = 0.0;  // s
};

/// Poses are the target expressed in the camera frame (camera <- target),
/// rotation Rz(yaw).
struct TrajectorySpec {
  TrajectoryType type = TrajectoryType::kHold;
  Pose4 start;
  Pose4 end;
  std::vector<Waypoint> waypoints;
};

/// Frames [first_frame, first_frame + frames) lose every detection of the
/// listed markers (all markers when the list is empty).
struct ForcedDropout {
  int first_frame = 0;
  int frames = 0;
  std::vector<int> marker_ids;
};

struct VisibilityCalibration {
  double z1 = 1.15;
  double z2 = 0.25;
};

struct CalibrationRunConfig {
  int n_points = 10;
  int samples_per_point = 100;
  double z_min = 0.20;
  double z_max = 0.24;
  double xy_max = 0.01;
  double yaw_max = deg_to_rad(10.0);
  bool use_raw = false;
  std::string method = "closed_form";  // or "lms"
  double lms_mu = 0.5;
  int lms_epochs = 200;
};

struct ScenarioConfig {
  Intrinsics intrinsics;
  PerchingTarget target = default_target();
  DetectorConfig detector;
  std::optional<VisibilityCalibration> visibility;
  std::vector<ForcedDropout> forced_dropouts;
  KfConfig kf;
  SigmaSet sigma;
  TrajectorySpec trajectory;
  double frame_rate = 30.0;  // Hz
  double duration = 0.0;     // s; 0 means derived (waypoint sequences)
  CalibrationRunConfig calibration;
  std::uint64_t seed = 0;

  /// Detector config with the seed and any visibility calibration applied.
  DetectorConfig effective_detector() const {
    DetectorConfig d = detector;
    d.rng_seed = seed;
    if (visibility) d = calibrate_thresholds(intrinsics, target, visibility->z1, visibility->z2, d).config;
    return d;
  }
};

namespace config_detail {

[[noreturn]] inline void fail(const std::string &path, const std::string &msg) {
  throw Error(ErrorCode::kConfig, path + ": " + msg);
}

/// Reads fields off a JSON object and rejects any key left unread.
class ObjectReader {
 public:
  ObjectReader(const Json &j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }
  ~ObjectReader() = default;

  bool has(const std::string &key) const { return j_.contains(key); }
  std::string path(const std::string &key) const { return path_ + "." + key; }

  const Json *raw(const std::string &key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string &key, double &out) {
    if (const Json *v = raw(key)) {
      if (!v->is_number()) fail(path(key), "expected a number");
      out = v->get<double>();
    }
  }
  void integer(const std::string &key, int &out) {
    if (const Json *v = raw(key)) {
      if (!v->is_number_integer()) fail(path(key), "expected an integer");
      out = v->get<int>();
    }
  }
  void boolean(const std::string &key, bool &out) {
    if (const Json *v = raw(key)) {
      if (!v->is_boolean()) fail(path(key), "expected a boolean");
      out = v->get<bool>();
    }
  }
  void string(const std::string &key, std::string &out) {
    if (const Json *v = raw(key)) {
      if (!v->is_string()) fail(path(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) fail(path(it.key()), "unknown field");
    }
  }

 private:
  const Json &j_;
  std::string path_;
  std::set<std::string> seen_;
};

// Poses at the config boundary are in centimeters and degrees.
inline Pose4 read_pose(const Json &j, const std::string &path) {
  ObjectReader r(j, path);
  double x = 0, y = 0, z = 0, yaw = 0;
  r.number("x_cm", x);
  r.number("y_cm", y);
  r.number("z_cm", z);
  r.number("yaw_deg", yaw);
  if (!r.has("z_cm")) fail(path + ".z_cm", "required");
  r.finish();
  return {x / 100.0, y / 100.0, z / 100.0, deg_to_rad(yaw)};
}

inline Json write_pose(const Pose4 &p) {
  return {{"x_cm", p.x * 100.0}, {"y_cm", p.y * 100.0}, {"z_cm", p.z * 100.0}, {"yaw_deg", rad_to_deg(p.yaw)}};
}

template <typename Fn>
void checked(const std::string &path, Fn &&fn) {
  try {
    fn();
  } catch (const Error &e) {
    if (e.code() == ErrorCode::kConfig) throw;
    fail(path, e.what());
  }
}

}  // namespace config_detail

inline TrajectoryType parse_trajectory_type(const std::string &s, const std::string &path) {
  if (s == "hold") return TrajectoryType::kHold;
  if (s == "linear_approach") return TrajectoryType::kLinearApproach;
  if (s == "waypoint_sequence") return TrajectoryType::kWaypointSequence;
  config_detail::fail(path, "unknown trajectory type '" + s + "'");
}

inline const char *to_string(TrajectoryType t) {
  switch (t) {
    case TrajectoryType::kHold: return "hold";
    case TrajectoryType::kLinearApproach: return "linear_approach";
    case TrajectoryType::kWaypointSequence: return "waypoint_sequence";
  }
  return "?";
}

/// Checks invariants that span fields; throws kConfig with a field path.
inline void validate(const ScenarioConfig &c) {
  using config_detail::checked;
  using config_detail::fail;
  checked("intrinsics", [&] { c.intrinsics.validate(); });
  checked("target", [&] { c.target.validate(); });
  checked("detector", [&] { c.detector.validate(); });
  checked("kf", [&] { c.kf.validate(); });
  checked("sigma", [&] { c.sigma.validate(); });
  if (c.visibility) checked("detector.visibility", [&] { (void)c.effective_detector(); });
  if (!(c.frame_rate > 0.0)) fail("trajectory.frame_rate_hz", "must be positive");

  const auto &t = c.trajectory;
  auto check_pose = [&](const Pose4 &p, const std::string &path) {
    if (!(p.z > 0.0)) fail(path, "target must be in front of the camera (z > 0)");
  };
  switch (t.type) {
    case TrajectoryType::kHold:
      check_pose(t.start, "trajectory.pose");
      if (!(c.duration > 0.0)) fail("trajectory.duration_s", "must be positive");
      break;
    case TrajectoryType::kLinearApproach:
      check_pose(t.start, "trajectory.start");
      check_pose(t.end, "trajectory.end");
      if (!(t.end.z < t.start.z)) fail("trajectory.end.z_cm", "approach must decrease z");
      if (!(c.duration > 0.0)) fail("trajectory.duration_s", "must be positive");
      break;
    case TrajectoryType::kWaypointSequence:
      if (t.waypoints.empty()) fail("trajectory.waypoints", "must not be empty");
      for (std::size_t i = 0; i < t.waypoints.size(); ++i) {
        const std::string p = "trajectory.waypoints[" + std::to_string(i) + "]";
        check_pose(t.waypoints[i].pose, p + ".pose");
        if (!(t.waypoints[i].dwell > 0.0)) fail(p + ".dwell_s", "must be positive");
      }
      if (c.duration < 0.0) fail("trajectory.duration_s", "must not be negative");
      break;
  }
  for (std::size_t i = 0; i < c.forced_dropouts.size(); ++i) {
    const auto &d = c.forced_dropouts[i];
    if (d.first_frame < 0 || d.frames < 0) fail("forced_dropouts[" + std::to_string(i) + "]", "frames must be >= 0");
  }
  const auto &cal = c.calibration;
  if (cal.n_points < 0 || cal.samples_per_point < 1) fail("calibration", "n_points >= 0 and samples_per_point >= 1 required");
  if (!(cal.z_min > 0.0 && cal.z_max >= cal.z_min)) fail("calibration.z_min_m", "require 0 < z_min <= z_max");
  if (cal.method != "closed_form" && cal.method != "lms") fail("calibration.method", "expected closed_form or lms");
}

/// Parses a scenario; unknown fields anywhere are rejected.
inline ScenarioConfig parse_scenario(const Json &j) {
  using config_detail::ObjectReader;
  ScenarioConfig c;
  ObjectReader root(j, "$");

  if (const Json *v = root.raw("seed")) {
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
      config_detail::fail("$.seed", "expected a non-negative integer");
    }
    c.seed = v->get<std::uint64_t>();
  }

  if (const Json *v = root.raw("intrinsics")) {
    ObjectReader r(*v, "$.intrinsics");
    r.number("fx", c.intrinsics.fx);
    r.number("fy", c.intrinsics.fy);
    r.number("cx", c.intrinsics.cx);
    r.number("cy", c.intrinsics.cy);
    r.integer("width", c.intrinsics.width);
    r.integer("height", c.intrinsics.height);
    r.number("k1", c.intrinsics.k1);
    r.number("k2", c.intrinsics.k2);
    r.finish();
  }

  if (const Json *v = root.raw("target")) {
    ObjectReader r(*v, "$.target");
    int large_id = c.target.large.id, small_id = c.target.small.id;
    double large_side = c.target.large.side, small_side = c.target.small.side;
    r.integer("large_id", large_id);
    r.number("large_side_m", large_side);
    r.integer("small_id", small_id);
    r.number("small_side_m", small_side);
    r.finish();
    config_detail::checked("$.target", [&] { c.target = make_target(large_id, large_side, small_id, small_side); });
  }

  if (const Json *v = root.raw("detector")) {
    ObjectReader r(*v, "$.detector");
    r.number("corner_noise_px", c.detector.corner_noise_sigma);
    r.number("dropout_prob", c.detector.dropout_prob);
    r.number("min_side_px", c.detector.min_side_px);
    r.boolean("require_full_fov", c.detector.require_full_fov);
    if (const Json *m = r.raw("min_side_px_by_id")) {
      ObjectReader mr(*m, "$.detector.min_side_px_by_id");
      for (auto it = m->begin(); it != m->end(); ++it) {
        int id = 0;
        try {
          std::size_t used = 0;
          id = std::stoi(it.key(), &used);
          if (used != it.key().size()) throw std::invalid_argument("trailing");
        } catch (const std::exception &) {
          config_detail::fail(mr.path(it.key()), "keys must be integer marker ids");
        }
        double px = 0.0;
        mr.number(it.key(), px);
        c.detector.min_side_px_by_id[id] = px;
      }
      mr.finish();
    }
    if (const Json *vis = r.raw("visibility")) {
      ObjectReader vr(*vis, "$.detector.visibility");
      VisibilityCalibration cal;
      vr.number("z1_m", cal.z1);
      vr.number("z2_m", cal.z2);
      vr.finish();
      c.visibility = cal;
    }
    r.finish();
  }

  if (const Json *v = root.raw("forced_dropouts")) {
    if (!v->is_array()) config_detail::fail("$.forced_dropouts", "expected an array");
    for (std::size_t i = 0; i < v->size(); ++i) {
      const std::string p = "$.forced_dropouts[" + std::to_string(i) + "]";
      ObjectReader r((*v)[i], p);
      ForcedDropout d;
      r.integer("first_frame", d.first_frame);
      r.integer("frames", d.frames);
      if (const Json *ids = r.raw("marker_ids")) {
        if (!ids->is_array()) config_detail::fail(p + ".marker_ids", "expected an array");
        for (const auto &id : *ids) {
          if (!id.is_number_integer()) config_detail::fail(p + ".marker_ids", "expected integers");
          d.marker_ids.push_back(id.get<int>());
        }
      }
      r.finish();
      c.forced_dropouts.push_back(d);
    }
  }

  if (const Json *v = root.raw("kf")) {
    ObjectReader r(*v, "$.kf");
    r.number("k1", c.kf.k1);
    r.number("k2", c.kf.k2);
    r.number("alpha", c.kf.alpha);
    r.integer("n_max", c.kf.n_max);
    r.number("init_pos_var", c.kf.init_pos_var);
    r.number("init_vel_var", c.kf.init_vel_var);
    r.boolean("decay_before_propagate", c.kf.decay_before_propagate);
    if (const Json *rd = r.raw("r_diag")) {
      if (!rd->is_array() || rd->size() != 4) config_detail::fail("$.kf.r_diag", "expected 4 numbers (psi, x, y, z)");
      std::array<double, 4> d{};
      for (int i = 0; i < 4; ++i) {
        if (!(*rd)[i].is_number()) config_detail::fail("$.kf.r_diag", "expected 4 numbers (psi, x, y, z)");
        d[i] = (*rd)[i].get<double>();
      }
      c.kf.r_diag = d;
    }
    r.finish();
  }

  if (const Json *v = root.raw("sigma")) {
    ObjectReader r(*v, "$.sigma");
    r.number("x", c.sigma.x);
    r.number("y", c.sigma.y);
    r.number("z", c.sigma.z);
    r.number("psi", c.sigma.psi);
    r.finish();
  }

  const Json *traj = root.raw("trajectory");
  if (!traj) config_detail::fail("$.trajectory", "required");
  {
    ObjectReader r(*traj, "$.trajectory");
    std::string type;
    r.string("type", type);
    if (type.empty()) config_detail::fail("$.trajectory.type", "required");
    c.trajectory.type = parse_trajectory_type(type, "$.trajectory.type");
    r.number("frame_rate_hz", c.frame_rate);
    r.number("duration_s", c.duration);
    switch (c.trajectory.type) {
      case TrajectoryType::kHold: {
        const Json *p = r.raw("pose");
        if (!p) config_detail::fail("$.trajectory.pose", "required for hold");
        c.trajectory.start = c.trajectory.end = config_detail::read_pose(*p, "$.trajectory.pose");
        break;
      }
      case TrajectoryType::kLinearApproach: {
        const Json *s = r.raw("start");
        const Json *e = r.raw("end");
        if (!s || !e) config_detail::fail("$.trajectory", "linear_approach requires start and end");
        c.trajectory.start = config_detail::read_pose(*s, "$.trajectory.start");
        c.trajectory.end = config_detail::read_pose(*e, "$.trajectory.end");
        break;
      }
      case TrajectoryType::kWaypointSequence: {
        const Json *w = r.raw("waypoints");
        if (!w || !w->is_array()) config_detail::fail("$.trajectory.waypoints", "expected an array");
        for (std::size_t i = 0; i < w->size(); ++i) {
          const std::string p = "$.trajectory.waypoints[" + std::to_string(i) + "]";
          ObjectReader wr((*w)[i], p);
          Waypoint wp;
          const Json *pose = wr.raw("pose");
          if (!pose) config_detail::fail(p + ".pose", "required");
          wp.pose = config_detail::read_pose(*pose, p + ".pose");
          wr.number("dwell_s", wp.dwell);
          wr.finish();
          c.trajectory.waypoints.push_back(wp);
        }
        break;
      }
    }
    r.finish();
  }

  if (const Json *v = root.raw("calibration")) {
    ObjectReader r(*v, "$.calibration");
    auto &cal = c.calibration;
    double yaw_deg = rad_to_deg(cal.yaw_max);
    r.integer("n_points", cal.n_points);
    r.integer("samples_per_point", cal.samples_per_point);
    r.number("z_min_m", cal.z_min);
    r.number("z_max_m", cal.z_max);
    r.number("xy_max_m", cal.xy_max);
    r.number("yaw_max_deg", yaw_deg);
    r.boolean("use_raw", cal.use_raw);
    r.string("method", cal.method);
    r.number("lms_mu", cal.lms_mu);
    r.integer("lms_epochs", cal.lms_epochs);
    r.finish();
    cal.yaw_max = deg_to_rad(yaw_deg);
  }

  root.finish();
  validate(c);
  return c;
}

inline Json load_json_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, path + ": file not found or unreadable");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error &e) {
    throw Error(ErrorCode::kConfig, path + ": invalid JSON: " + e.what());
  }
}

inline ScenarioConfig load_scenario(const std::string &path) { return parse_scenario(load_json_file(path)); }

}  // namespace perch
