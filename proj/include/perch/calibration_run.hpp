#pragma once

#include <string>
#include <vector>

#include "perch/config.hpp"
#include "perch/lms.hpp"
#include "perch/log.hpp"
#include "perch/rng.hpp"
#include "perch/scenario.hpp"

namespace perch {

/// Holds the camera at n_points random Stage-2 poses for samples_per_point
/// frames each and records (truth, large estimate, small estimate) on every
/// frame where both estimates exist. Points that never reach Stage 2 are
/// skipped with a warning.
inline std::vector<CalibSample> collect_calibration_run(const ScenarioConfig &base, int n_points,
                                                        int samples_per_point) {
  std::vector<CalibSample> out;
  if (n_points <= 0) return out;
  const auto &cal = base.calibration;
  Rng pose_rng(mix_seed(base.seed, 0xca11b0a7ULL));

  for (int i = 0; i < n_points; ++i) {
    ScenarioConfig cfg = base;
    cfg.forced_dropouts.clear();
    cfg.trajectory = {};
    cfg.trajectory.type = TrajectoryType::kHold;
    cfg.trajectory.start.x = pose_rng.uniform(-cal.xy_max, cal.xy_max);
    cfg.trajectory.start.y = pose_rng.uniform(-cal.xy_max, cal.xy_max);
    cfg.trajectory.start.z = pose_rng.uniform(cal.z_min, cal.z_max);
    cfg.trajectory.start.yaw = pose_rng.uniform(-cal.yaw_max, cal.yaw_max);
    cfg.trajectory.end = cfg.trajectory.start;
    cfg.duration = static_cast<double>(samples_per_point) / cfg.frame_rate;
    cfg.seed = mix_seed(base.seed, static_cast<std::uint64_t>(i));

    const ScenarioRun run = run_scenario(cfg);
    std::size_t before = out.size();
    for (const auto &f : run.frames) {
      const auto &large = cal.use_raw ? f.markers[0].raw : f.markers[0].filtered;
      const auto &small = cal.use_raw ? f.markers[1].raw : f.markers[1].filtered;
      if (large && small) out.push_back({f.truth, *large, *small});
    }
    if (out.size() == before) {
      log::warn("calibration point " + std::to_string(i) + " never reached stage 2; skipped");
    }
  }
  return out;
}

inline Json calib_result_to_json(const CalibResult &r) {
  return Json{{"sigma", {{"x", r.sigma.x}, {"y", r.sigma.y}, {"z", r.sigma.z}, {"psi", r.sigma.psi}}},
              {"unclamped", {{"x", r.unclamped[0]}, {"y", r.unclamped[1]}, {"z", r.unclamped[2]}, {"psi", r.unclamped[3]}}},
              {"residual_rms",
               {{"x_m", r.per_axis_residual_rms[0]},
                {"y_m", r.per_axis_residual_rms[1]},
                {"z_m", r.per_axis_residual_rms[2]},
                {"psi_rad", r.per_axis_residual_rms[3]}}},
              {"indeterminate",
               {{"x", r.indeterminate[0]}, {"y", r.indeterminate[1]}, {"z", r.indeterminate[2]}, {"psi", r.indeterminate[3]}}},
              {"n_samples", r.n_samples}};
}

}  // namespace perch
