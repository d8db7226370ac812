#include <gtest/gtest.h>

#include <cstring>

#include "perch/detector.hpp"

namespace perch {
namespace {

RigidTransform fronto(double z) { return {Mat3::Identity(), Vec3(0, 0, z)}; }

std::vector<int> ids(const DetectionFrame &f) {
  std::vector<int> out;
  for (const auto &d : f.detections) out.push_back(d.marker_id);
  return out;
}

TEST(SimulateFrame, DefaultVisibilityExamples) {
  const Intrinsics k;
  const PerchingTarget t = default_target();
  const DetectorConfig cfg;
  // Apparent sides at 1.5 m: large 460*0.15/1.5 = 46 px, small 7.67 px; threshold 20 px.
  EXPECT_EQ(ids(simulate_frame(fronto(1.50), t, k, cfg, 0.0)), std::vector<int>{997});
  EXPECT_EQ(ids(simulate_frame(fronto(0.20), t, k, cfg, 0.0)), (std::vector<int>{997, 5}));
  // At 0.10 m the large corners project to v = 240 +- 345 px, outside 480 rows.
  EXPECT_EQ(ids(simulate_frame(fronto(0.10), t, k, cfg, 0.0)), std::vector<int>{5});
}

TEST(SimulateFrame, CertainDropoutGivesEmptyFrames) {
  const Intrinsics k;
  DetectorConfig cfg;
  cfg.dropout_prob = 1.0;
  for (int i = 0; i < 50; ++i) {
    EXPECT_TRUE(simulate_frame(fronto(0.2), default_target(), k, cfg, i / 30.0).detections.empty());
  }
}

TEST(SimulateFrame, CameraBehindTargetGivesEmptyFrame) {
  const Intrinsics k;
  // Target flipped: camera sees the back side.
  const RigidTransform back{rot_x(kPi), Vec3(0, 0, 0.5)};
  EXPECT_TRUE(simulate_frame(back, default_target(), k, {}, 0.0).detections.empty());
}

TEST(SimulateFrame, NoiselessCornersAreExactProjections) {
  const Intrinsics k;
  const PerchingTarget t = default_target();
  const RigidTransform pose{rot_z(0.3) * rot_x(0.2), Vec3(0.02, -0.01, 0.4)};
  const DetectionFrame f = simulate_frame(pose, t, k, {}, 0.0);
  ASSERT_EQ(f.detections.size(), 2u);
  for (const auto &d : f.detections) {
    const MarkerSpec m = *marker_by_id(t, d.marker_id);
    for (int i = 0; i < 4; ++i) {
      const PixelPoint p = project(pose.apply(m.corner_points[i]), k);
      EXPECT_NEAR(d.corners[i].u, p.u, 1e-12);
      EXPECT_NEAR(d.corners[i].v, p.v, 1e-12);
    }
  }
}

TEST(SimulateFrame, DeterministicAndOrderIndependent) {
  const Intrinsics k;
  DetectorConfig cfg;
  cfg.corner_noise_sigma = 0.7;
  cfg.dropout_prob = 0.3;
  cfg.rng_seed = 1234;
  const RigidTransform pose{rot_z(0.1), Vec3(0.01, 0.0, 0.22)};
  for (int i = 0; i < 100; ++i) {
    const double t = i / 30.0;
    const DetectionFrame a = simulate_frame(pose, default_target(), k, cfg, t);
    const DetectionFrame b = simulate_frame(pose, default_target(), k, cfg, t);
    ASSERT_EQ(a.detections.size(), b.detections.size());
    for (std::size_t j = 0; j < a.detections.size(); ++j) {
      EXPECT_EQ(a.detections[j].marker_id, b.detections[j].marker_id);
      EXPECT_EQ(std::memcmp(a.detections[j].corners.data(), b.detections[j].corners.data(),
                            sizeof(PixelPoint) * 4),
                0);
    }
  }
  // Marker draws come from streams keyed by id, so swapping the roles of the
  // two marker specs leaves each marker's noise unchanged.
  PerchingTarget swapped = default_target();
  std::swap(swapped.large, swapped.small);
  const DetectionFrame a = simulate_frame(pose, default_target(), k, cfg, 0.5);
  const DetectionFrame b = simulate_frame(pose, swapped, k, cfg, 0.5);
  for (const auto &d : a.detections) {
    const MarkerDetection *other = b.find(d.marker_id);
    ASSERT_NE(other, nullptr);
    for (int i = 0; i < 4; ++i) EXPECT_EQ(d.corners[i].u, other->corners[i].u);
  }
}

TEST(SimulateFrame, DropoutRateMatchesProbability) {
  const Intrinsics k;
  DetectorConfig cfg;
  cfg.dropout_prob = 0.25;
  cfg.rng_seed = 77;
  int seen = 0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) seen += static_cast<int>(simulate_frame(fronto(0.2), default_target(), k, cfg, i / 30.0).detections.size());
  const double rate = 1.0 - seen / (2.0 * n);
  EXPECT_NEAR(rate, 0.25, 0.02);
}

TEST(SimulateFrame, NoiseStatistics) {
  const Intrinsics k;
  DetectorConfig cfg;
  cfg.corner_noise_sigma = 0.5;
  cfg.rng_seed = 3;
  const RigidTransform pose = fronto(0.3);
  const auto exact = *project_marker(pose, default_target().large, k);
  double sum = 0.0, sq = 0.0;
  int n = 0;
  for (int i = 0; i < 3000; ++i) {
    const auto f = simulate_frame(pose, default_target(), k, cfg, i / 30.0);
    const auto *d = f.find(997);
    ASSERT_NE(d, nullptr);
    for (int c = 0; c < 4; ++c) {
      const double e = d->corners[c].u - exact[c].u;
      sum += e;
      sq += e * e;
      ++n;
    }
  }
  EXPECT_NEAR(sum / n, 0.0, 0.02);
  EXPECT_NEAR(std::sqrt(sq / n), 0.5, 0.02);
}

TEST(CalibrateThresholds, ClosedFormThresholds) {
  const Intrinsics k;
  const auto cal = calibrate_thresholds(k, default_target(), 1.15, 0.25);
  EXPECT_NEAR(cal.large_threshold_px, 460.0 * 0.150 / 1.15, 1e-12);
  EXPECT_NEAR(cal.small_threshold_px, 460.0 * 0.025 / 0.25, 1e-12);
  EXPECT_EQ(cal.config.threshold_for(997), cal.large_threshold_px);
  EXPECT_EQ(cal.config.threshold_for(5), cal.small_threshold_px);
  // Large marker leaves the 480-row image once 460 * 0.075 / z > 240.
  EXPECT_NEAR(cal.large_fov_loss_z, 460.0 * 0.075 / 240.0, 1e-9);
}

TEST(CalibrateThresholds, InvalidRangesRejected) {
  const Intrinsics k;
  try {
    calibrate_thresholds(k, default_target(), 0.25, 0.25);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kCalibration);
  }
  EXPECT_THROW(calibrate_thresholds(k, default_target(), 0.12, 0.05), Error);  // z1 inside FOV-loss range
  EXPECT_THROW(calibrate_thresholds(k, default_target(), 1.0, -0.1), Error);
}

TEST(CalibrateThresholds, BoundariesLandAtRequestedDistances) {
  const Intrinsics k;
  const PerchingTarget t = default_target();
  const DetectorConfig cfg = calibrate_thresholds(k, t, 1.15, 0.25).config;
  const double eps = 1e-6;
  EXPECT_NE(simulate_frame(fronto(1.15 - eps), t, k, cfg, 0).find(997), nullptr);
  EXPECT_EQ(simulate_frame(fronto(1.15 + eps), t, k, cfg, 0).find(997), nullptr);
  EXPECT_NE(simulate_frame(fronto(0.25 - eps), t, k, cfg, 0).find(5), nullptr);
  EXPECT_EQ(simulate_frame(fronto(0.25 + eps), t, k, cfg, 0).find(5), nullptr);

  // Bisection on the detection predicate recovers z1.
  double lo = 0.5, hi = 2.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (simulate_frame(fronto(mid), t, k, cfg, 0).find(997) ? lo : hi) = mid;
  }
  EXPECT_NEAR(lo, 1.15, 1e-9);
}

TEST(SimulateFrame, VisibilityIsOneContiguousInterval) {
  const Intrinsics k;
  const PerchingTarget t = default_target();
  const DetectorConfig cfg = calibrate_thresholds(k, t, 1.15, 0.25).config;
  for (int id : {997, 5}) {
    int transitions = 0;
    bool prev = false;
    for (double z = 0.02; z < 2.0; z += 0.001) {
      const bool vis = simulate_frame(fronto(z), t, k, cfg, 0).find(id) != nullptr;
      if (vis != prev) ++transitions;
      prev = vis;
    }
    EXPECT_EQ(transitions, 2) << id;
  }
}

}  // namespace
}  // namespace perch
