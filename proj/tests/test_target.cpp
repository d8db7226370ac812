#include <gtest/gtest.h>

#include "perch/target.hpp"

namespace perch {
namespace {

TEST(Target, DefaultMarkers) {
  const PerchingTarget t = default_target();
  EXPECT_EQ(t.large.id, 997);
  EXPECT_EQ(t.small.id, 5);
  EXPECT_EQ(t.large.dictionary, MarkerDictionary::kDict4x4_100);
  EXPECT_EQ(t.small.dictionary, MarkerDictionary::kArucoOriginal);
  EXPECT_DOUBLE_EQ(t.large.side, 0.150);
  EXPECT_DOUBLE_EQ(t.small.side, 0.025);

  const std::array<Vec3, 4> large{Vec3(-0.075, -0.075, 0), Vec3(0.075, -0.075, 0), Vec3(0.075, 0.075, 0),
                                  Vec3(-0.075, 0.075, 0)};
  for (int i = 0; i < 4; ++i) EXPECT_TRUE(t.large.corner_points[i].isApprox(large[i])) << i;
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(t.small.corner_points[i].cwiseAbs().x(), 0.0125, 1e-15);
    EXPECT_NEAR(t.small.corner_points[i].cwiseAbs().y(), 0.0125, 1e-15);
  }
}

TEST(Target, SharedOriginAndGeometry) {
  const PerchingTarget t = default_target();
  for (const MarkerSpec *m : {&t.large, &t.small}) {
    Vec3 c = Vec3::Zero();
    for (const auto &p : m->corner_points) {
      EXPECT_EQ(p.z(), 0.0);
      c += p;
    }
    EXPECT_LT((c / 4.0).norm(), 1e-15);
    for (int i = 0; i < 4; ++i) {
      EXPECT_NEAR((m->corner_points[(i + 1) % 4] - m->corner_points[i]).norm(), m->side, 1e-15);
    }
  }
}

TEST(Target, SameWindingForBothMarkers) {
  const PerchingTarget t = default_target();
  auto winding = [](const MarkerSpec &m) {
    const Vec3 a = m.corner_points[1] - m.corner_points[0];
    const Vec3 b = m.corner_points[2] - m.corner_points[1];
    return a.cross(b).z();
  };
  EXPECT_GT(winding(t.large) * winding(t.small), 0.0);
  // Scaled copies of one another.
  for (int i = 0; i < 4; ++i) {
    EXPECT_TRUE((t.large.corner_points[i] * (t.small.side / t.large.side)).isApprox(t.small.corner_points[i]));
  }
}

TEST(Target, LookupById) {
  const PerchingTarget t = default_target();
  ASSERT_TRUE(marker_by_id(t, 997));
  EXPECT_EQ(marker_by_id(t, 997)->side, 0.150);
  ASSERT_TRUE(marker_by_id(t, 5));
  EXPECT_EQ(marker_by_id(t, 5)->side, 0.025);
  EXPECT_FALSE(marker_by_id(t, 42));
}

TEST(Target, InvalidOverridesRejected) {
  EXPECT_THROW(make_target(1, 0.02, 2, 0.05), Error);
  EXPECT_THROW(make_target(3, 0.15, 3, 0.02), Error);
  EXPECT_THROW(make_target(3, -0.15, 4, 0.02), Error);
}

}  // namespace
}  // namespace perch
