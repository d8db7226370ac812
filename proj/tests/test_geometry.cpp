#include <gtest/gtest.h>

#include <limits>

#include "perch/geometry.hpp"
#include "test_helpers.hpp"

namespace perch {
namespace {

TEST(WrapAngle, Examples) {
  EXPECT_EQ(wrap_angle(0.0), 0.0);
  EXPECT_NEAR(wrap_angle(3.0 * kPi), kPi, 1e-12);
  EXPECT_NEAR(wrap_angle(-1.5 * kPi), 0.5 * kPi, 1e-12);
  EXPECT_EQ(wrap_angle(-kPi), kPi);  // half-open interval
  EXPECT_EQ(wrap_angle(kPi), kPi);
}

TEST(WrapAngle, NonFiniteThrows) {
  EXPECT_THROW(wrap_angle(std::numeric_limits<double>::quiet_NaN()), Error);
  EXPECT_THROW(wrap_angle(std::numeric_limits<double>::infinity()), Error);
}

TEST(WrapAngle, RangeCongruenceAndIdempotence) {
  Rng rng(11);
  for (int i = 0; i < 5000; ++i) {
    const double theta = rng.uniform(-100.0, 100.0);
    const double w = wrap_angle(theta);
    EXPECT_GT(w, -kPi);
    EXPECT_LE(w, kPi);
    const double k = (theta - w) / (2.0 * kPi);
    EXPECT_NEAR(k, std::round(k), 1e-9);
    EXPECT_EQ(wrap_angle(w), w);
  }
}

TEST(YawFromRotation, Examples) {
  EXPECT_EQ(yaw_from_rotation(Mat3::Identity()), 0.0);
  EXPECT_NEAR(yaw_from_rotation(rot_z(kPi / 2)), kPi / 2, 1e-15);
  // Built from Euler angles, read back.
  EXPECT_NEAR(yaw_from_rotation(rot_z(0.3) * rot_y(0.1) * rot_x(0.05)), 0.3, 1e-12);
}

TEST(YawFromRotation, GimbalLockThrows) {
  try {
    yaw_from_rotation(rot_y(kPi / 2));
    FAIL() << "expected degenerate-orientation";
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateOrientation);
  }
}

TEST(YawFromRotation, PureYawMatchesWrap) {
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const double theta = rng.uniform(-2.0 * kPi, 2.0 * kPi);
    const double got = yaw_from_rotation(rot_z(theta));
    // atan2 can land on -pi where wrap gives +pi; compare on the circle.
    EXPECT_NEAR(std::abs(wrap_angle(got - wrap_angle(theta))), 0.0, 1e-9) << theta;
  }
}

TEST(YawFromRotation, EulerRoundTrip) {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double yaw = rng.uniform(-3.0, 3.0);
    const double pitch = rng.uniform(-1.4, 1.4);
    const double roll = rng.uniform(-3.0, 3.0);
    EXPECT_NEAR(yaw_from_rotation(rotation_from_ypr(yaw, pitch, roll)), yaw, 1e-9);
  }
}

TEST(RigidTransform, ComposeIdentityAndInverse) {
  Rng rng(7);
  const RigidTransform t = testing::random_transform(rng);
  const RigidTransform a = compose(t, RigidTransform::identity());
  EXPECT_LT(testing::max_abs_diff(a.rotation, t.rotation), 1e-15);
  EXPECT_LT((a.translation - t.translation).cwiseAbs().maxCoeff(), 1e-15);

  const RigidTransform id = compose(t, invert(t));
  EXPECT_LT(testing::max_abs_diff(id.rotation, Mat3::Identity()), 1e-9);
  EXPECT_LT(id.translation.cwiseAbs().maxCoeff(), 1e-9);
}

TEST(RigidTransform, PureTranslations) {
  const RigidTransform a{Mat3::Identity(), Vec3(1, 2, 3)};
  const RigidTransform b{Mat3::Identity(), Vec3(-0.5, 4, 0.25)};
  EXPECT_EQ(compose(a, b).translation, Vec3(0.5, 6, 3.25));
  EXPECT_EQ(compose(b, a).translation, Vec3(0.5, 6, 3.25));
  EXPECT_EQ(invert(a).translation, Vec3(-1, -2, -3));
  EXPECT_EQ(invert(RigidTransform::identity()).rotation, Mat3::Identity());
  EXPECT_EQ(invert(RigidTransform::identity()).translation, Vec3::Zero());
}

TEST(RigidTransform, RandomInverseProperties) {
  Rng rng(13);
  for (int i = 0; i < 500; ++i) {
    const RigidTransform t = testing::random_transform(rng);
    ASSERT_TRUE(is_valid_rotation(t.rotation));
    const RigidTransform id = compose(invert(t), t);
    EXPECT_LT(testing::max_abs_diff(id.rotation, Mat3::Identity()), 1e-9);
    EXPECT_LT(id.translation.cwiseAbs().maxCoeff(), 1e-9);
    const RigidTransform tt = invert(invert(t));
    EXPECT_LT(testing::max_abs_diff(tt.rotation, t.rotation), 1e-12);
    EXPECT_LT((tt.translation - t.translation).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Pose4, TransformRoundTrip) {
  const Pose4 p{0.1, -0.2, 0.5, 0.7};
  const Pose4 q = pose4_from_transform(transform_from_pose4(p));
  EXPECT_NEAR(q.x, p.x, 1e-15);
  EXPECT_NEAR(q.y, p.y, 1e-15);
  EXPECT_NEAR(q.z, p.z, 1e-15);
  EXPECT_NEAR(q.yaw, p.yaw, 1e-15);
}

}  // namespace
}  // namespace perch
