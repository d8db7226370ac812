#include <gtest/gtest.h>

#include "perch/fusion.hpp"
#include "perch/rng.hpp"

namespace perch {
namespace {

Pose4 random_pose(Rng &rng) {
  return {rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(0.05, 1.2), rng.uniform(-kPi, kPi)};
}

SigmaSet random_sigma(Rng &rng) { return {rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()}; }

TEST(SelectStage, TruthTable) {
  EXPECT_EQ(select_stage(true, false), Stage::kS1);
  EXPECT_EQ(select_stage(true, true), Stage::kS2);
  EXPECT_EQ(select_stage(false, true), Stage::kS3);
  EXPECT_EQ(select_stage(false, false), Stage::kNone);
}

TEST(Merge, AgreementFixedPoint) {
  const Pose4 p{0.1, 0.2, 0.5, 0.3};
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const Pose4 out = merge(Stage::kS2, p, p, random_sigma(rng));
    EXPECT_NEAR(out.x, p.x, 1e-15);
    EXPECT_NEAR(out.y, p.y, 1e-15);
    EXPECT_NEAR(out.z, p.z, 1e-15);
    EXPECT_NEAR(out.yaw, p.yaw, 1e-15);
  }
}

TEST(Merge, UnitWeightsSelectLargeMarker) {
  const Pose4 p1{0.1, -0.3, 0.4, 2.0};
  const Pose4 p2{0.5, 0.2, 0.9, -1.0};
  EXPECT_EQ(merge(Stage::kS2, p1, p2, {1, 1, 1, 1}), p1);
  EXPECT_EQ(merge(Stage::kS2, p1, p2, {0, 0, 0, 0}), p2);
}

TEST(Merge, HandArithmeticWithShippedSigma) {
  const SigmaSet s;  // 0.275, 0.306, 0.728, 0.469
  const Pose4 out = merge(Stage::kS2, Pose4{0.10, 0, 0.50, 0}, Pose4{0.12, 0, 0.48, 0}, s);
  EXPECT_NEAR(out.x, 0.1145, 1e-15);
  EXPECT_NEAR(out.z, 0.49456, 1e-15);
  EXPECT_EQ(out.y, 0.0);
  EXPECT_EQ(out.yaw, 0.0);
}

TEST(Merge, ShippedDefaults) {
  const SigmaSet s;
  EXPECT_EQ(s.x, 0.275);
  EXPECT_EQ(s.y, 0.306);
  EXPECT_EQ(s.z, 0.728);
  EXPECT_EQ(s.psi, 0.469);
}

TEST(Merge, PassThroughStages) {
  const Pose4 a{1, 2, 3, 0.4};
  const Pose4 b{5, 6, 7, -0.8};
  EXPECT_EQ(merge(Stage::kS1, a, std::nullopt, {}), a);
  EXPECT_EQ(merge(Stage::kS1, a, b, {}), a);
  EXPECT_EQ(merge(Stage::kS3, std::nullopt, b, {}), b);
}

TEST(Merge, ContractViolations) {
  const Pose4 a{1, 2, 3, 0.4};
  for (auto call : {+[](const Pose4 &p) { merge(Stage::kS2, p, std::nullopt, {}); },
                    +[](const Pose4 &p) { merge(Stage::kS1, std::nullopt, p, {}); },
                    +[](const Pose4 &p) { merge(Stage::kS3, p, std::nullopt, {}); },
                    +[](const Pose4 &p) { merge(Stage::kNone, p, p, {}); }}) {
    try {
      call(a);
      FAIL();
    } catch (const Error &e) {
      EXPECT_EQ(e.code(), ErrorCode::kContractViolation);
    }
  }
}

TEST(Merge, BlendEqualsMatrixProductForNonWrappingYaw) {
  Rng rng(4);
  for (int i = 0; i < 2000; ++i) {
    const Pose4 p1 = random_pose(rng);
    Pose4 p2 = random_pose(rng);
    if (std::abs(p1.yaw - p2.yaw) >= kPi) p2.yaw = p1.yaw * 0.5;
    const SigmaSet s = random_sigma(rng);
    Eigen::Matrix<double, 8, 1> stacked;
    stacked << p1.x, p2.x, p1.y, p2.y, p1.z, p2.z, p1.yaw, p2.yaw;
    const Eigen::Vector4d ref = blend_matrix(s) * stacked;
    const Pose4 out = merge(Stage::kS2, p1, p2, s);
    EXPECT_NEAR(out.x, ref(0), 1e-12);
    EXPECT_NEAR(out.y, ref(1), 1e-12);
    EXPECT_NEAR(out.z, ref(2), 1e-12);
    EXPECT_NEAR(out.yaw, ref(3), 1e-12);
  }
}

TEST(Merge, BlendLiesBetweenInputs) {
  Rng rng(6);
  for (int i = 0; i < 2000; ++i) {
    const Pose4 p1 = random_pose(rng);
    const Pose4 p2 = random_pose(rng);
    const Pose4 out = merge(Stage::kS2, p1, p2, random_sigma(rng));
    EXPECT_LE(std::abs(out.x - p1.x), std::abs(p1.x - p2.x) + 1e-15);
    EXPECT_LE(std::abs(out.y - p1.y), std::abs(p1.y - p2.y) + 1e-15);
    EXPECT_LE(std::abs(out.z - p1.z), std::abs(p1.z - p2.z) + 1e-15);
    EXPECT_LE(std::abs(wrap_angle(out.yaw - p1.yaw)), std::abs(wrap_angle(p1.yaw - p2.yaw)) + 1e-12);
  }
}

TEST(Merge, YawBlendsAcrossTheSeam) {
  const SigmaSet s{0.5, 0.5, 0.5, 0.5};
  const Pose4 out = merge(Stage::kS2, Pose4{0, 0, 1, deg_to_rad(170)}, Pose4{0, 0, 1, deg_to_rad(-170)}, s);
  EXPECT_NEAR(std::abs(out.yaw), kPi, 1e-12);
}

TEST(FuseFrame, StageDispatch) {
  const SigmaSet s;
  const Pose4 a{0.1, 0, 0.3, 0.1};
  const Pose4 b{0.12, 0, 0.28, 0.12};
  auto only_large = fuse_frame({997, a}, {5, std::nullopt}, s);
  ASSERT_TRUE(only_large);
  EXPECT_EQ(only_large->stage, Stage::kS1);
  EXPECT_EQ(only_large->pose, a);
  EXPECT_EQ(only_large->sources, std::vector<int>{997});

  auto both = fuse_frame({997, a}, {5, b}, s);
  ASSERT_TRUE(both);
  EXPECT_EQ(both->stage, Stage::kS2);
  EXPECT_EQ(both->pose, merge(Stage::kS2, a, b, s));
  EXPECT_EQ(both->sources, (std::vector<int>{997, 5}));

  auto only_small = fuse_frame({997, std::nullopt}, {5, b}, s);
  ASSERT_TRUE(only_small);
  EXPECT_EQ(only_small->stage, Stage::kS3);

  EXPECT_FALSE(fuse_frame({997, std::nullopt}, {5, std::nullopt}, s));
}

TEST(SigmaSet, Validation) {
  EXPECT_NO_THROW(SigmaSet{}.validate());
  EXPECT_THROW((SigmaSet{1.1, 0, 0, 0}.validate()), Error);
  EXPECT_THROW((SigmaSet{0, 0, -0.1, 0}.validate()), Error);
}

}  // namespace
}  // namespace perch
