// Copyright 2026 The gripsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <random>

#include "gripsim/gripper.hpp"

using namespace gripsim;

namespace {

const GripperGeometry kGeom{};
const ActuatorLimits kLimits{};

}  // namespace

TEST(TorqueToTipForce, PeakTorqueGivesRatedPinchForce) {
  EXPECT_NEAR(torque_to_tip_force(16.5, kGeom), 110.0, 1e-12);
  EXPECT_EQ(torque_to_tip_force(0.0, kGeom), 0.0);
  EXPECT_NEAR(torque_to_tip_force(10.6, kGeom), 70.666666666666667, 1e-9);
}

TEST(TorqueToTipForce, NegativeTorqueIsDomainError) {
  EXPECT_THROW(torque_to_tip_force(-0.1, kGeom), std::domain_error);
  EXPECT_THROW(tip_force_to_torque(-1.0, kGeom), std::domain_error);
}

TEST(TipForceToTorque, InvertsLever) {
  EXPECT_NEAR(tip_force_to_torque(110.0, kGeom), 16.5, 1e-12);
  EXPECT_EQ(tip_force_to_torque(0.0, kGeom), 0.0);
  EXPECT_NEAR(tip_force_to_torque(70.666666666666667, kGeom), 10.6, 1e-9);
}

TEST(TorqueToTipForce, AffineOffsetShiftsCurve) {
  GripperGeometry g = kGeom;
  g.force_offset_n = -4.0;
  EXPECT_NEAR(torque_to_tip_force(16.5, g), 106.0, 1e-12);
  EXPECT_EQ(torque_to_tip_force(0.3, g), 0.0);  // friction dead zone clamps at zero
  EXPECT_NEAR(tip_force_to_torque(106.0, g), 16.5, 1e-12);
}

TEST(TorqueToTipForce, LinearityAndRoundTripProperty) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> torque(0.0, 20.0), lever(0.05, 0.4);
  for (int i = 0; i < 1000; ++i) {
    GripperGeometry g;
    g.lever_arm = lever(rng);
    const double a = torque(rng), b = torque(rng);
    EXPECT_NEAR(torque_to_tip_force(a + b, g), torque_to_tip_force(a, g) + torque_to_tip_force(b, g),
                1e-12 * (1.0 + torque_to_tip_force(a + b, g)));
    EXPECT_NEAR(tip_force_to_torque(torque_to_tip_force(a, g), g), a, 1e-12 * (1.0 + a));
  }
}

TEST(ClampTorque, SaturatesAtPeakOrContinuous) {
  EXPECT_EQ(clamp_torque(20.0, kLimits, false), 16.5);
  EXPECT_EQ(clamp_torque(5.0, kLimits, false), 5.0);
  EXPECT_EQ(clamp_torque(16.5, kLimits, true), 10.0);
  EXPECT_EQ(clamp_torque(-30.0, kLimits, false), -16.5);
}

TEST(ClampTorque, IdempotentAndMonotone) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> torque(-40.0, 40.0);
  for (int i = 0; i < 1000; ++i) {
    const bool derated = i % 2 == 0;
    const double a = torque(rng), b = torque(rng);
    const double ca = clamp_torque(a, kLimits, derated);
    EXPECT_EQ(clamp_torque(ca, kLimits, derated), ca);
    if (a <= b) {
      EXPECT_LE(ca, clamp_torque(b, kLimits, derated));
    }
  }
}

TEST(ImpedanceTorque, SpringLawWithClamp) {
  JawState s;
  s.angle = 0.6;
  EXPECT_EQ(impedance_torque({10.0, 0.0}, 0.6, s, kLimits), 0.0);
  EXPECT_NEAR(impedance_torque({10.0, 0.0}, 1.1, s, kLimits), 5.0, 1e-12);
  EXPECT_EQ(impedance_torque({100.0, 0.0}, 1.6, s, kLimits), 16.5);
  s.velocity = 0.5;
  EXPECT_NEAR(impedance_torque({10.0, 2.0}, 1.1, s, kLimits), 4.0, 1e-12);
  EXPECT_THROW(impedance_torque({-1.0, 0.0}, 0.0, s, kLimits), std::domain_error);
}

TEST(StepJaw, PositiveTorqueCloses) {
  JawState s;
  s.angle = 1.0;
  const JawState n = step_jaw(s, 5.0, 0.0, 0.01, kGeom, kLimits);
  EXPECT_LT(n.angle, s.angle);
  EXPECT_LT(n.velocity, 0.0);
}

TEST(StepJaw, RigidObjectTransmitsFullTorque) {
  JawState s;
  s.angle = 0.5;
  s.in_contact = true;
  const JawState n = step_jaw(s, 16.5, 0.0, 0.01, kGeom, kLimits, 0.5);
  EXPECT_EQ(n.angle, 0.5);
  EXPECT_TRUE(n.in_contact);
  EXPECT_NEAR(grip_force(n, kGeom), 110.0, 1e-12);
}

TEST(StepJaw, ClosingStopsAtContactAngle) {
  JawState s;
  s.angle = kGeom.jaw_angle_max;
  const double contact = *kGeom.contact_angle(0.07);
  for (int i = 0; i < 200; ++i) s = step_jaw(s, 10.0, 0.0, 0.01, kGeom, kLimits, contact);
  EXPECT_TRUE(s.in_contact);
  EXPECT_DOUBLE_EQ(s.angle, contact);
  EXPECT_NEAR(kGeom.aperture(s.angle), 0.07, 1e-12);
  EXPECT_NEAR(grip_force(s, kGeom), 10.0 / 0.15, 1e-9);
}

TEST(StepJaw, ZeroTorqueAtRestIsEquilibrium) {
  JawState s;
  s.angle = 0.7;
  const JawState n = step_jaw(s, 0.0, 0.0, 0.02, kGeom, kLimits);
  EXPECT_EQ(n.angle, s.angle);
  EXPECT_EQ(n.velocity, 0.0);
}

TEST(StepJaw, NonPositiveDtIsDomainError) {
  EXPECT_THROW(step_jaw(JawState{}, 1.0, 0.0, 0.0, kGeom, kLimits), std::domain_error);
}

TEST(StepJaw, StaysInRangeAndWithinPeakProperty) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> torque(-40.0, 40.0), dt(1e-4, 0.1);
  std::uniform_real_distribution<double> width(0.0, 0.2);
  JawState s;
  for (int i = 0; i < 5000; ++i) {
    const std::optional<double> contact = i % 3 ? kGeom.contact_angle(width(rng)) : std::nullopt;
    s = step_jaw(s, torque(rng), 0.0, dt(rng), kGeom, kLimits, contact, i % 5 == 0);
    ASSERT_GE(s.angle, kGeom.jaw_angle_min);
    ASSERT_LE(s.angle, kGeom.jaw_angle_max);
    ASSERT_LE(std::abs(s.applied_torque), kLimits.peak_torque);
  }
}

TEST(GripperGeometry, ContactAngleRejectsOversizedObjects) {
  EXPECT_FALSE(kGeom.contact_angle(0.5).has_value());
  EXPECT_TRUE(kGeom.contact_angle(0.1).has_value());
}
