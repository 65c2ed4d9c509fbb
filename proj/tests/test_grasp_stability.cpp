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

#include "gripsim/grasp_stability.hpp"

using namespace gripsim;

namespace {

const GripperGeometry kGeom{};
const ContactModel kWood{0.589, 2, "wood-rubber"};

}  // namespace

TEST(RequiredTorqueStatic, AnchorMasses) {
  // m g L / (n mu), evaluated by hand.
  EXPECT_NEAR(required_torque_static({8.0, "wood"}, kWood, kGeom), 8.0 * 9.81 * 0.15 / (2 * 0.589), 1e-12);
  EXPECT_NEAR(required_torque_static({8.0, "wood"}, kWood, kGeom), 10.0, 0.01);
  EXPECT_NEAR(required_torque_static({10.0, "wood"}, kWood, kGeom), 12.491511035653652, 1e-9);
  EXPECT_LT(required_torque_static({0.001, "wood"}, kWood, kGeom), 2e-3);
}

TEST(RequiredTorqueStatic, BackSolvedFrictionMatchesAnchor) {
  // 8 kg held at exactly the 10 N·m continuous torque.
  const double mu = 8.0 * 9.81 * 0.15 / (2 * 10.0);
  EXPECT_NEAR(mu, 0.5886, 1e-12);
  EXPECT_NEAR(mu, kWood.friction_mu, 5e-4);
}

TEST(RequiredTorqueStatic, MonotoneInMassAndFriction) {
  double prev = 0.0;
  for (double m = 0.2; m <= 15.0; m += 0.2) {
    const double tau = required_torque_static({m, "wood"}, kWood, kGeom);
    ASSERT_GT(tau, prev);
    prev = tau;
  }
  prev = INFINITY;
  for (double mu = 0.1; mu <= 1.5; mu += 0.05) {
    const double tau = required_torque_static({5.0, "wood"}, {mu, 2, "x"}, kGeom);
    ASSERT_LT(tau, prev);
    prev = tau;
  }
}

TEST(MaxAcceleration, DynamicAnchors) {
  EXPECT_NEAR(max_acceleration({5.864, "wood"}, 10.6, kWood, kGeom), 4.3859981809913595, 1e-9);
  EXPECT_NEAR(max_acceleration({3.02, "wood"}, 10.6, kWood, kGeom), 17.75467991169978, 1e-9);
}

TEST(MaxAcceleration, ZeroAtStaticLimitMass) {
  const double tau = 10.6;
  const double m_limit = kWood.tangential_capacity(torque_to_tip_force(tau, kGeom)) / 9.81;
  EXPECT_NEAR(max_acceleration({m_limit, "wood"}, tau, kWood, kGeom), 0.0, 1e-12);
  EXPECT_NEAR(required_torque_static({m_limit, "wood"}, kWood, kGeom), tau, 1e-12);
}

TEST(MaxAcceleration, ForceBalanceIdentity) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> mass(0.1, 20.0), torque(0.0, 16.5), mu(0.1, 1.2);
  for (int i = 0; i < 1000; ++i) {
    const ContactModel c{mu(rng), 1 + i % 3, "x"};
    const double m = mass(rng), tau = torque(rng);
    const double a = max_acceleration({m, "x"}, tau, c, kGeom);
    EXPECT_NEAR(m * (9.81 + a), c.contact_count * c.friction_mu * tau / kGeom.lever_arm, 1e-9);
  }
}

TEST(SlipCheck, BoundaryAndCases) {
  const Payload p{8.0, "wood"};
  const double exact = p.mass_kg * 9.81 / (2 * kWood.friction_mu);
  EXPECT_EQ(slip_check(exact, p, 0.0, kWood), GraspStatus::Holds);
  EXPECT_EQ(slip_check(std::nextafter(exact, 0.0), p, 0.0, kWood), GraspStatus::Slips);
  EXPECT_EQ(slip_check(110.0, p, 0.0, kWood), GraspStatus::Holds);
  EXPECT_EQ(slip_check(0.0, {0.01, "wood"}, 0.0, kWood), GraspStatus::Slips);
}

TEST(SlipCheck, DualityWithRequiredTorque) {
  for (double m = 0.5; m <= 12.0; m += 0.5) {
    const Payload p{m, "wood"};
    const double F = torque_to_tip_force(required_torque_static(p, kWood, kGeom), kGeom);
    EXPECT_EQ(slip_check(F * (1 + 1e-12), p, 0.0, kWood), GraspStatus::Holds);
    EXPECT_EQ(slip_check(F * (1 - 1e-9), p, 0.0, kWood), GraspStatus::Slips);
  }
}

TEST(MaterialMu, LookupAndErrors) {
  auto table = default_material_table();
  EXPECT_EQ(material_mu("wood-rubber", table), 0.589);
  table["steel-rubber"] = 0.41;
  EXPECT_EQ(material_mu("steel-rubber", table), 0.41);
  try {
    material_mu("ice-teflon", table);
    FAIL() << "expected UnknownMaterialError";
  } catch (const UnknownMaterialError& e) {
    EXPECT_NE(std::string(e.what()).find("wood-rubber"), std::string::npos);
  }
}
