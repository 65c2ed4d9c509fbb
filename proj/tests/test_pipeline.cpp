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

#include <cmath>
#include <random>

#include "gripsim/pipeline.hpp"

using namespace gripsim;

namespace {

Detection det(const std::string& label, double u, double v, double half = 10.0, double conf = 0.9) {
  Detection d;
  d.class_label = label;
  d.bbox = {u - half, v - half, u + half, v + half};
  d.centroid_u = u;
  d.centroid_v = v;
  d.confidence = conf;
  return d;
}

std::vector<Command> cmds(std::initializer_list<const char*> texts) {
  std::vector<Command> out;
  for (const char* t : texts) out.push_back(parse_command(t, coco_classes()));
  return out;
}

// Drives the controller against an ideal arm that lands on every reference.
struct Harness {
  explicit Harness(PipelineConfig cfg = {}) : pipeline(cfg) { in.tcp.position = cfg.prescan_position; }

  GraspPipeline pipeline;
  PipelineInputs in;
  std::vector<Detection> detections;
  std::vector<Command> commands;
  std::vector<std::string> events;
  double t = 0.0;

  PipelineOutput tick() {
    in.time_s = t;
    in.detections = detections;
    in.commands = commands;
    const PipelineOutput out = pipeline.tick(in, 0.02);
    commands.clear();
    events.insert(events.end(), out.events.begin(), out.events.end());
    in.tcp.position = out.arm_ref.position;
    in.tcp.wrist_yaw = out.arm_ref.wrist_yaw;
    in.tcp.wrist_pitch = out.arm_ref.wrist_pitch;
    t += 0.02;
    return out;
  }

  bool saw(const std::string& e) const { return std::find(events.begin(), events.end(), e) != events.end(); }
};

}  // namespace

TEST(AlignmentAngles, PixelToDegrees) {
  const CameraModel cam;
  auto a = alignment_angles(det("cup", 320, 240), cam);
  EXPECT_EQ(a.horizontal_deg, 0.0);
  EXPECT_EQ(a.vertical_deg, 0.0);
  a = alignment_angles(det("cup", 480, 240), cam);
  EXPECT_NEAR(a.horizontal_deg, 15.0, 1e-12);
  a = alignment_angles(det("cup", 0, 480), cam);
  EXPECT_NEAR(a.horizontal_deg, -30.0, 1e-12);
  EXPECT_NEAR(a.vertical_deg, 22.5, 1e-12);
  EXPECT_THROW(alignment_angles(det("cup", 641, 240), cam), std::domain_error);
  EXPECT_THROW(alignment_angles(det("cup", 320, -1), cam), std::domain_error);
}

TEST(PdUpdate, FixedPointAndProportionalStep) {
  const Vec3 ref{0.4, 0.1, 0.3};
  EXPECT_EQ(pd_update(ref, AlignState{}, ControllerGains{}), ref);
  AlignState a;
  a.theta_h = a.theta_h_prev = 15.0;
  const Vec3 next = pd_update(ref, a, ControllerGains{0.01, 0.0});
  EXPECT_NEAR(std::abs(next.y() - ref.y()), 0.15, 1e-12);
  EXPECT_EQ(next.x(), ref.x());
  EXPECT_EQ(next.z(), ref.z());
}

TEST(PdUpdate, DerivativeTermUsesChange) {
  AlignState a;
  a.theta_v_prev = 2.0;
  a.theta_v = 3.0;
  const Vec3 next = pd_update(Vec3::Zero(), a, ControllerGains{0.001, 0.01});
  EXPECT_NEAR(next.z(), -(0.001 * 3.0 + 0.01 * 1.0), 1e-15);
  EXPECT_EQ(next.y(), 0.0);
}

TEST(PdUpdate, ClosedLoopContractsAtLoopGain) {
  const ControllerGains gains{0.0003, 0.0};
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> dist(0.3, 1.5), err(-0.05, 0.05);
  for (int trial = 0; trial < 50; ++trial) {
    const double d = dist(gen);
    const double g = alignment_loop_gain(gains, d);
    ASSERT_GT(g, 0.0);
    ASSERT_LT(g, 2.0);
    Vec3 ref{0.0, err(gen), err(gen)};
    for (int k = 0; k < 200; ++k) {
      AlignState a;
      a.theta_h = a.theta_h_prev = std::atan2(ref.y(), d) * kDegPerRad;
      a.theta_v = a.theta_v_prev = std::atan2(ref.z(), d) * kDegPerRad;
      const Vec3 next = pd_update(ref, a, gains);
      if (std::abs(ref.y()) > 1e-9) {
        const double ratio = next.y() / ref.y();
        EXPECT_NEAR(ratio, 1.0 - g, 0.01 * g);
      }
      ref = next;
    }
  }
}

TEST(ParseCommand, Grammar) {
  const auto& known = coco_classes();
  EXPECT_EQ(parse_command("bottle", known).kind, Command::Kind::GraspClass);
  EXPECT_EQ(parse_command("  Cell   PHONE ", known).label, "cell phone");
  EXPECT_EQ(parse_command("OPEN", known).kind, Command::Kind::Open);
  EXPECT_EQ(parse_command("xyzzy", known).kind, Command::Kind::Unknown);
  EXPECT_EQ(parse_command("", known).kind, Command::Kind::Unknown);
}

TEST(PhaseGraph, LegalTransitions) {
  using P = PipelinePhase;
  EXPECT_TRUE(is_legal_transition(P::PreScan, P::Scan));
  EXPECT_TRUE(is_legal_transition(P::Scan, P::Align));
  EXPECT_TRUE(is_legal_transition(P::Align, P::Reach));
  EXPECT_TRUE(is_legal_transition(P::Reach, P::Grasp));
  EXPECT_TRUE(is_legal_transition(P::Grasp, P::Handover));
  EXPECT_TRUE(is_legal_transition(P::Handover, P::PreScan));
  EXPECT_FALSE(is_legal_transition(P::Scan, P::Grasp));
  EXPECT_FALSE(is_legal_transition(P::PreScan, P::Handover));
  EXPECT_FALSE(is_legal_transition(P::Reach, P::Align));
  for (auto p : {P::PreScan, P::Scan, P::Align, P::Reach, P::Grasp, P::Handover}) {
    EXPECT_FALSE(is_legal_transition(p, p));
    EXPECT_EQ(parse_phase(to_string(p)), p);
  }
  EXPECT_FALSE(parse_phase("Idle").has_value());
}

TEST(SelectTarget, LargestThenLeftmost) {
  std::vector<Detection> ds{det("cup", 400, 240, 10), det("cup", 200, 240, 20), det("cup", 100, 240, 20),
                            det("bottle", 300, 240, 50), det("cup", 50, 240, 40, 0.2)};
  const auto t = select_target(ds, "cup", 0.5);
  ASSERT_TRUE(t.has_value());
  EXPECT_EQ(t->centroid_u, 100);
  EXPECT_FALSE(select_target(ds, "book", 0.5).has_value());
}

TEST(GraspPipeline, NoCommandStaysInScan) {
  Harness h;
  h.detections = {det("bottle", 320, 240)};
  for (int i = 0; i < 500; ++i) h.tick();
  EXPECT_EQ(h.pipeline.phase(), PipelinePhase::Scan);
}

TEST(GraspPipeline, FullCycleWithSyntheticSensors) {
  Harness h;
  h.tick();
  EXPECT_EQ(h.pipeline.phase(), PipelinePhase::Scan);
  h.commands = cmds({"bottle"});
  h.detections = {det("bottle", 330, 235)};
  // Let the wrist sit near neutral so the approach axis check passes.
  h.tick();
  EXPECT_EQ(h.pipeline.phase(), PipelinePhase::Align);
  h.detections = {det("bottle", 321, 240)};
  for (int i = 0; i < 5; ++i) h.tick();
  EXPECT_EQ(h.pipeline.phase(), PipelinePhase::Reach);
  h.in.tof_m = 0.3;
  const PipelineOutput reach = h.tick();
  EXPECT_NEAR(reach.arm_ref.position.x(), PipelineConfig{}.prescan_position.x() + 0.25, 1e-12);
  h.in.tof_m = 0.11;
  h.tick();
  EXPECT_EQ(h.pipeline.phase(), PipelinePhase::Grasp);
  h.in.jaw.in_contact = true;
  h.in.holding_object = true;
  const PipelineOutput grasp = h.tick();
  EXPECT_DOUBLE_EQ(grasp.gripper_torque, 10.0);
  EXPECT_TRUE(h.saw("grasped"));
  h.tick();
  EXPECT_EQ(h.pipeline.phase(), PipelinePhase::Handover);
  h.commands = cmds({"open"});
  const PipelineOutput open = h.tick();
  EXPECT_DOUBLE_EQ(open.gripper_torque, -3.0);
  h.in.jaw.angle = PipelineConfig{}.geometry.jaw_angle_max;
  h.in.holding_object = false;
  h.tick();
  EXPECT_EQ(h.pipeline.phase(), PipelinePhase::PreScan);
  EXPECT_TRUE(h.saw("released"));
  EXPECT_FALSE(h.pipeline.requested_class().has_value());
}

TEST(GraspPipeline, CommandsOutsideTheirPhaseAreIgnored) {
  Harness h;
  h.tick();
  h.commands = cmds({"open", "xyzzy"});
  h.tick();
  EXPECT_TRUE(h.saw("command-ignored:open"));
  EXPECT_TRUE(h.saw("command-unknown:xyzzy"));
  EXPECT_EQ(h.pipeline.phase(), PipelinePhase::Scan);
}

TEST(GraspPipeline, SlipOnContactFailsBackToScan) {
  Harness h;
  h.tick();
  h.commands = cmds({"bottle"});
  h.detections = {det("bottle", 320, 240)};
  for (int i = 0; i < 7; ++i) h.tick();
  h.in.tof_m = 0.1;
  h.tick();
  ASSERT_EQ(h.pipeline.phase(), PipelinePhase::Grasp);
  h.in.jaw.in_contact = true;
  h.in.holding_object = false;
  h.tick();
  EXPECT_TRUE(h.saw("grasp-failure:slip"));
  EXPECT_EQ(h.pipeline.phase(), PipelinePhase::Scan);
  EXPECT_FALSE(h.pipeline.requested_class().has_value());
}

TEST(GraspPipeline, LostDetectionReturnsToScan) {
  Harness h;
  h.tick();
  h.commands = cmds({"bottle"});
  h.detections = {det("bottle", 400, 240)};
  h.tick();
  ASSERT_EQ(h.pipeline.phase(), PipelinePhase::Align);
  h.detections.clear();
  for (int i = 0; i < 9; ++i) h.tick();
  EXPECT_EQ(h.pipeline.phase(), PipelinePhase::Align);
  h.tick();
  EXPECT_EQ(h.pipeline.phase(), PipelinePhase::Scan);
  EXPECT_TRUE(h.saw("detection-lost"));
}

TEST(GraspPipeline, DeratingCapsOutputTorque) {
  PipelineConfig cfg;
  cfg.grasp_torque = 16.0;
  Harness h(cfg);
  h.tick();
  h.commands = cmds({"bottle"});
  h.detections = {det("bottle", 320, 240)};
  for (int i = 0; i < 7; ++i) h.tick();
  h.in.tof_m = 0.1;
  h.tick();
  ASSERT_EQ(h.pipeline.phase(), PipelinePhase::Grasp);
  EXPECT_DOUBLE_EQ(h.tick().gripper_torque, 16.0);
  h.in.thermal_derated = true;
  EXPECT_DOUBLE_EQ(h.tick().gripper_torque, 10.0);
}
