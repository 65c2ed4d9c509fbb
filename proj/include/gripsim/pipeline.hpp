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

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gripsim/gripper.hpp"
#include "gripsim/scene.hpp"

namespace gripsim {

enum class PipelinePhase { PreScan, Scan, Align, Reach, Grasp, Handover };

inline std::string_view to_string(PipelinePhase phase) {
  switch (phase) {
    case PipelinePhase::PreScan: return "PreScan";
    case PipelinePhase::Scan: return "Scan";
    case PipelinePhase::Align: return "Align";
    case PipelinePhase::Reach: return "Reach";
    case PipelinePhase::Grasp: return "Grasp";
    case PipelinePhase::Handover: return "Handover";
  }
  return "?";
}

inline std::optional<PipelinePhase> parse_phase(std::string_view name) {
  for (auto p : {PipelinePhase::PreScan, PipelinePhase::Scan, PipelinePhase::Align, PipelinePhase::Reach,
                 PipelinePhase::Grasp, PipelinePhase::Handover}) {
    if (to_string(p) == name) return p;
  }
  return std::nullopt;
}

/// Edges of the grasping cycle plus the recovery edges back to Scan
/// (detection lost during Align, slip during Grasp or Handover).
inline bool is_legal_transition(PipelinePhase from, PipelinePhase to) {
  using P = PipelinePhase;
  switch (from) {
    case P::PreScan: return to == P::Scan;
    case P::Scan: return to == P::Align;
    case P::Align: return to == P::Reach || to == P::Scan;
    case P::Reach: return to == P::Grasp;
    case P::Grasp: return to == P::Handover || to == P::Scan;
    case P::Handover: return to == P::PreScan || to == P::Scan;
  }
  return false;
}

/// Gains of the incremental Cartesian reference update, in metres per degree.
struct ControllerGains {
  double kp = 0.0003;
  double kd = 0.0001;

  void validate() const {
    if (!(kp > 0.0)) throw std::invalid_argument("controller kp must be > 0");
    if (kd < 0.0) throw std::invalid_argument("controller kd must be >= 0");
  }
};

struct AlignmentAngles {
  double horizontal_deg = 0.0;
  double vertical_deg = 0.0;
};

struct AlignState {
  double theta_h = 0.0;  // degrees
  double theta_v = 0.0;
  double theta_h_prev = 0.0;
  double theta_v_prev = 0.0;
  int consecutive_in_band = 0;
};

/// Linear pixel-to-angle map about the image center, degrees.
inline AlignmentAngles alignment_angles(const Detection& detection, const CameraModel& camera) {
  if (detection.centroid_u < 0.0 || detection.centroid_u > camera.dim_w || detection.centroid_v < 0.0 ||
      detection.centroid_v > camera.dim_h)
    throw std::domain_error("alignment_angles: centroid outside the image");
  const double ref_u = 0.5 * camera.dim_w;
  const double ref_v = 0.5 * camera.dim_h;
  return {camera.fov_h_deg / camera.dim_w * (detection.centroid_u - ref_u),
          camera.fov_v_deg / camera.dim_h * (detection.centroid_v - ref_v)};
}

/// Incremental PD step on the TCP reference. x is untouched.
///
/// Image u grows to the right and v grows downward while torso y points left
/// and z points up, so both corrections enter with a negative sign; with the
/// opposite sign the loop diverges.
inline Vec3 pd_update(const Vec3& prev_ref, const AlignState& align, const ControllerGains& gains) {
  Vec3 next = prev_ref;
  next.y() -= gains.kp * align.theta_h + gains.kd * (align.theta_h - align.theta_h_prev);
  next.z() -= gains.kp * align.theta_v + gains.kd * (align.theta_v - align.theta_v_prev);
  return next;
}

/// Per-tick contraction gain of the alignment loop for an object at
/// `distance_m` when the TCP tracks its reference exactly and kd = 0. The loop
/// contracts for gains in (0, 2).
inline double alignment_loop_gain(const ControllerGains& gains, double distance_m) {
  return gains.kp * kDegPerRad / distance_m;
}

struct Command {
  enum class Kind { GraspClass, Open, Unknown };
  Kind kind = Kind::Unknown;
  std::string label;
  std::string raw_text;
};

inline std::string normalize_command_text(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

inline Command parse_command(std::string_view text, std::span<const std::string> known_classes) {
  Command cmd;
  cmd.raw_text = std::string(text);
  const std::string norm = normalize_command_text(text);
  if (norm == "open") {
    cmd.kind = Command::Kind::Open;
  } else if (is_known_class(norm, known_classes)) {
    cmd.kind = Command::Kind::GraspClass;
    cmd.label = norm;
  }
  return cmd;
}

struct PipelineConfig {
  ControllerGains gains;
  CameraModel camera;
  ActuatorLimits actuator;
  GripperGeometry geometry;
  WristScanParams scan;
  std::vector<std::string> known_classes = coco_classes();

  Vec3 prescan_position{0.25, 0.0, 0.30};
  double posture_tolerance_m = 0.005;
  double settle_speed = 0.02;  // m/s
  double align_band_deg = 1.0;
  int align_ticks = 5;
  int loss_ticks = 10;
  double min_confidence = 0.5;
  double standoff_m = 0.05;
  double grasp_distance_m = 0.12;
  double lift_height_m = 0.10;
  double grasp_torque = 10.0;
  double open_torque = 3.0;
  double max_axis_deviation_deg = 15.0;
  double close_timeout_s = 3.0;

  void validate() const {
    gains.validate();
    camera.validate();
    actuator.validate();
    geometry.validate();
    if (align_band_deg <= 0.0 || align_ticks < 1 || loss_ticks < 1)
      throw std::invalid_argument("alignment thresholds must be positive");
    if (standoff_m < 0.0 || grasp_distance_m <= 0.0 || lift_height_m < 0.0)
      throw std::invalid_argument("reach/lift distances must be non-negative");
    if (grasp_torque <= 0.0 || open_torque <= 0.0) throw std::invalid_argument("grasp/open torque must be > 0");
  }
};

/// Everything the pipeline observes in one tick.
struct PipelineInputs {
  double time_s = 0.0;
  std::span<const Detection> detections;
  std::optional<double> tof_m;
  ImuSample imu;
  TcpState tcp;
  JawState jaw;
  bool holding_object = false;
  bool thermal_derated = false;
  std::span<const Command> commands;
};

struct PipelineOutput {
  PipelinePhase phase = PipelinePhase::PreScan;
  CartesianRef arm_ref;
  double gripper_torque = 0.0;
  std::vector<std::string> events;
  std::optional<AlignmentAngles> theta;
};

/// Picks the requested detection: largest box, then leftmost centroid.
inline std::optional<Detection> select_target(std::span<const Detection> detections, const std::string& label,
                                              double min_confidence) {
  std::optional<Detection> best;
  for (const auto& d : detections) {
    if (d.class_label != label || d.confidence < min_confidence) continue;
    if (!best || d.bbox.area() > best->bbox.area() ||
        (d.bbox.area() == best->bbox.area() && d.centroid_u < best->centroid_u))
      best = d;
  }
  return best;
}

class GraspPipeline {
 public:
  explicit GraspPipeline(PipelineConfig config) : config_(std::move(config)) {
    config_.validate();
    ref_.position = config_.prescan_position;
  }

  PipelinePhase phase() const { return phase_; }
  const std::optional<std::string>& requested_class() const { return requested_; }
  const AlignState& align_state() const { return align_; }
  const PipelineConfig& config() const { return config_; }

  PipelineOutput tick(const PipelineInputs& in, double dt) {
    if (!(dt > 0.0)) throw std::domain_error("GraspPipeline::tick: dt must be > 0");
    PipelineOutput out;
    handle_commands(in, out);

    switch (phase_) {
      case PipelinePhase::PreScan: tick_prescan(in, out); break;
      case PipelinePhase::Scan: tick_scan(in, out); break;
      case PipelinePhase::Align: tick_align(in, out); break;
      case PipelinePhase::Reach: tick_reach(in, out); break;
      case PipelinePhase::Grasp: tick_grasp(in, out); break;
      case PipelinePhase::Handover: tick_handover(in, out); break;
    }

    out.gripper_torque = clamp_torque(torque_, config_.actuator, in.thermal_derated);
    out.phase = phase_;
    out.arm_ref = ref_;
    out.theta = theta_;
    return out;
  }

 private:
  void enter(PipelinePhase next, PipelineOutput& out) {
    out.events.push_back("enter:" + std::string(to_string(next)));
    phase_ = next;
  }

  void fail(PipelineOutput& out, const std::string& why) {
    out.events.push_back("grasp-failure:" + why);
    requested_.reset();
    releasing_ = false;
    lifting_ = false;
    enter(PipelinePhase::Scan, out);
    scan_start_ = std::nullopt;
  }

  void handle_commands(const PipelineInputs& in, PipelineOutput& out) {
    for (const auto& cmd : in.commands) {
      switch (cmd.kind) {
        case Command::Kind::GraspClass:
          if (phase_ == PipelinePhase::PreScan || phase_ == PipelinePhase::Scan) {
            requested_ = cmd.label;
            out.events.push_back("command:" + cmd.label);
          } else {
            out.events.push_back("command-ignored:" + cmd.label);
          }
          break;
        case Command::Kind::Open:
          if (phase_ == PipelinePhase::Handover && !releasing_) {
            releasing_ = true;
            out.events.push_back("command:open");
          } else {
            out.events.push_back("command-ignored:open");
          }
          break;
        case Command::Kind::Unknown:
          out.events.push_back("command-unknown:" + normalize_command_text(cmd.raw_text));
          break;
      }
    }
  }

  double open_jaw_torque(const JawState& jaw) const {
    return jaw.angle < config_.geometry.jaw_angle_max - 1e-6 ? -config_.open_torque : 0.0;
  }

  bool settled_at(const TcpState& tcp, const Vec3& target) const {
    return (tcp.position - target).norm() < config_.posture_tolerance_m &&
           tcp.velocity.norm() < config_.settle_speed;
  }

  void update_theta(std::span<const Detection> detections) {
    theta_.reset();
    if (!requested_) return;
    if (auto target = select_target(detections, *requested_, config_.min_confidence))
      theta_ = alignment_angles(*target, config_.camera);
  }

  void tick_prescan(const PipelineInputs& in, PipelineOutput& out) {
    ref_ = CartesianRef{};
    ref_.position = config_.prescan_position;
    torque_ = open_jaw_torque(in.jaw);
    theta_.reset();
    const bool wrist_neutral = std::abs(in.tcp.wrist_yaw) < 0.01 && std::abs(in.tcp.wrist_pitch) < 0.01;
    if (settled_at(in.tcp, config_.prescan_position) && wrist_neutral) {
      enter(PipelinePhase::Scan, out);
      scan_start_ = std::nullopt;
    }
  }

  void tick_scan(const PipelineInputs& in, PipelineOutput& out) {
    if (!scan_start_) scan_start_ = in.time_s;
    ref_.position = config_.prescan_position;
    const WristPose pose = wrist_scan_pose(in.time_s - *scan_start_, config_.scan);
    ref_.wrist_yaw = pose.yaw;
    ref_.wrist_pitch = pose.pitch;
    torque_ = open_jaw_torque(in.jaw);
    update_theta(in.detections);
    if (!theta_) {
      axis_warned_ = false;
      return;
    }
    if (approach_axis_deviation_deg(in.tcp) > config_.max_axis_deviation_deg) {
      if (!axis_warned_) out.events.push_back("approach-axis-deviation");
      axis_warned_ = true;
      return;
    }
    axis_warned_ = false;
    align_ = AlignState{theta_->horizontal_deg, theta_->vertical_deg, theta_->horizontal_deg,
                        theta_->vertical_deg, 0};
    lost_ticks_ = 0;
    ref_.position = in.tcp.position;
    enter(PipelinePhase::Align, out);
  }

  void servo(const AlignmentAngles& theta) {
    align_.theta_h_prev = align_.theta_h;
    align_.theta_v_prev = align_.theta_v;
    align_.theta_h = theta.horizontal_deg;
    align_.theta_v = theta.vertical_deg;
    ref_.position = pd_update(ref_.position, align_, config_.gains);
  }

  void tick_align(const PipelineInputs& in, PipelineOutput& out) {
    ref_.wrist_yaw = 0.0;
    ref_.wrist_pitch = 0.0;
    torque_ = open_jaw_torque(in.jaw);
    update_theta(in.detections);
    if (!theta_) {
      align_.consecutive_in_band = 0;
      if (++lost_ticks_ >= config_.loss_ticks) {
        out.events.push_back("detection-lost");
        enter(PipelinePhase::Scan, out);
        scan_start_ = std::nullopt;
      }
      return;
    }
    lost_ticks_ = 0;
    servo(*theta_);
    const double band_rad = config_.align_band_deg / kDegPerRad;
    const bool in_band = std::abs(theta_->horizontal_deg) < config_.align_band_deg &&
                         std::abs(theta_->vertical_deg) < config_.align_band_deg &&
                         std::abs(in.tcp.wrist_yaw) < band_rad && std::abs(in.tcp.wrist_pitch) < band_rad;
    align_.consecutive_in_band = in_band ? align_.consecutive_in_band + 1 : 0;
    if (align_.consecutive_in_band >= config_.align_ticks) enter(PipelinePhase::Reach, out);
  }

  void tick_reach(const PipelineInputs& in, PipelineOutput& out) {
    torque_ = open_jaw_torque(in.jaw);
    update_theta(in.detections);
    // Lateral servoing continues while closing in.
    if (theta_) servo(*theta_);
    if (!in.tof_m) {
      out.events.push_back("tof-out-of-range");
      return;
    }
    ref_.position.x() = in.tcp.position.x() + (*in.tof_m - config_.standoff_m);
    if (*in.tof_m <= config_.grasp_distance_m) {
      closing_since_ = in.time_s;
      lifting_ = false;
      enter(PipelinePhase::Grasp, out);
    }
  }

  void tick_grasp(const PipelineInputs& in, PipelineOutput& out) {
    torque_ = config_.grasp_torque;
    update_theta(in.detections);
    if (!lifting_) {
      if (in.jaw.in_contact) {
        if (!in.holding_object) return fail(out, "slip");
        lift_target_ = in.tcp.position.z() + config_.lift_height_m;
        ref_.position = in.tcp.position;
        ref_.position.z() = lift_target_;
        lifting_ = true;
        out.events.push_back("grasped");
        return;
      }
      if (in.jaw.angle <= config_.geometry.jaw_angle_min + 1e-6) return fail(out, "miss");
      if (in.time_s - closing_since_ > config_.close_timeout_s) return fail(out, "timeout");
      return;
    }
    if (!in.holding_object) return fail(out, "slip");
    if (settled_at(in.tcp, ref_.position)) {
      lifting_ = false;
      releasing_ = false;
      enter(PipelinePhase::Handover, out);
    }
  }

  void tick_handover(const PipelineInputs& in, PipelineOutput& out) {
    update_theta(in.detections);
    if (!releasing_) {
      torque_ = config_.grasp_torque;
      if (!in.holding_object) fail(out, "slip");
      return;
    }
    torque_ = -config_.open_torque;
    if (in.jaw.angle >= config_.geometry.jaw_angle_max - 1e-6) {
      releasing_ = false;
      requested_.reset();
      out.events.push_back("released");
      enter(PipelinePhase::PreScan, out);
    }
  }

  PipelineConfig config_;
  PipelinePhase phase_ = PipelinePhase::PreScan;
  CartesianRef ref_;
  AlignState align_;
  std::optional<AlignmentAngles> theta_;
  std::optional<std::string> requested_;
  std::optional<double> scan_start_;
  double torque_ = 0.0;
  int lost_ticks_ = 0;
  bool axis_warned_ = false;
  bool lifting_ = false;
  bool releasing_ = false;
  double lift_target_ = 0.0;
  double closing_since_ = 0.0;
};

}  // namespace gripsim
