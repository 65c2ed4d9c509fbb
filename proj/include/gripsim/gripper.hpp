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
#include <cmath>
#include <optional>
#include <stdexcept>

namespace gripsim {

/// Single revolute jaw. Angles are jaw opening in radians: 0 is closed,
/// positive torque drives the jaw toward closed.
struct GripperGeometry {
  double lever_arm = 0.15;  // m, jaw tip distance from the joint center
  double jaw_angle_min = 0.0;
  double jaw_angle_max = 1.2;
  double pad_thickness = 0.004;  // m
  /// Affine term added to the ideal lever force. Zero gives F = tau / L.
  double force_offset_n = 0.0;

  void validate() const {
    if (!(lever_arm > 0.0)) throw std::invalid_argument("lever_arm must be > 0");
    if (!(jaw_angle_min < jaw_angle_max))
      throw std::invalid_argument("jaw_angle_min must be < jaw_angle_max");
    if (pad_thickness < 0.0) throw std::invalid_argument("pad_thickness must be >= 0");
  }

  /// Distance between the pads at a given opening angle (chord of the tip arc).
  double aperture(double angle) const {
    return std::max(0.0, 2.0 * lever_arm * std::sin(0.5 * angle) - 2.0 * pad_thickness);
  }

  /// Opening angle at which the pads touch an object of the given width, if it fits.
  std::optional<double> contact_angle(double object_width) const {
    const double chord = (object_width + 2.0 * pad_thickness) / (2.0 * lever_arm);
    if (chord >= 1.0) return std::nullopt;
    const double angle = 2.0 * std::asin(chord);
    if (angle > jaw_angle_max) return std::nullopt;
    return std::max(angle, jaw_angle_min);
  }
};

struct ActuatorLimits {
  double peak_torque = 16.5;
  double continuous_torque = 10.0;
  double max_jaw_speed = 2.0;    // rad/s
  double jaw_response_s = 0.05;  // first-order velocity lag

  void validate() const {
    if (!(continuous_torque > 0.0 && continuous_torque <= peak_torque))
      throw std::invalid_argument("require 0 < continuous_torque <= peak_torque");
    if (!(max_jaw_speed > 0.0)) throw std::invalid_argument("max_jaw_speed must be > 0");
    if (!(jaw_response_s > 0.0)) throw std::invalid_argument("jaw_response_s must be > 0");
  }
};

struct JawState {
  double angle = 1.2;
  double velocity = 0.0;
  double commanded_torque = 0.0;
  double applied_torque = 0.0;
  bool in_contact = false;
};

struct ImpedanceGains {
  double stiffness = 0.0;  // N·m/rad
  double damping = 0.0;    // N·m·s/rad
};

inline double torque_to_tip_force(double torque, const GripperGeometry& geometry) {
  if (!(torque >= 0.0)) throw std::domain_error("torque_to_tip_force: torque must be >= 0");
  return std::max(0.0, torque / geometry.lever_arm + geometry.force_offset_n);
}

inline double tip_force_to_torque(double force, const GripperGeometry& geometry) {
  if (!(force >= 0.0)) throw std::domain_error("tip_force_to_torque: force must be >= 0");
  return std::max(0.0, force - geometry.force_offset_n) * geometry.lever_arm;
}

/// Saturates to the peak torque, or to the continuous torque once thermally derated.
inline double clamp_torque(double requested, const ActuatorLimits& limits, bool thermal_derated) {
  const double bound = thermal_derated ? limits.continuous_torque : limits.peak_torque;
  return std::clamp(requested, -bound, bound);
}

inline double impedance_torque(const ImpedanceGains& gains, double angle_ref, const JawState& state,
                               const ActuatorLimits& limits, bool thermal_derated = false) {
  if (gains.stiffness < 0.0 || gains.damping < 0.0)
    throw std::domain_error("impedance_torque: gains must be non-negative");
  const double raw = gains.stiffness * (angle_ref - state.angle) - gains.damping * state.velocity;
  return clamp_torque(raw, limits, thermal_derated);
}

/// Advances the jaw by dt.
///
/// The free jaw follows a first-order lag toward a target speed proportional to
/// the net torque (saturating at max_jaw_speed once the net torque reaches the
/// continuous rating). `contact_angle` is the opening at which an object blocks
/// a closing jaw; once reached the jaw stops there and the applied torque is
/// transmitted as grip force. `load_torque` opposes closing.
inline JawState step_jaw(const JawState& state, double torque_cmd, double load_torque, double dt,
                         const GripperGeometry& geometry, const ActuatorLimits& limits,
                         std::optional<double> contact_angle = std::nullopt,
                         bool thermal_derated = false) {
  if (!(dt > 0.0)) throw std::domain_error("step_jaw: dt must be > 0");
  JawState next = state;
  next.commanded_torque = torque_cmd;
  next.applied_torque = clamp_torque(torque_cmd, limits, thermal_derated);

  const double net = next.applied_torque - load_torque;
  const bool closing_on_object =
      contact_angle && state.angle <= *contact_angle + 1e-12 && net > 0.0 && state.in_contact;
  if (closing_on_object) {
    next.angle = state.angle;
    next.velocity = 0.0;
    next.in_contact = true;
    return next;
  }

  const double v_target =
      -limits.max_jaw_speed * std::clamp(net / limits.continuous_torque, -1.0, 1.0);
  const double decay = std::exp(-dt / limits.jaw_response_s);
  next.velocity = v_target + (state.velocity - v_target) * decay;
  next.angle = state.angle + next.velocity * dt;
  next.in_contact = false;

  const double lower = contact_angle && state.angle >= *contact_angle - 1e-12
                           ? std::max(*contact_angle, geometry.jaw_angle_min)
                           : geometry.jaw_angle_min;
  if (next.angle <= lower) {
    next.angle = lower;
    next.velocity = 0.0;
    next.in_contact = contact_angle.has_value() && lower == std::max(*contact_angle, geometry.jaw_angle_min);
  }
  if (next.angle >= geometry.jaw_angle_max) {
    next.angle = geometry.jaw_angle_max;
    next.velocity = std::min(next.velocity, 0.0);
  }
  return next;
}

/// Pinching force at the tip; zero unless the pads are on an object.
inline double grip_force(const JawState& state, const GripperGeometry& geometry) {
  if (!state.in_contact || state.applied_torque <= 0.0) return 0.0;
  return torque_to_tip_force(state.applied_torque, geometry);
}

}  // namespace gripsim
