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

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gripsim/config.hpp"
#include "gripsim/csv.hpp"
#include "gripsim/grasp_stability.hpp"
#include "gripsim/gripper.hpp"
#include "gripsim/scene.hpp"
#include "gripsim/thermal.hpp"

namespace gripsim {

// ---------------------------------------------------------------------------
// Force sweep

struct ForceSweepRow {
  double torque_nm;
  double tip_force_n;
};

inline std::vector<ForceSweepRow> run_force_sweep(std::span<const double> torques, const GripperGeometry& geometry,
                                                  const ActuatorLimits& limits) {
  std::vector<ForceSweepRow> rows;
  rows.reserve(torques.size());
  for (double tau : torques) {
    if (tau < 0.0 || tau > limits.peak_torque)
      throw std::domain_error("run_force_sweep: torque " + format_number(tau) + " N·m outside [0, peak]");
    rows.push_back({tau, torque_to_tip_force(tau, geometry)});
  }
  return rows;
}

inline CsvWriter force_sweep_csv(std::span<const ForceSweepRow> rows) {
  CsvWriter csv({"torque_nm", "tip_force_n"});
  for (const auto& r : rows) csv.add_row({format_number(r.torque_nm), format_number(r.tip_force_n)});
  return csv;
}

// ---------------------------------------------------------------------------
// Thermal endurance

struct ThermalSample {
  double time_s;
  double temp_c;
};

struct ThermalCurve {
  double torque_nm = 0.0;
  std::vector<ThermalSample> samples;
  double steady_state_c = 0.0;
  /// Time to reach the stop temperature from ambient; infinite if never.
  double hold_time_s = std::numeric_limits<double>::infinity();
  bool reached_stop = false;
};

/// Holds each torque from ambient until the winding reaches `stop_temp_c`,
/// settles within 0.01 °C of steady state, or `max_duration_s` elapses. The
/// final sample lands exactly on the stop temperature.
inline std::vector<ThermalCurve> run_thermal_endurance(std::span<const double> torques, double stop_temp_c,
                                                       const ThermalParams& params, double dt_s = 1.0,
                                                       double max_duration_s = 3600.0) {
  if (stop_temp_c > params.winding_limit_c)
    throw std::domain_error("run_thermal_endurance: stop temperature above the winding limit");
  if (!(dt_s > 0.0)) throw std::domain_error("run_thermal_endurance: dt must be > 0");
  std::vector<ThermalCurve> curves;
  for (double tau : torques) {
    ThermalCurve curve;
    curve.torque_nm = tau;
    curve.steady_state_c = steady_state_temp(tau, params);
    if (auto hold = time_to_temperature(params.ambient_c, tau, stop_temp_c, params)) curve.hold_time_s = *hold;

    ThermalState state{params.ambient_c, 0.0};
    curve.samples.push_back({0.0, state.winding_temp_c});
    while (state.time_s < max_duration_s) {
      if (std::abs(state.winding_temp_c - curve.steady_state_c) < 0.01) break;
      ThermalState next = step_temperature(state, tau, dt_s, params);
      if (next.winding_temp_c >= stop_temp_c) {
        const double remaining = time_to_temperature(state.winding_temp_c, tau, stop_temp_c, params).value_or(dt_s);
        curve.samples.push_back({state.time_s + remaining, stop_temp_c});
        curve.reached_stop = true;
        break;
      }
      state = next;
      curve.samples.push_back({state.time_s, state.winding_temp_c});
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

inline CsvWriter thermal_csv(std::span<const ThermalCurve> curves) {
  CsvWriter csv({"time_s", "temp_c", "torque_nm", "hold_time_s"});
  for (const auto& c : curves)
    for (const auto& s : c.samples)
      csv.add_row({format_number(s.time_s), format_number(s.temp_c), format_number(c.torque_nm),
                   format_number(c.hold_time_s)});
  return csv;
}

// ---------------------------------------------------------------------------
// Static payload

struct StaticPayloadRow {
  double mass_kg;
  double min_torque_nm;
  /// Time before the winding reaches the cutoff at that torque. Infinite when
  /// it never does, zero when the torque exceeds the peak rating.
  double max_hold_s;
};

inline std::vector<StaticPayloadRow> run_static_payload(std::span<const double> masses, const ContactModel& contact,
                                                        const GripperGeometry& geometry, const ActuatorLimits& limits,
                                                        const ThermalParams& thermal, double g = kStandardGravity) {
  std::vector<StaticPayloadRow> rows;
  for (double m : masses) {
    if (!(m > 0.0)) throw std::domain_error("run_static_payload: masses must be > 0");
    const double tau = required_torque_static(Payload{m, contact.material_pair}, contact, geometry, g);
    double hold = 0.0;
    if (tau <= limits.peak_torque) {
      hold = time_to_temperature(thermal.ambient_c, tau, thermal.cutoff_c, thermal)
                 .value_or(std::numeric_limits<double>::infinity());
    }
    rows.push_back({m, tau, hold});
  }
  return rows;
}

inline CsvWriter static_payload_csv(std::span<const StaticPayloadRow> rows) {
  CsvWriter csv({"mass_kg", "min_torque_nm", "max_hold_s"});
  for (const auto& r : rows)
    csv.add_row({format_number(r.mass_kg), format_number(r.min_torque_nm), format_number(r.max_hold_s)});
  return csv;
}

// ---------------------------------------------------------------------------
// Dynamic payload

enum class AccelLimit { Gripper, Arm };

inline std::string_view to_string(AccelLimit l) { return l == AccelLimit::Gripper ? "gripper" : "arm"; }

struct DynamicPayloadRow {
  double mass_kg;
  double max_accel_ms2;
  AccelLimit limited_by;
  int trials = 0;
};

/// Moves the held payload up and down on a sinusoid of fixed amplitude,
/// raising the peak acceleration by `accel_step` per trial. Each tick reads the
/// z acceleration from the simulated IMU and checks slip. A trial that slips
/// reports the acceleration at the slipping tick; a trial in which the arm
/// saturates ends the sweep as arm-limited with the largest acceleration seen.
inline std::vector<DynamicPayloadRow> run_dynamic_payload(std::span<const double> masses, double torque_nm,
                                                          const DynamicPayloadSettings& motion,
                                                          const ContactModel& contact, const GripperGeometry& geometry,
                                                          const ActuatorLimits& limits, const ArmLimits& arm,
                                                          double g = kStandardGravity) {
  if (torque_nm < 0.0 || torque_nm > limits.peak_torque)
    throw std::domain_error("run_dynamic_payload: torque outside [0, peak]");
  if (!(motion.amplitude_m > 0.0 && motion.accel_step > 0.0 && motion.dt_s > 0.0 && motion.cycles > 0))
    throw std::domain_error("run_dynamic_payload: motion parameters must be positive");
  const double grip = torque_to_tip_force(clamp_torque(torque_nm, limits, false), geometry);

  std::vector<DynamicPayloadRow> rows;
  for (double m : masses) {
    const Payload payload{m, contact.material_pair};
    if (slip_check(grip, payload, 0.0, contact, g) == GraspStatus::Slips) {
      rows.push_back({m, max_acceleration(payload, torque_nm, contact, geometry, g), AccelLimit::Gripper, 0});
      continue;
    }
    double best_peak = 0.0;
    std::optional<DynamicPayloadRow> result;
    for (int trial = 1; !result && trial <= 100000; ++trial) {
      const double target = trial * motion.accel_step;
      const double omega = std::sqrt(target / motion.amplitude_m);
      const double duration = motion.cycles * 2.0 * std::numbers::pi / omega;
      const auto ticks = static_cast<long>(std::ceil(duration / motion.dt_s));

      TcpState tcp;
      tcp.position = {0.5, 0.0, motion.center_z};
      tcp.velocity = {0.0, 0.0, motion.amplitude_m * omega};
      bool arm_saturated = false;
      for (long i = 1; i <= ticks; ++i) {
        const double t = i * motion.dt_s;
        CartesianRef ref;
        ref.position = {0.5, 0.0, motion.center_z + motion.amplitude_m * std::sin(omega * t)};
        ref.velocity_ff = {0.0, 0.0, motion.amplitude_m * omega * std::cos(omega * t)};
        ref.accel_ff = {0.0, 0.0, -motion.amplitude_m * omega * omega * std::sin(omega * t)};
        const TcpStepResult step = step_tcp(tcp, ref, arm, motion.dt_s);
        tcp = step.state;
        arm_saturated = arm_saturated || step.saturated;
        const double a_z = imu_sample(tcp, g).linear_accel.z() - g;
        if (slip_check(grip, payload, a_z, contact, g) == GraspStatus::Slips) {
          result = DynamicPayloadRow{m, a_z, AccelLimit::Gripper, trial};
          break;
        }
        best_peak = std::max(best_peak, a_z);
      }
      if (!result && arm_saturated) result = DynamicPayloadRow{m, best_peak, AccelLimit::Arm, trial};
    }
    if (!result) throw std::runtime_error("run_dynamic_payload: sweep did not terminate");
    rows.push_back(*result);
  }
  return rows;
}

inline CsvWriter dynamic_payload_csv(std::span<const DynamicPayloadRow> rows) {
  CsvWriter csv({"mass_kg", "max_accel_ms2", "limited_by"});
  for (const auto& r : rows)
    csv.add_row({format_number(r.mass_kg), format_number(r.max_accel_ms2), std::string(to_string(r.limited_by))});
  return csv;
}

}  // namespace gripsim
