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

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "gripsim/config.hpp"
#include "gripsim/csv.hpp"
#include "gripsim/grasp_stability.hpp"
#include "gripsim/gripper.hpp"
#include "gripsim/pipeline.hpp"
#include "gripsim/protocol.hpp"
#include "gripsim/scene.hpp"
#include "gripsim/thermal.hpp"

namespace gripsim {

struct TrialRow {
  double time_s = 0.0;
  PipelinePhase phase = PipelinePhase::PreScan;
  Vec3 tcp = Vec3::Zero();
  std::optional<AlignmentAngles> theta;
  std::optional<double> tof_m;
  double torque_nm = 0.0;
  double temp_c = 0.0;
  std::vector<std::string> events;
};

struct GraspEntry {
  double time_s;
  AlignmentAngles theta;
  double tof_m;
};

struct TrialRecord {
  std::vector<TrialRow> rows;
  /// Phase at the start and after every change.
  std::vector<std::pair<double, PipelinePhase>> phase_trace;
  std::vector<GraspEntry> grasp_entries;
  int completed_cycles = 0;
  int grasp_failures = 0;
  bool script_exhausted = false;

  std::vector<PipelinePhase> phases() const {
    std::vector<PipelinePhase> out;
    for (const auto& [t, p] : phase_trace) out.push_back(p);
    return out;
  }
};

inline CsvWriter trial_csv(const TrialRecord& record) {
  CsvWriter csv({"time_s", "phase", "tcp_x_m", "tcp_y_m", "tcp_z_m", "theta_h_deg", "theta_v_deg", "tof_m",
                 "torque_nm", "temp_c", "events"});
  for (const auto& r : record.rows) {
    std::string events;
    for (const auto& e : r.events) {
      if (!events.empty()) events += ';';
      // Event text may echo operator input; keep the log one cell wide.
      for (char c : e) events += (c == ',' || c == ';' || c == '"') ? ' ' : c;
    }
    csv.add_row({format_number(r.time_s), std::string(to_string(r.phase)), format_number(r.tcp.x()),
                 format_number(r.tcp.y()), format_number(r.tcp.z()),
                 r.theta ? format_number(r.theta->horizontal_deg) : "",
                 r.theta ? format_number(r.theta->vertical_deg) : "", format_number(r.tof_m),
                 format_number(r.torque_nm), format_number(r.temp_c), events});
  }
  return csv;
}

/// Reads a trial log back into telemetry snapshots (detections are not logged).
inline std::vector<TelemetrySnapshot> parse_trial_log(std::istream& in) {
  const auto rows = read_csv(in);
  if (rows.empty() || rows[0].size() != 11 || rows[0][0] != "time_s") throw ValidationError("not a trial log");
  std::vector<TelemetrySnapshot> snaps;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 11) throw ValidationError("trial log row " + std::to_string(i) + " has wrong width");
    TelemetrySnapshot s;
    try {
      s.t = std::stod(r[0]);
      s.phase = r[1];
      if (!parse_phase(s.phase)) throw ValidationError("trial log row " + std::to_string(i) + ": unknown phase");
      s.tcp = {std::stod(r[2]), std::stod(r[3]), std::stod(r[4])};
      s.theta_h_deg = r[5].empty() ? 0.0 : std::stod(r[5]);
      s.theta_v_deg = r[6].empty() ? 0.0 : std::stod(r[6]);
      if (!r[7].empty()) s.tof_m = std::stod(r[7]);
      s.torque_nm = std::stod(r[8]);
      s.temp_c = std::stod(r[9]);
    } catch (const std::logic_error&) {
      throw ValidationError("trial log row " + std::to_string(i) + ": not a number");
    }
    std::size_t start = 0;
    while (start < r[10].size()) {
      const auto semi = r[10].find(';', start);
      s.events.push_back(r[10].substr(start, semi - start));
      if (semi == std::string::npos) break;
      start = semi + 1;
    }
    snaps.push_back(std::move(s));
  }
  return snaps;
}

/// The simulated world around the pipeline: arm, jaw, winding temperature,
/// sensing and the objects on the table. `step` is the single mutator.
class Simulation {
 public:
  Simulation(SimConfig config, std::vector<SceneObject> scene, std::uint64_t seed)
      : config_(synced(std::move(config))), objects_(std::move(scene)), rng_(seed), pipeline_(config_.pipeline) {
    config_.validate();
    for (const auto& o : objects_) {
      o.validate(config_.pipeline.known_classes);
      material_mu(o.handle_material, config_.materials);
    }
    tcp_.position = config_.pipeline.prescan_position;
    jaw_.angle = config_.geometry.jaw_angle_max;
    thermal_.winding_temp_c = config_.thermal.ambient_c;
    snapshot_.phase = std::string(to_string(pipeline_.phase()));
    snapshot_.tcp = tcp_.position;
    snapshot_.temp_c = thermal_.winding_temp_c;
  }

  double time() const { return time_; }
  PipelinePhase phase() const { return pipeline_.phase(); }
  const TcpState& tcp() const { return tcp_; }
  const JawState& jaw() const { return jaw_; }
  const ThermalState& thermal() const { return thermal_; }
  const std::vector<SceneObject>& objects() const { return objects_; }
  bool holding() const { return held_.has_value(); }
  const GraspPipeline& pipeline() const { return pipeline_; }
  const TelemetrySnapshot& last_snapshot() const { return snapshot_; }

  /// State before the first tick, as a log row.
  TrialRow initial_row() const {
    return TrialRow{time_, pipeline_.phase(), tcp_.position, std::nullopt, std::nullopt, jaw_.applied_torque,
                    thermal_.winding_temp_c, {}};
  }

  struct StepResult {
    TrialRow row;
    PipelineOutput output;
    std::optional<double> tof_m;
  };

  /// Advances one tick, delivering `command_texts` to the pipeline first.
  StepResult step(const std::vector<std::string>& command_texts) {
    const double dt = config_.dt();
    std::vector<Command> commands;
    for (const auto& text : command_texts) commands.push_back(parse_command(text, config_.pipeline.known_classes));

    const auto detections = render_detections(tcp_, config_.pipeline.camera, objects_, rng_);
    const auto tof = tof_measure(tcp_, objects_, config_.tof, rng_);
    const bool derated = is_derated(thermal_, config_.thermal);

    PipelineInputs in;
    in.time_s = time_;
    in.detections = detections;
    in.tof_m = tof;
    in.imu = imu_sample(tcp_, config_.gravity);
    in.tcp = tcp_;
    in.jaw = jaw_;
    in.holding_object = held_.has_value();
    in.thermal_derated = derated;
    in.commands = commands;
    PipelineOutput out = pipeline_.tick(in, dt);

    std::vector<std::string> events = out.events;
    tcp_ = step_tcp(tcp_, out.arm_ref, config_.arm, dt).state;

    const std::optional<std::size_t> target = held_ ? std::optional<std::size_t>(held_->index) : graspable_object();
    std::optional<double> contact_angle;
    if (target) contact_angle = config_.geometry.contact_angle(2.0 * objects_[*target].bounding_radius);
    const bool was_in_contact = jaw_.in_contact;
    jaw_ = step_jaw(jaw_, out.gripper_torque, 0.0, dt, config_.geometry, config_.actuator, contact_angle, derated);
    thermal_ = step_temperature(thermal_, std::abs(jaw_.applied_torque), dt, config_.thermal);

    update_held_object(target, was_in_contact, events);

    time_ += dt;
    StepResult result;
    result.output = out;
    result.tof_m = tof;
    result.row = TrialRow{time_, pipeline_.phase(), tcp_.position, out.theta, tof, jaw_.applied_torque,
                          thermal_.winding_temp_c, events};
    snapshot_.t = time_;
    snapshot_.phase = std::string(to_string(pipeline_.phase()));
    snapshot_.tcp = tcp_.position;
    snapshot_.theta_h_deg = out.theta ? out.theta->horizontal_deg : 0.0;
    snapshot_.theta_v_deg = out.theta ? out.theta->vertical_deg : 0.0;
    snapshot_.tof_m = tof;
    snapshot_.torque_nm = jaw_.applied_torque;
    snapshot_.temp_c = thermal_.winding_temp_c;
    snapshot_.detections = detections;
    snapshot_.events = events;
    return result;
  }

 private:
  static SimConfig synced(SimConfig c) {
    c.sync();
    return c;
  }

  struct Held {
    std::size_t index;
    Vec3 offset;
  };

  // Object whose surface lies on the approach ray within reach of the jaws.
  std::optional<std::size_t> graspable_object() const {
    const Vec3 dir = sensor_frame(tcp_).forward;
    std::optional<std::size_t> best;
    double best_d = config_.pipeline.grasp_distance_m + 0.02;
    for (std::size_t i = 0; i < objects_.size(); ++i) {
      if (auto hit = detail::ray_sphere(tcp_.position, dir, objects_[i].position, objects_[i].bounding_radius)) {
        if (*hit <= best_d) {
          best_d = *hit;
          best = i;
        }
      }
    }
    return best;
  }

  void update_held_object(std::optional<std::size_t> target, bool was_in_contact, std::vector<std::string>& events) {
    const double accel_z = tcp_.acceleration.z();
    if (held_) {
      SceneObject& obj = objects_[held_->index];
      if (!jaw_.in_contact) {
        events.push_back("handed-over:" + obj.class_label);
        objects_.erase(objects_.begin() + static_cast<std::ptrdiff_t>(held_->index));
        held_.reset();
        return;
      }
      const ContactModel contact = contact_for(obj.handle_material, config_.materials, config_.contact_count);
      if (slip_check(grip_force(jaw_, config_.geometry), Payload{obj.mass_kg, obj.handle_material}, accel_z, contact,
                     config_.gravity) == GraspStatus::Slips) {
        events.push_back("slip:" + obj.class_label);
        held_.reset();
        return;
      }
      obj.position = tcp_.position + held_->offset;
      return;
    }
    if (jaw_.in_contact && !was_in_contact && target) {
      const SceneObject& obj = objects_[*target];
      const ContactModel contact = contact_for(obj.handle_material, config_.materials, config_.contact_count);
      if (slip_check(grip_force(jaw_, config_.geometry), Payload{obj.mass_kg, obj.handle_material}, accel_z, contact,
                     config_.gravity) == GraspStatus::Holds) {
        held_ = Held{*target, obj.position - tcp_.position};
        events.push_back("contact:" + obj.class_label);
      } else {
        events.push_back("slip:" + obj.class_label);
      }
    }
  }

  SimConfig config_;
  std::vector<SceneObject> objects_;
  Rng rng_;
  GraspPipeline pipeline_;
  TcpState tcp_;
  JawState jaw_;
  ThermalState thermal_;
  std::optional<Held> held_;
  double time_ = 0.0;
  TelemetrySnapshot snapshot_;
};

struct ScenarioOptions {
  double max_duration_s = 120.0;
  /// End the run once the script is exhausted and a handover cycle has just
  /// returned to PreScan.
  bool stop_after_cycle = true;
  /// Pace ticks to wall-clock time (live sessions).
  bool realtime = false;
  /// Extra command source, e.g. a telemetry server.
  CommandQueue* external_commands = nullptr;
  std::function<void(const TelemetrySnapshot&)> on_tick;
};

/// Runs the tick loop over a scene and a command script.
inline TrialRecord run_pipeline_scenario(const SimConfig& config, std::vector<SceneObject> scene,
                                         std::span<const ScriptEntry> script, std::uint64_t seed,
                                         const ScenarioOptions& options = {}) {
  for (const auto& o : scene) {
    try {
      o.validate(config.pipeline.known_classes);
      material_mu(o.handle_material, config.materials);
    } catch (const std::logic_error& e) {
      throw ValidationError(std::string("scene: ") + e.what());
    }
  }
  for (std::size_t i = 1; i < script.size(); ++i)
    if (script[i].time_s < script[i - 1].time_s) throw ValidationError("script: times must be non-decreasing");

  Simulation sim(config, std::move(scene), seed);
  TrialRecord record;
  record.phase_trace.emplace_back(0.0, sim.phase());
  record.rows.push_back(sim.initial_row());
  if (options.on_tick) options.on_tick(sim.last_snapshot());
  std::size_t next_script = 0;
  const auto wall_start = std::chrono::steady_clock::now();
  const double dt = config.dt();
  const auto max_ticks = static_cast<long>(std::ceil(options.max_duration_s / dt));

  for (long tick = 0; tick < max_ticks; ++tick) {
    std::vector<std::string> texts;
    while (next_script < script.size() && script[next_script].time_s <= sim.time() + 1e-9)
      texts.push_back(script[next_script++].text);
    if (options.external_commands) {
      for (auto& t : options.external_commands->drain()) texts.push_back(std::move(t));
    }
    const PipelinePhase before = sim.phase();
    auto step = sim.step(texts);
    record.rows.push_back(step.row);
    const PipelinePhase after = sim.phase();

    if (after != before) {
      record.phase_trace.emplace_back(sim.time(), after);
      if (after == PipelinePhase::Grasp && step.output.theta && step.tof_m)
        record.grasp_entries.push_back({sim.time(), *step.output.theta, *step.tof_m});
      if (before == PipelinePhase::Handover && after == PipelinePhase::PreScan) ++record.completed_cycles;
    }
    for (const auto& e : step.row.events)
      if (e.rfind("grasp-failure", 0) == 0) ++record.grasp_failures;

    if (options.on_tick) options.on_tick(sim.last_snapshot());
    if (options.realtime) {
      std::this_thread::sleep_until(wall_start + std::chrono::duration<double>(sim.time()));
    }
    record.script_exhausted = next_script == script.size();
    if (options.stop_after_cycle && record.script_exhausted && before == PipelinePhase::Handover &&
        after == PipelinePhase::PreScan)
      break;
  }
  return record;
}

}  // namespace gripsim
