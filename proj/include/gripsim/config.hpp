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

#include <fstream>
#include <initializer_list>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "gripsim/csv.hpp"
#include "gripsim/grasp_stability.hpp"
#include "gripsim/gripper.hpp"
#include "gripsim/pipeline.hpp"
#include "gripsim/scene.hpp"
#include "gripsim/thermal.hpp"

namespace gripsim {

using nlohmann::json;

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ForceSweepSettings {
  std::vector<double> torques_nm;
};

struct ThermalSettings {
  std::vector<double> torques_nm{0.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.5};
  double stop_temp_c = 85.0;
  double dt_s = 1.0;
  double max_duration_s = 3600.0;
};

struct StaticPayloadSettings {
  std::vector<double> masses_kg{1, 2, 3, 4, 5, 6, 7, 8, 9, 9.39, 10, 11, 12};
  std::string material = "wood-rubber";
};

struct DynamicPayloadSettings {
  std::vector<double> masses_kg{3.02, 4.0, 5.0, 5.5, 5.864, 6.5, 7.0, 7.5, 8.0};
  double torque_nm = 10.6;
  double amplitude_m = 0.1;
  double accel_step = 0.1;  // m/s² between successive trials
  int cycles = 2;
  double dt_s = 0.001;
  double center_z = 0.6;
};

struct ExperimentSettings {
  ForceSweepSettings force_sweep;
  ThermalSettings thermal;
  StaticPayloadSettings static_payload;
  DynamicPayloadSettings dynamic_payload;

  ExperimentSettings() {
    for (int i = 0; i <= 33; ++i) force_sweep.torques_nm.push_back(0.5 * i);
  }
};

/// Every model constant the simulator and experiments consume.
struct SimConfig {
  GripperGeometry geometry;
  ActuatorLimits actuator;
  ThermalParams thermal;
  MaterialTable materials = default_material_table();
  int contact_count = 2;
  TofModel tof;
  ArmLimits arm;
  PipelineConfig pipeline;
  double tick_rate_hz = 50.0;
  double gravity = kStandardGravity;
  ExperimentSettings experiments;

  double dt() const { return 1.0 / tick_rate_hz; }

  /// Copies the shared model constants into the pipeline block.
  void sync() {
    pipeline.geometry = geometry;
    pipeline.actuator = actuator;
  }

  void validate() const {
    geometry.validate();
    actuator.validate();
    thermal.validate();
    tof.validate();
    arm.validate();
    pipeline.validate();
    if (!(tick_rate_hz > 0.0)) throw ValidationError("tick_rate_hz must be > 0");
    if (contact_count < 1) throw ValidationError("contact_count must be >= 1");
    for (const auto& [name, mu] : materials)
      if (!(mu > 0.0)) throw ValidationError("material '" + name + "' has non-positive mu");
  }
};

namespace detail {

inline Vec3 vec3_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw ValidationError(std::string(what) + " must be a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline json vec3_to(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline void check_keys(const json& j, const std::string& section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ValidationError(section + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ValidationError("unknown key '" + key + "' in " + section);
  }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline json thermal_to_json(const ThermalParams& p) {
  return {{"ambient_c", p.ambient_c},
          {"loss_gain", p.loss_gain},
          {"time_constant_s", p.time_constant_s},
          {"winding_limit_c", p.winding_limit_c},
          {"cutoff_c", p.cutoff_c}};
}

inline void thermal_from_json(const json& j, ThermalParams& p) {
  detail::check_keys(j, "thermal", {"ambient_c", "loss_gain", "time_constant_s", "winding_limit_c", "cutoff_c"});
  detail::read_opt(j, "ambient_c", p.ambient_c);
  detail::read_opt(j, "loss_gain", p.loss_gain);
  detail::read_opt(j, "time_constant_s", p.time_constant_s);
  detail::read_opt(j, "winding_limit_c", p.winding_limit_c);
  detail::read_opt(j, "cutoff_c", p.cutoff_c);
}

/// Reads a configuration document. Missing keys keep their defaults.
inline SimConfig config_from_json(const json& j) {
  using detail::read_opt;
  using detail::check_keys;
  SimConfig c;
  try {
    check_keys(j, "config", {"gripper", "thermal", "materials", "contact_count", "camera", "tof", "arm", "pipeline",
                             "tick_rate_hz", "gravity_m_s2", "experiments"});
    if (j.contains("gripper")) {
      const json& g = j["gripper"];
      check_keys(g, "gripper", {"lever_arm_m", "jaw_angle_min_rad", "jaw_angle_max_rad", "pad_thickness_m",
                                "force_offset_n", "peak_torque_nm", "continuous_torque_nm", "max_jaw_speed_rad_s",
                                "jaw_response_s"});
      read_opt(g, "lever_arm_m", c.geometry.lever_arm);
      read_opt(g, "jaw_angle_min_rad", c.geometry.jaw_angle_min);
      read_opt(g, "jaw_angle_max_rad", c.geometry.jaw_angle_max);
      read_opt(g, "pad_thickness_m", c.geometry.pad_thickness);
      read_opt(g, "force_offset_n", c.geometry.force_offset_n);
      read_opt(g, "peak_torque_nm", c.actuator.peak_torque);
      read_opt(g, "continuous_torque_nm", c.actuator.continuous_torque);
      read_opt(g, "max_jaw_speed_rad_s", c.actuator.max_jaw_speed);
      read_opt(g, "jaw_response_s", c.actuator.jaw_response_s);
    }
    if (j.contains("thermal")) thermal_from_json(j["thermal"], c.thermal);
    if (j.contains("materials")) {
      c.materials.clear();
      for (auto& [name, mu] : j["materials"].items()) c.materials[name] = mu.get<double>();
    }
    read_opt(j, "contact_count", c.contact_count);
    if (j.contains("camera")) {
      const json& cam = j["camera"];
      check_keys(cam, "camera", {"fov_h_deg", "fov_v_deg", "dim_w", "dim_h", "max_detect_range_m",
                                 "pixel_noise_sigma_px", "false_negative_rate", "projection"});
      auto& m = c.pipeline.camera;
      read_opt(cam, "fov_h_deg", m.fov_h_deg);
      read_opt(cam, "fov_v_deg", m.fov_v_deg);
      read_opt(cam, "dim_w", m.dim_w);
      read_opt(cam, "dim_h", m.dim_h);
      read_opt(cam, "max_detect_range_m", m.max_detect_range);
      read_opt(cam, "pixel_noise_sigma_px", m.pixel_noise_sigma);
      read_opt(cam, "false_negative_rate", m.false_negative_rate);
      if (cam.contains("projection")) {
        const auto proj = cam["projection"].get<std::string>();
        if (proj == "linear") {
          m.projection = ProjectionModel::Linear;
        } else if (proj == "perspective") {
          m.projection = ProjectionModel::Perspective;
        } else {
          throw ValidationError("camera.projection must be 'linear' or 'perspective'");
        }
      }
    }
    if (j.contains("tof")) {
      check_keys(j["tof"], "tof", {"max_range_m", "noise_sigma_m"});
      read_opt(j["tof"], "max_range_m", c.tof.max_range);
      read_opt(j["tof"], "noise_sigma_m", c.tof.noise_sigma);
    }
    if (j.contains("arm")) {
      const json& a = j["arm"];
      check_keys(a, "arm", {"v_max_m_s", "a_max_m_s2", "wrist_rate_max_rad_s", "natural_freq_rad_s",
                            "workspace_min_m", "workspace_max_m"});
      read_opt(a, "v_max_m_s", c.arm.v_max);
      read_opt(a, "a_max_m_s2", c.arm.a_max);
      read_opt(a, "wrist_rate_max_rad_s", c.arm.wrist_rate_max);
      read_opt(a, "natural_freq_rad_s", c.arm.natural_freq);
      if (a.contains("workspace_min_m")) c.arm.workspace_min = detail::vec3_from(a["workspace_min_m"], "workspace_min_m");
      if (a.contains("workspace_max_m")) c.arm.workspace_max = detail::vec3_from(a["workspace_max_m"], "workspace_max_m");
    }
    if (j.contains("pipeline")) {
      const json& p = j["pipeline"];
      check_keys(p, "pipeline", {"kp_m_per_deg", "kd_m_per_deg", "align_band_deg", "align_ticks", "loss_ticks",
                                 "min_confidence", "standoff_m", "grasp_distance_m", "lift_height_m",
                                 "grasp_torque_nm", "open_torque_nm", "max_axis_deviation_deg", "close_timeout_s",
                                 "posture_tolerance_m", "settle_speed_m_s", "scan_amplitude_rad", "scan_period_s",
                                 "prescan_position_m", "known_classes"});
      auto& pc = c.pipeline;
      read_opt(p, "kp_m_per_deg", pc.gains.kp);
      read_opt(p, "kd_m_per_deg", pc.gains.kd);
      read_opt(p, "align_band_deg", pc.align_band_deg);
      read_opt(p, "align_ticks", pc.align_ticks);
      read_opt(p, "loss_ticks", pc.loss_ticks);
      read_opt(p, "min_confidence", pc.min_confidence);
      read_opt(p, "standoff_m", pc.standoff_m);
      read_opt(p, "grasp_distance_m", pc.grasp_distance_m);
      read_opt(p, "lift_height_m", pc.lift_height_m);
      read_opt(p, "grasp_torque_nm", pc.grasp_torque);
      read_opt(p, "open_torque_nm", pc.open_torque);
      read_opt(p, "max_axis_deviation_deg", pc.max_axis_deviation_deg);
      read_opt(p, "close_timeout_s", pc.close_timeout_s);
      read_opt(p, "posture_tolerance_m", pc.posture_tolerance_m);
      read_opt(p, "settle_speed_m_s", pc.settle_speed);
      read_opt(p, "scan_amplitude_rad", pc.scan.amplitude_rad);
      read_opt(p, "scan_period_s", pc.scan.period_s);
      if (p.contains("prescan_position_m")) pc.prescan_position = detail::vec3_from(p["prescan_position_m"], "prescan_position_m");
      if (p.contains("known_classes")) pc.known_classes = p["known_classes"].get<std::vector<std::string>>();
    }
    read_opt(j, "tick_rate_hz", c.tick_rate_hz);
    read_opt(j, "gravity_m_s2", c.gravity);
    if (j.contains("experiments")) {
      const json& e = j["experiments"];
      check_keys(e, "experiments", {"force_sweep", "thermal", "static_payload", "dynamic_payload"});
      auto& x = c.experiments;
      if (e.contains("force_sweep")) check_keys(e["force_sweep"], "experiments.force_sweep", {"torques_nm"});
      if (e.contains("force_sweep")) read_opt(e["force_sweep"], "torques_nm", x.force_sweep.torques_nm);
      if (e.contains("thermal")) {
        check_keys(e["thermal"], "experiments.thermal", {"torques_nm", "stop_temp_c", "dt_s", "max_duration_s"});
        read_opt(e["thermal"], "torques_nm", x.thermal.torques_nm);
        read_opt(e["thermal"], "stop_temp_c", x.thermal.stop_temp_c);
        read_opt(e["thermal"], "dt_s", x.thermal.dt_s);
        read_opt(e["thermal"], "max_duration_s", x.thermal.max_duration_s);
      }
      if (e.contains("static_payload")) {
        check_keys(e["static_payload"], "experiments.static_payload", {"masses_kg", "material"});
        read_opt(e["static_payload"], "masses_kg", x.static_payload.masses_kg);
        read_opt(e["static_payload"], "material", x.static_payload.material);
      }
      if (e.contains("dynamic_payload")) {
        const json& d = e["dynamic_payload"];
        check_keys(d, "experiments.dynamic_payload", {"masses_kg", "torque_nm", "amplitude_m", "accel_step_m_s2",
                                                      "cycles", "dt_s", "center_z_m"});
        read_opt(d, "masses_kg", x.dynamic_payload.masses_kg);
        read_opt(d, "torque_nm", x.dynamic_payload.torque_nm);
        read_opt(d, "amplitude_m", x.dynamic_payload.amplitude_m);
        read_opt(d, "accel_step_m_s2", x.dynamic_payload.accel_step);
        read_opt(d, "cycles", x.dynamic_payload.cycles);
        read_opt(d, "dt_s", x.dynamic_payload.dt_s);
        read_opt(d, "center_z_m", x.dynamic_payload.center_z);
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  c.sync();
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  return c;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

inline SimConfig load_config(const std::string& path) { return config_from_json(read_json_file(path)); }

/// Reads `torque_nm,time_s,temp_c` rows; the header line is optional and a
/// time of "inf" marks a steady-state reading.
inline std::vector<ThermalAnchor> parse_thermal_anchors(std::istream& in) {
  std::vector<ThermalAnchor> anchors;
  const auto rows = read_csv(in);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i == 0 && !rows[i].empty() && rows[i][0] == "torque_nm") continue;
    if (rows[i].size() != 3) throw ValidationError("anchors row " + std::to_string(i + 1) + ": expected 3 columns");
    try {
      anchors.push_back({std::stod(rows[i][0]), std::stod(rows[i][1]), std::stod(rows[i][2])});
    } catch (const std::logic_error&) {
      throw ValidationError("anchors row " + std::to_string(i + 1) + ": not a number");
    }
  }
  return anchors;
}

inline std::vector<SceneObject> scene_from_json(const json& j, std::span<const std::string> known) {
  if (!j.is_object() || !j.contains("objects") || !j["objects"].is_array())
    throw ValidationError("scene: expected an object with an 'objects' array");
  std::vector<SceneObject> scene;
  std::size_t index = 0;
  for (const auto& o : j["objects"]) {
    const std::string where = "scene.objects[" + std::to_string(index++) + "]: ";
    try {
      SceneObject obj;
      obj.class_label = o.at("class").get<std::string>();
      obj.position = detail::vec3_from(o.at("position"), "position");
      detail::read_opt(o, "radius_m", obj.bounding_radius);
      detail::read_opt(o, "material", obj.handle_material);
      detail::read_opt(o, "mass_kg", obj.mass_kg);
      if (o.contains("principal_axis")) obj.principal_axis = detail::vec3_from(o["principal_axis"], "principal_axis").normalized();
      obj.validate(known);
      scene.push_back(std::move(obj));
    } catch (const json::exception& e) {
      throw ValidationError(where + e.what());
    } catch (const std::invalid_argument& e) {
      throw ValidationError(where + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
  }
  return scene;
}

inline json scene_to_json(std::span<const SceneObject> scene) {
  json objects = json::array();
  for (const auto& o : scene) {
    objects.push_back({{"class", o.class_label},
                       {"position", detail::vec3_to(o.position)},
                       {"radius_m", o.bounding_radius},
                       {"material", o.handle_material},
                       {"mass_kg", o.mass_kg},
                       {"principal_axis", detail::vec3_to(o.principal_axis)}});
  }
  return {{"objects", objects}};
}

inline std::vector<SceneObject> load_scene(const std::string& path, std::span<const std::string> known) {
  return scene_from_json(read_json_file(path), known);
}

struct ScriptEntry {
  double time_s = 0.0;
  std::string text;
};

/// Command scripts are lines of `<time_s> <text>`; blank lines and `#` comments
/// are skipped. Times must be non-decreasing.
inline std::vector<ScriptEntry> parse_command_script(std::istream& in) {
  std::vector<ScriptEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line.substr(first));
    ScriptEntry e;
    if (!(ls >> e.time_s)) throw ValidationError("script line " + std::to_string(line_no) + ": expected a time");
    std::getline(ls, e.text);
    e.text = normalize_command_text(e.text);
    if (e.text.empty()) throw ValidationError("script line " + std::to_string(line_no) + ": missing command text");
    if (e.time_s < 0.0) throw ValidationError("script line " + std::to_string(line_no) + ": negative time");
    if (!entries.empty() && e.time_s < entries.back().time_s)
      throw ValidationError("script line " + std::to_string(line_no) + ": times must be non-decreasing");
    entries.push_back(std::move(e));
  }
  return entries;
}

inline std::vector<ScriptEntry> load_command_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  return parse_command_script(in);
}

}  // namespace gripsim
