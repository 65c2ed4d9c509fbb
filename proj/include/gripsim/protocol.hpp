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
#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "gripsim/scene.hpp"

namespace gripsim {

/// Line-delimited JSON wire protocol shared by the simulator, the replay tool
/// and the operator console.
///
///   telemetry: {"type":"telemetry","t":s,"phase":str,"tcp":[x,y,z],"theta":[h,v],
///               "tof_m":num|null,"torque_nm":num,"temp_c":num,
///               "detections":[{"label":str,"bbox":[u0,v0,u1,v1],"conf":num}],
///               "events":[str]}
///   command:   {"type":"command","text":str}
///   replies:   {"type":"ack","text":str} | {"type":"error","message":str}
struct TelemetrySnapshot {
  double t = 0.0;
  std::string phase;
  Vec3 tcp = Vec3::Zero();
  double theta_h_deg = 0.0;
  double theta_v_deg = 0.0;
  std::optional<double> tof_m;
  double torque_nm = 0.0;
  double temp_c = 0.0;
  std::vector<Detection> detections;
  std::vector<std::string> events;
};

inline nlohmann::json telemetry_to_json(const TelemetrySnapshot& s) {
  using nlohmann::json;
  json dets = json::array();
  for (const auto& d : s.detections) {
    dets.push_back({{"label", d.class_label},
                    {"bbox", json::array({d.bbox.u_min, d.bbox.v_min, d.bbox.u_max, d.bbox.v_max})},
                    {"conf", d.confidence}});
  }
  json j = {{"type", "telemetry"},
            {"t", s.t},
            {"phase", s.phase},
            {"tcp", json::array({s.tcp.x(), s.tcp.y(), s.tcp.z()})},
            {"theta", json::array({s.theta_h_deg, s.theta_v_deg})},
            {"tof_m", nullptr},
            {"torque_nm", s.torque_nm},
            {"temp_c", s.temp_c},
            {"detections", dets},
            {"events", s.events}};
  if (s.tof_m) j["tof_m"] = *s.tof_m;
  return j;
}

inline std::string telemetry_line(const TelemetrySnapshot& s) { return telemetry_to_json(s).dump() + "\n"; }

namespace detail {

inline bool is_finite_number(const nlohmann::json& j) { return j.is_number() && std::isfinite(j.get<double>()); }

inline bool is_number_array(const nlohmann::json& j, std::size_t n) {
  if (!j.is_array() || j.size() != n) return false;
  for (const auto& v : j)
    if (!is_finite_number(v)) return false;
  return true;
}

}  // namespace detail

/// Checks a telemetry message against the wire schema. Returns the first
/// violation, or nothing when valid. Extra keys are rejected.
inline std::optional<std::string> validate_telemetry(const nlohmann::json& j) {
  using detail::is_finite_number;
  using detail::is_number_array;
  static const std::vector<std::string> kKeys = {"type", "t", "phase", "tcp", "theta", "tof_m",
                                                 "torque_nm", "temp_c", "detections", "events"};
  if (!j.is_object()) return "message is not an object";
  for (const auto& key : kKeys)
    if (!j.contains(key)) return "missing key '" + key + "'";
  if (j.size() != kKeys.size()) return "unexpected extra keys";
  if (j["type"] != "telemetry") return "type must be 'telemetry'";
  if (!is_finite_number(j["t"]) || j["t"].get<double>() < 0.0) return "t must be a non-negative number";
  if (!j["phase"].is_string()) return "phase must be a string";
  static const std::vector<std::string> kPhases = {"PreScan", "Scan", "Align", "Reach", "Grasp", "Handover"};
  if (std::find(kPhases.begin(), kPhases.end(), j["phase"].get<std::string>()) == kPhases.end())
    return "unknown phase '" + j["phase"].get<std::string>() + "'";
  if (!is_number_array(j["tcp"], 3)) return "tcp must be [x,y,z]";
  if (!is_number_array(j["theta"], 2)) return "theta must be [h,v]";
  if (!(j["tof_m"].is_null() || (is_finite_number(j["tof_m"]) && j["tof_m"].get<double>() >= 0.0)))
    return "tof_m must be null or a non-negative number";
  if (!is_finite_number(j["torque_nm"])) return "torque_nm must be a number";
  if (!is_finite_number(j["temp_c"])) return "temp_c must be a number";
  if (!j["detections"].is_array()) return "detections must be an array";
  for (const auto& d : j["detections"]) {
    if (!d.is_object() || d.size() != 3 || !d.contains("label") || !d.contains("bbox") || !d.contains("conf"))
      return "detection must be {label,bbox,conf}";
    if (!d["label"].is_string()) return "detection label must be a string";
    if (!is_number_array(d["bbox"], 4)) return "detection bbox must be [u0,v0,u1,v1]";
    if (!is_finite_number(d["conf"]) || d["conf"].get<double>() < 0.0 || d["conf"].get<double>() > 1.0)
      return "detection conf must be in [0,1]";
  }
  if (!j["events"].is_array()) return "events must be an array";
  for (const auto& e : j["events"])
    if (!e.is_string()) return "events must be strings";
  return std::nullopt;
}

struct CommandMessage {
  std::string text;
};

struct ProtocolError {
  std::string message;
};

inline std::variant<CommandMessage, ProtocolError> parse_client_message(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error&) {
    return ProtocolError{"malformed JSON"};
  }
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) return ProtocolError{"missing 'type'"};
  if (j["type"] != "command") return ProtocolError{"unsupported message type '" + j["type"].get<std::string>() + "'"};
  if (!j.contains("text") || !j["text"].is_string()) return ProtocolError{"command requires a string 'text'"};
  return CommandMessage{j["text"].get<std::string>()};
}

inline std::string ack_line(const std::string& text) {
  return nlohmann::json{{"type", "ack"}, {"text", text}}.dump() + "\n";
}

inline std::string error_line(const std::string& message) {
  return nlohmann::json{{"type", "error"}, {"message", message}}.dump() + "\n";
}

/// Multi-producer queue of raw command text, drained by the simulation tick.
class CommandQueue {
 public:
  void push(std::string text) {
    std::lock_guard lock(mutex_);
    pending_.push_back(std::move(text));
  }

  std::vector<std::string> drain() {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out(pending_.begin(), pending_.end());
    pending_.clear();
    return out;
  }

  bool empty() const {
    std::lock_guard lock(mutex_);
    return pending_.empty();
  }

 private:
  mutable std::mutex mutex_;
  std::deque<std::string> pending_;
};

}  // namespace gripsim
