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

#include <map>
#include <stdexcept>
#include <string>

#include "gripsim/gripper.hpp"

namespace gripsim {

inline constexpr double kStandardGravity = 9.81;

/// Coulomb contact between the pads and a handle. Each of the `contact_count`
/// pads carries the full tip force as normal load.
struct ContactModel {
  double friction_mu = 0.589;
  int contact_count = 2;
  std::string material_pair = "wood-rubber";

  void validate() const {
    if (!(friction_mu > 0.0)) throw std::invalid_argument("friction_mu must be > 0");
    if (contact_count < 1) throw std::invalid_argument("contact_count must be >= 1");
  }

  double tangential_capacity(double normal_force) const { return contact_count * friction_mu * normal_force; }
};

struct Payload {
  double mass_kg = 1.0;
  std::string handle_material = "wood";
};

enum class GraspStatus { Holds, Slips };

/// Smallest joint torque whose friction capacity carries the static weight.
inline double required_torque_static(const Payload& payload, const ContactModel& contact,
                                     const GripperGeometry& geometry, double g = kStandardGravity) {
  const double normal_force = payload.mass_kg * g / (contact.contact_count * contact.friction_mu);
  return tip_force_to_torque(normal_force, geometry);
}

/// Largest upward acceleration before slip. Negative when the payload cannot
/// be held even at rest.
inline double max_acceleration(const Payload& payload, double torque, const ContactModel& contact,
                               const GripperGeometry& geometry, double g = kStandardGravity) {
  const double capacity = contact.tangential_capacity(torque_to_tip_force(torque, geometry));
  return capacity / payload.mass_kg - g;
}

/// Equality counts as holding.
inline GraspStatus slip_check(double grip_force, const Payload& payload, double vertical_accel,
                              const ContactModel& contact, double g = kStandardGravity) {
  const double demand = payload.mass_kg * (g + vertical_accel);
  return contact.tangential_capacity(grip_force) >= demand ? GraspStatus::Holds : GraspStatus::Slips;
}

class UnknownMaterialError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

using MaterialTable = std::map<std::string, double>;

inline MaterialTable default_material_table() {
  // wood-rubber is back-solved from an 8 kg static hold at 10 N·m.
  return {{"wood-rubber", 0.589}, {"steel-rubber", 0.45}, {"plastic-rubber", 0.50}};
}

inline double material_mu(const std::string& pair, const MaterialTable& table) {
  if (auto it = table.find(pair); it != table.end()) return it->second;
  std::string known;
  for (const auto& [name, mu] : table) {
    if (!known.empty()) known += ", ";
    known += name;
  }
  throw UnknownMaterialError("unknown material pair '" + pair + "' (known: " + known + ")");
}

inline ContactModel contact_for(const std::string& pair, const MaterialTable& table, int contact_count = 2) {
  return ContactModel{material_mu(pair, table), contact_count, pair};
}

}  // namespace gripsim
