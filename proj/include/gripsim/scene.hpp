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
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "gripsim/grasp_stability.hpp"

namespace gripsim {

using Vec3 = Eigen::Vector3d;
using Rng = std::mt19937_64;

inline constexpr double kDegPerRad = 180.0 / std::numbers::pi;

/// The 80 COCO detection categories.
inline const std::vector<std::string>& coco_classes() {
  static const std::vector<std::string> classes = {
      "person", "bicycle", "car", "motorcycle", "airplane", "bus", "train", "truck", "boat",
      "traffic light", "fire hydrant", "stop sign", "parking meter", "bench", "bird", "cat", "dog",
      "horse", "sheep", "cow", "elephant", "bear", "zebra", "giraffe", "backpack", "umbrella",
      "handbag", "tie", "suitcase", "frisbee", "skis", "snowboard", "sports ball", "kite",
      "baseball bat", "baseball glove", "skateboard", "surfboard", "tennis racket", "bottle",
      "wine glass", "cup", "fork", "knife", "spoon", "bowl", "banana", "apple", "sandwich",
      "orange", "broccoli", "carrot", "hot dog", "pizza", "donut", "cake", "chair", "couch",
      "potted plant", "bed", "dining table", "toilet", "tv", "laptop", "mouse", "remote",
      "keyboard", "cell phone", "microwave", "oven", "toaster", "sink", "refrigerator", "book",
      "clock", "vase", "scissors", "teddy bear", "hair drier", "toothbrush"};
  return classes;
}

inline bool is_known_class(const std::string& label, std::span<const std::string> known) {
  return std::find(known.begin(), known.end(), label) != known.end();
}

/// Objects are spheres of `bounding_radius` for sensing; positions in the torso
/// frame (x forward, y left, z up).
struct SceneObject {
  std::string class_label;
  Vec3 position = Vec3::Zero();
  double bounding_radius = 0.04;
  Vec3 principal_axis = Vec3::UnitZ();
  std::string handle_material = "wood-rubber";
  double mass_kg = 0.5;

  void validate(std::span<const std::string> known) const {
    if (!(bounding_radius > 0.0)) throw std::invalid_argument("object bounding_radius must be > 0");
    if (!(mass_kg > 0.0)) throw std::invalid_argument("object mass_kg must be > 0");
    if (!is_known_class(class_label, known))
      throw std::invalid_argument("object class '" + class_label + "' is not a known class");
  }
};

enum class ProjectionModel { Linear, Perspective };

struct CameraModel {
  double fov_h_deg = 60.0;
  double fov_v_deg = 45.0;
  int dim_w = 640;
  int dim_h = 480;
  double max_detect_range = 3.0;
  double pixel_noise_sigma = 0.0;
  double false_negative_rate = 0.0;
  ProjectionModel projection = ProjectionModel::Linear;

  void validate() const {
    if (!(fov_h_deg > 0.0 && fov_h_deg < 180.0 && fov_v_deg > 0.0 && fov_v_deg < 180.0))
      throw std::invalid_argument("camera fov must be in (0, 180) degrees");
    if (dim_w <= 0 || dim_h <= 0) throw std::invalid_argument("camera dims must be > 0");
    if (!(max_detect_range > 0.0)) throw std::invalid_argument("max_detect_range must be > 0");
    if (pixel_noise_sigma < 0.0) throw std::invalid_argument("pixel_noise_sigma must be >= 0");
    if (!(false_negative_rate >= 0.0 && false_negative_rate <= 1.0))
      throw std::invalid_argument("false_negative_rate must be in [0, 1]");
  }

  /// Pixel coordinate of a bearing (degrees, positive right / down) on one axis.
  double bearing_to_pixel(double bearing_deg, double fov_deg, int dim) const {
    const double ref = 0.5 * dim;
    if (projection == ProjectionModel::Linear) return ref + bearing_deg * dim / fov_deg;
    const double focal = ref / std::tan(0.5 * fov_deg / kDegPerRad);
    return ref + focal * std::tan(bearing_deg / kDegPerRad);
  }
};

struct BoundingBox {
  double u_min = 0, v_min = 0, u_max = 0, v_max = 0;
  double area() const { return (u_max - u_min) * (v_max - v_min); }
};

struct Detection {
  std::string class_label;
  BoundingBox bbox;
  double centroid_u = 0.0;
  double centroid_v = 0.0;
  double confidence = 1.0;
};

struct TcpState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 acceleration = Vec3::Zero();
  double wrist_yaw = 0.0;
  double wrist_pitch = 0.0;
  double wrist_yaw_rate = 0.0;
  double wrist_pitch_rate = 0.0;
};

struct ArmLimits {
  double v_max = 0.8;
  double a_max = 6.0;
  double wrist_rate_max = 1.5;  // rad/s
  double natural_freq = 15.0;   // rad/s, critically damped tracker
  Vec3 workspace_min{0.0, -0.8, -0.2};
  Vec3 workspace_max{1.2, 0.8, 1.5};

  void validate() const {
    if (!(v_max > 0.0 && a_max > 0.0 && wrist_rate_max > 0.0 && natural_freq > 0.0))
      throw std::invalid_argument("arm limits must be > 0");
    if (!(workspace_min.array() < workspace_max.array()).all())
      throw std::invalid_argument("workspace_min must be below workspace_max on every axis");
  }
};

/// Tracking reference. Feed-forward terms let the tracker follow smooth
/// trajectories without lag.
struct CartesianRef {
  Vec3 position = Vec3::Zero();
  Vec3 velocity_ff = Vec3::Zero();
  Vec3 accel_ff = Vec3::Zero();
  double wrist_yaw = 0.0;
  double wrist_pitch = 0.0;
};

struct TcpStepResult {
  TcpState state;
  bool ref_clamped = false;
  bool saturated = false;
};

/// Sensor head frame carried by the TCP: forward is the approach axis.
struct SensorFrame {
  Vec3 forward;
  Vec3 left;
  Vec3 up;
};

inline SensorFrame sensor_frame(double yaw, double pitch) {
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  return {Vec3{cp * cy, cp * sy, sp}, Vec3{-sy, cy, 0.0}, Vec3{-sp * cy, -sp * sy, cp}};
}

inline SensorFrame sensor_frame(const TcpState& tcp) { return sensor_frame(tcp.wrist_yaw, tcp.wrist_pitch); }

/// Angle between the approach axis and the torso x axis, degrees.
inline double approach_axis_deviation_deg(const TcpState& tcp) {
  const Vec3 f = sensor_frame(tcp).forward;
  return std::acos(std::clamp(f.x(), -1.0, 1.0)) * kDegPerRad;
}

/// Horizontal (positive right) and vertical (positive down) bearings in degrees.
struct Bearing {
  double horizontal_deg = 0.0;
  double vertical_deg = 0.0;
  double forward_m = 0.0;
  double range_m = 0.0;
};

inline Bearing bearing_of(const Vec3& point, const TcpState& tcp) {
  const SensorFrame frame = sensor_frame(tcp);
  const Vec3 r = point - tcp.position;
  Bearing b;
  b.forward_m = r.dot(frame.forward);
  b.range_m = r.norm();
  b.horizontal_deg = std::atan2(-r.dot(frame.left), b.forward_m) * kDegPerRad;
  b.vertical_deg = std::atan2(-r.dot(frame.up), b.forward_m) * kDegPerRad;
  return b;
}

namespace detail {

// Distance along a unit ray to the entry point of a sphere, if hit ahead.
inline std::optional<double> ray_sphere(const Vec3& origin, const Vec3& dir, const Vec3& center, double radius) {
  const Vec3 oc = center - origin;
  const double along = oc.dot(dir);
  const double perp2 = oc.squaredNorm() - along * along;
  const double r2 = radius * radius;
  if (perp2 > r2) return std::nullopt;
  const double half = std::sqrt(r2 - perp2);
  const double t_near = along - half;
  const double t_far = along + half;
  if (t_far < 0.0) return std::nullopt;
  return std::max(t_near, 0.0);
}

}  // namespace detail

/// Ideal detector: projects every visible object center and draws a box from
/// its angular radius, clipped to the image.
inline std::vector<Detection> render_detections(const TcpState& tcp, const CameraModel& camera,
                                                std::span<const SceneObject> scene, Rng& rng) {
  std::vector<Detection> out;
  std::normal_distribution<double> pixel_noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const SceneObject& obj = scene[i];
    const Bearing b = bearing_of(obj.position, tcp);
    if (b.forward_m <= 0.0 || b.range_m > camera.max_detect_range || b.range_m <= obj.bounding_radius) continue;
    if (std::abs(b.horizontal_deg) > 0.5 * camera.fov_h_deg || std::abs(b.vertical_deg) > 0.5 * camera.fov_v_deg)
      continue;

    // Nearest-object occlusion of the center ray.
    const Vec3 dir = (obj.position - tcp.position) / b.range_m;
    bool occluded = false;
    for (std::size_t j = 0; j < scene.size() && !occluded; ++j) {
      if (j == i) continue;
      if (auto hit = detail::ray_sphere(tcp.position, dir, scene[j].position, scene[j].bounding_radius))
        occluded = *hit < b.range_m - obj.bounding_radius;
    }
    if (occluded) continue;

    if (camera.false_negative_rate > 0.0 && unit(rng) < camera.false_negative_rate) continue;

    double du = 0.0, dv = 0.0;
    if (camera.pixel_noise_sigma > 0.0) {
      du = camera.pixel_noise_sigma * pixel_noise(rng);
      dv = camera.pixel_noise_sigma * pixel_noise(rng);
    }
    const double alpha_deg = std::asin(std::min(1.0, obj.bounding_radius / b.range_m)) * kDegPerRad;
    BoundingBox box;
    box.u_min = camera.bearing_to_pixel(b.horizontal_deg - alpha_deg, camera.fov_h_deg, camera.dim_w) + du;
    box.u_max = camera.bearing_to_pixel(b.horizontal_deg + alpha_deg, camera.fov_h_deg, camera.dim_w) + du;
    box.v_min = camera.bearing_to_pixel(b.vertical_deg - alpha_deg, camera.fov_v_deg, camera.dim_h) + dv;
    box.v_max = camera.bearing_to_pixel(b.vertical_deg + alpha_deg, camera.fov_v_deg, camera.dim_h) + dv;
    box.u_min = std::clamp(box.u_min, 0.0, static_cast<double>(camera.dim_w));
    box.u_max = std::clamp(box.u_max, 0.0, static_cast<double>(camera.dim_w));
    box.v_min = std::clamp(box.v_min, 0.0, static_cast<double>(camera.dim_h));
    box.v_max = std::clamp(box.v_max, 0.0, static_cast<double>(camera.dim_h));
    if (box.area() <= 0.0) continue;

    Detection det;
    det.class_label = obj.class_label;
    det.bbox = box;
    det.centroid_u = 0.5 * (box.u_min + box.u_max);
    det.centroid_v = 0.5 * (box.v_min + box.v_max);
    det.confidence = std::clamp(1.0 - 0.4 * b.range_m / camera.max_detect_range, 0.0, 1.0);
    out.push_back(std::move(det));
  }
  return out;
}

inline std::vector<Detection> render_detections(const TcpState& tcp, const CameraModel& camera,
                                                std::span<const SceneObject> scene, std::uint64_t seed) {
  Rng rng(seed);
  return render_detections(tcp, camera, scene, rng);
}

struct TofModel {
  double max_range = 4.0;
  double noise_sigma = 0.005;

  void validate() const {
    if (!(max_range > 0.0)) throw std::invalid_argument("tof max_range must be > 0");
    if (noise_sigma < 0.0) throw std::invalid_argument("tof noise_sigma must be >= 0");
  }
};

/// Single ray along the approach axis; empty when nothing is hit within range.
inline std::optional<double> tof_measure(const TcpState& tcp, std::span<const SceneObject> scene,
                                         const TofModel& tof, Rng& rng) {
  if (!(tof.max_range > 0.0)) throw std::domain_error("tof_measure: max_range must be > 0");
  const Vec3 dir = sensor_frame(tcp).forward;
  std::optional<double> nearest;
  for (const auto& obj : scene) {
    if (auto hit = detail::ray_sphere(tcp.position, dir, obj.position, obj.bounding_radius)) {
      if (!nearest || *hit < *nearest) nearest = hit;
    }
  }
  if (!nearest || *nearest > tof.max_range) return std::nullopt;
  double d = *nearest;
  if (tof.noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, tof.noise_sigma);
    d = std::max(0.0, d + noise(rng));
  }
  return d;
}

inline std::optional<double> tof_measure(const TcpState& tcp, std::span<const SceneObject> scene,
                                         const TofModel& tof, std::uint64_t seed) {
  Rng rng(seed);
  return tof_measure(tcp, scene, tof, rng);
}

struct ImuSample {
  Vec3 linear_accel = Vec3::Zero();  // proper acceleration, sensor frame
  Vec3 angular_rate = Vec3::Zero();  // rad/s, sensor frame
};

inline ImuSample imu_sample(const TcpState& tcp, double g = kStandardGravity) {
  const SensorFrame frame = sensor_frame(tcp);
  const Vec3 proper = tcp.acceleration + Vec3{0.0, 0.0, g};
  // Pitch up is a rotation about the negative left axis.
  const Vec3 omega = tcp.wrist_yaw_rate * Vec3::UnitZ() - tcp.wrist_pitch_rate * frame.left;
  ImuSample s;
  s.linear_accel = {proper.dot(frame.forward), proper.dot(frame.left), proper.dot(frame.up)};
  s.angular_rate = {omega.dot(frame.forward), omega.dot(frame.left), omega.dot(frame.up)};
  return s;
}

/// Critically damped per-axis tracker with velocity and acceleration saturation.
inline TcpStepResult step_tcp(const TcpState& state, const CartesianRef& ref, const ArmLimits& limits, double dt) {
  if (!(dt > 0.0)) throw std::domain_error("step_tcp: dt must be > 0");
  TcpStepResult result;
  TcpState& next = result.state;
  next = state;

  Vec3 target = ref.position.cwiseMax(limits.workspace_min).cwiseMin(limits.workspace_max);
  result.ref_clamped = (target - ref.position).cwiseAbs().maxCoeff() > 0.0;

  const double wn = limits.natural_freq;
  for (int k = 0; k < 3; ++k) {
    const double a_cmd = ref.accel_ff[k] + wn * wn * (target[k] - state.position[k]) +
                         2.0 * wn * (ref.velocity_ff[k] - state.velocity[k]);
    double a = std::clamp(a_cmd, -limits.a_max, limits.a_max);
    if (a != a_cmd) result.saturated = true;
    double v = state.velocity[k] + a * dt;
    if (std::abs(v) > limits.v_max) {
      v = std::clamp(v, -limits.v_max, limits.v_max);
      result.saturated = true;
    }
    double p = state.position[k] + v * dt;
    if (p < limits.workspace_min[k] || p > limits.workspace_max[k]) {
      p = std::clamp(p, limits.workspace_min[k], limits.workspace_max[k]);
      v = 0.0;
    }
    next.position[k] = p;
    next.acceleration[k] = std::clamp((v - state.velocity[k]) / dt, -limits.a_max, limits.a_max);
    next.velocity[k] = v;
  }

  const double gain = std::min(wn, 1.0 / dt);
  auto slew = [&](double current, double goal, double& rate) {
    rate = std::clamp(gain * (goal - current), -limits.wrist_rate_max, limits.wrist_rate_max);
    return current + rate * dt;
  };
  next.wrist_yaw = slew(state.wrist_yaw, ref.wrist_yaw, next.wrist_yaw_rate);
  next.wrist_pitch = slew(state.wrist_pitch, ref.wrist_pitch, next.wrist_pitch_rate);
  return result;
}

struct WristScanParams {
  double amplitude_rad = 0.35;
  double period_s = 8.0;
  double center_yaw = 0.0;
  double pitch = 0.0;
};

struct WristPose {
  double yaw = 0.0;
  double pitch = 0.0;
};

/// Triangle-wave yaw sweep: center at t = 0, +amplitude at a quarter period.
inline WristPose wrist_scan_pose(double t, const WristScanParams& scan) {
  const double phase = t / scan.period_s - std::floor(t / scan.period_s);  // [0, 1)
  double unit;
  if (phase < 0.25) {
    unit = 4.0 * phase;
  } else if (phase < 0.75) {
    unit = 2.0 - 4.0 * phase;
  } else {
    unit = 4.0 * phase - 4.0;
  }
  return {scan.center_yaw + scan.amplitude_rad * unit, scan.pitch};
}

}  // namespace gripsim
