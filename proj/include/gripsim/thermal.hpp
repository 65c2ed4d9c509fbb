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
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gripsim {

/// First-order winding model: dT/dt = (ambient + A·tau² - T) / time_constant.
///
/// `loss_gain` is the lumped product of thermal resistance and the Joule loss
/// coefficient; only that product is observable from endurance curves.
struct ThermalParams {
  double ambient_c = 25.0;
  double loss_gain = 0.4503566927538091;  // °C per (N·m)²
  double time_constant_s = 119.03227454217766;
  double winding_limit_c = 130.0;
  double cutoff_c = 85.0;

  void validate() const {
    if (!(loss_gain > 0.0)) throw std::invalid_argument("loss_gain must be > 0");
    if (!(time_constant_s > 0.0)) throw std::invalid_argument("time_constant_s must be > 0");
    if (!(ambient_c < cutoff_c && cutoff_c < winding_limit_c))
      throw std::invalid_argument("require ambient_c < cutoff_c < winding_limit_c");
  }
};

struct ThermalState {
  double winding_temp_c = 25.0;
  double time_s = 0.0;
};

inline double steady_state_temp(double torque, const ThermalParams& params) {
  if (!(torque >= 0.0)) throw std::domain_error("steady_state_temp: torque must be >= 0");
  return params.ambient_c + params.loss_gain * torque * torque;
}

/// Exact exponential update under constant torque over dt.
inline ThermalState step_temperature(const ThermalState& state, double torque, double dt,
                                     const ThermalParams& params) {
  if (!(dt > 0.0)) throw std::domain_error("step_temperature: dt must be > 0");
  const double target = steady_state_temp(torque, params);
  ThermalState next;
  next.winding_temp_c = target + (state.winding_temp_c - target) * std::exp(-dt / params.time_constant_s);
  next.time_s = state.time_s + dt;
  return next;
}

/// Time for the winding to heat from `start_c` to `target_c` at constant torque.
/// Empty when the target is never reached from below.
inline std::optional<double> time_to_temperature(double start_c, double torque, double target_c,
                                                 const ThermalParams& params) {
  const double ss = steady_state_temp(torque, params);
  if (start_c >= target_c) {
    // Already at or above the target. Heating never brings T down to it.
    if (start_c == target_c) return 0.0;
    return std::nullopt;
  }
  if (ss <= target_c) return std::nullopt;
  return -params.time_constant_s * std::log((ss - target_c) / (ss - start_c));
}

inline bool is_derated(const ThermalState& state, const ThermalParams& params) {
  return state.winding_temp_c >= params.cutoff_c;
}

/// One observation of an endurance curve that started at ambient.
/// An infinite `time_s` marks a steady-state reading.
struct ThermalAnchor {
  double torque_nm = 0.0;
  double time_s = 0.0;
  double temp_c = 0.0;
};

struct ThermalFit {
  ThermalParams params;
  double residual_rms_c = 0.0;
  bool time_constant_identified = false;
};

class ThermalFitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline double heating_fraction(double time_s, double time_constant_s) {
  if (std::isinf(time_s)) return 1.0;
  return -std::expm1(-time_s / time_constant_s);
}

// Profile least squares: for a fixed time constant the optimal gain is linear.
struct ThermalProfile {
  std::span<const ThermalAnchor> anchors;
  double ambient_c;

  double gain_at(double tc) const {
    double num = 0.0, den = 0.0;
    for (const auto& a : anchors) {
      const double g = a.torque_nm * a.torque_nm * heating_fraction(a.time_s, tc);
      num += g * (a.temp_c - ambient_c);
      den += g * g;
    }
    return num / den;
  }

  double sse_at(double tc) const {
    const double gain = gain_at(tc);
    double sse = 0.0;
    for (const auto& a : anchors) {
      const double r = a.temp_c - ambient_c - gain * a.torque_nm * a.torque_nm * heating_fraction(a.time_s, tc);
      sse += r * r;
    }
    return sse;
  }

  // d(sse)/d(tc) with the gain held at its optimum (envelope theorem).
  double slope_at(double tc) const {
    const double gain = gain_at(tc);
    double d = 0.0;
    for (const auto& a : anchors) {
      if (std::isinf(a.time_s)) continue;
      const double q2 = a.torque_nm * a.torque_nm;
      const double r = a.temp_c - ambient_c - gain * q2 * heating_fraction(a.time_s, tc);
      const double dfrac = -std::exp(-a.time_s / tc) * a.time_s / (tc * tc);
      d += -2.0 * r * gain * q2 * dfrac;
    }
    return d;
  }
};

}  // namespace detail

/// Identifies loss_gain and time_constant_s from endurance anchors.
///
/// `base` supplies ambient-independent fields (limits, cutoff) and the time
/// constant used when only steady-state anchors are given.
inline ThermalFit fit_thermal_params(std::span<const ThermalAnchor> anchors, double ambient_c,
                                     ThermalParams base = {}) {
  if (anchors.empty()) throw ThermalFitError("fit_thermal_params: no anchors");
  std::vector<double> transient_times;
  for (const auto& a : anchors) {
    if (!(a.torque_nm > 0.0))
      throw ThermalFitError("fit_thermal_params: anchor torque must be > 0 (got " + std::to_string(a.torque_nm) + ")");
    if (!(a.temp_c > ambient_c))
      throw ThermalFitError("fit_thermal_params: anchor temperature " + std::to_string(a.temp_c) +
                            " C is not above ambient " + std::to_string(ambient_c) + " C");
    if (!(a.time_s > 0.0)) throw ThermalFitError("fit_thermal_params: anchor time must be > 0");
    if (!std::isinf(a.time_s)) transient_times.push_back(a.time_s);
  }

  ThermalFit fit;
  fit.params = base;
  fit.params.ambient_c = ambient_c;
  detail::ThermalProfile profile{anchors, ambient_c};

  if (transient_times.empty()) {
    fit.params.loss_gain = profile.gain_at(base.time_constant_s);
    fit.residual_rms_c = std::sqrt(profile.sse_at(base.time_constant_s) / static_cast<double>(anchors.size()));
    fit.time_constant_identified = false;
    return fit;
  }
  if (anchors.size() < 2) {
    throw ThermalFitError(
        "fit_thermal_params: a single transient anchor cannot separate gain and time constant");
  }

  // Coarse log-spaced scan, then bisection on the slope around the best cell.
  const auto [tmin, tmax] = std::minmax_element(transient_times.begin(), transient_times.end());
  const double lo = *tmin * 1e-3;
  const double hi = *tmax * 1e3;
  constexpr int kGrid = 600;
  std::vector<double> grid(kGrid + 1);
  int best = 0;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kGrid; ++i) {
    grid[i] = lo * std::pow(hi / lo, static_cast<double>(i) / kGrid);
    const double sse = profile.sse_at(grid[i]);
    if (sse < best_sse) {
      best_sse = sse;
      best = i;
    }
  }
  if (best == 0 || best == kGrid) {
    throw ThermalFitError(
        "fit_thermal_params: degenerate or inconsistent anchors (optimal time constant at search "
        "bound " + std::to_string(grid[best]) + " s, sse " + std::to_string(best_sse) + ")");
  }
  double a = grid[best - 1];
  double b = grid[best + 1];
  double sa = profile.slope_at(a);
  if (!(sa < 0.0 && profile.slope_at(b) > 0.0)) {
    throw ThermalFitError("fit_thermal_params: residual has no interior minimum; anchors are degenerate");
  }
  for (int it = 0; it < 200 && b - a > 1e-14 * b; ++it) {
    const double m = 0.5 * (a + b);
    const double sm = profile.slope_at(m);
    if (sm < 0.0) {
      a = m;
    } else {
      b = m;
    }
  }
  const double tc = 0.5 * (a + b);
  fit.params.time_constant_s = tc;
  fit.params.loss_gain = profile.gain_at(tc);
  fit.residual_rms_c = std::sqrt(profile.sse_at(tc) / static_cast<double>(anchors.size()));
  fit.time_constant_identified = true;
  return fit;
}

}  // namespace gripsim
