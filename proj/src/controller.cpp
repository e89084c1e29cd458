// Copyright 2026 The CLAW Toolkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "claw/controller.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace claw::control {
namespace {

// SI units per pose unit: m/mm or rad/deg.
double si_per_unit(Axis a) { return is_rotational(a) ? kPi / 180.0 : 1e-3; }

ControllerGains critically_damped(double mass, double stiffness, double inertia,
                                  double rot_stiffness) {
  ControllerGains g;
  for (Axis a : kAllAxes) {
    const double m = is_rotational(a) ? inertia : mass;
    const double k = is_rotational(a) ? rot_stiffness : stiffness;
    g.virtual_mass[index(a)] = m;
    g.stiffness_to_target[index(a)] = k;
    g.virtual_damping[index(a)] = 2.0 * std::sqrt(k * m);
  }
  return g;
}

}  // namespace

ControllerGains compliant_gains() { return critically_damped(2.0, 2000.0, 0.05, 20.0); }

ControllerGains stiff_gains() { return critically_damped(4.0, 1e5, 0.05, 200.0); }

ControllerGains rigid_tracking_gains() {
  ControllerGains g = compliant_gains();
  g.stiffness_to_target.fill(std::numeric_limits<double>::infinity());
  return g;
}

double damping_ratio(const ControllerGains& g, Axis a) {
  const std::size_t i = index(a);
  const double k = g.stiffness_to_target[i];
  if (std::isinf(k)) return std::numeric_limits<double>::infinity();
  return g.virtual_damping[i] / (2.0 * std::sqrt(k * g.virtual_mass[i]));
}

void validate(const ControllerGains& g) {
  auto bad = [](const char* name, std::size_t i, const std::string& why) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("gains.") + name + "[" + std::to_string(i) + "] " + why,
                std::string("gains.") + name + "[" + std::to_string(i) + "]");
  };
  for (std::size_t i = 0; i < 6; ++i) {
    if (!(g.virtual_mass[i] > 0.0) || !std::isfinite(g.virtual_mass[i])) {
      bad("virtual_mass", i, "must be positive and finite");
    }
    if (!(g.virtual_damping[i] > 0.0) || !std::isfinite(g.virtual_damping[i])) {
      bad("virtual_damping", i, "must be positive and finite");
    }
    if (!(g.stiffness_to_target[i] > 0.0)) {
      bad("stiffness_to_target", i, "must be positive");
    }
    if (damping_ratio(g, kAllAxes[i]) < kMinDampingRatio) {
      bad("virtual_damping", i, "gives a damping ratio below 0.7");
    }
  }
  if (!(g.force_deadband >= 0.0) || !std::isfinite(g.force_deadband)) {
    throw Error(ErrorCode::kInvalidArgument, "gains.force_deadband must be >= 0",
                "gains.force_deadband");
  }
}

PlantState initial_plant(const Vec6& pose) {
  PlantState s;
  s.tcp_pose = pose;
  s.commanded_pose = pose;
  return s;
}

bool at_window_boundary(std::uint64_t tick) { return tick % kTicksPerWindow == 0; }

PlantState set_command(const PlantState& state, const Vec6& pose) {
  if (!all_finite(pose)) {
    throw Error(ErrorCode::kInvalidArgument, "commanded pose must be finite", "pose");
  }
  PlantState next = state;
  if (!next.pending_command && pose == next.commanded_pose) return next;
  next.pending_command = pose;
  return next;
}

PlantState latch_command(const PlantState& state) {
  PlantState next = state;
  if (next.pending_command && at_window_boundary(next.tick)) {
    next.commanded_pose = *next.pending_command;
    next.pending_command.reset();
  }
  return next;
}

PlantState integrate_dynamics(const PlantState& state, const ControllerGains& gains,
                              const Vec6& external_wrench, double dt) {
  PlantState next = state;
  for (Axis a : kAllAxes) {
    const std::size_t i = index(a);
    const double k = gains.stiffness_to_target[i];
    if (std::isinf(k)) {
      next.tcp_velocity[i] = (next.commanded_pose[i] - next.tcp_pose[i]) / dt;
      next.tcp_pose[i] = next.commanded_pose[i];
      continue;
    }
    const double f = si_per_unit(a);
    double ext = external_wrench[i];
    if (!is_rotational(a) && std::abs(ext) < gains.force_deadband) ext = 0.0;
    const double v = next.tcp_velocity[i] * f;
    const double err = (next.commanded_pose[i] - next.tcp_pose[i]) * f;
    const double accel = (ext - gains.virtual_damping[i] * v + k * err) /
                         gains.virtual_mass[i];
    const double v_new = v + accel * dt;
    next.tcp_velocity[i] = v_new / f;
    next.tcp_pose[i] += next.tcp_velocity[i] * dt;
  }
  return next;
}

PlantState step_controller(const PlantState& state, const ControllerGains& gains,
                           const Vec6& external_wrench, double dt) {
  if (!(dt > 0.0 && dt <= 0.01)) {
    throw Error(ErrorCode::kInvalidArgument, "controller dt must lie in (0, 0.01]", "dt");
  }
  PlantState next = integrate_dynamics(latch_command(state), gains, external_wrench, dt);
  ++next.tick;
  return next;
}

double virtual_energy(const PlantState& s, const ControllerGains& g) {
  double e = 0.0;
  for (Axis a : kAllAxes) {
    const std::size_t i = index(a);
    const double f = si_per_unit(a);
    const double v = s.tcp_velocity[i] * f;
    const double x = (s.commanded_pose[i] - s.tcp_pose[i]) * f;
    e += 0.5 * g.virtual_mass[i] * v * v;
    if (std::isfinite(g.stiffness_to_target[i])) {
      e += 0.5 * g.stiffness_to_target[i] * x * x;
    }
  }
  return e;
}

EStopMonitor check_estop(const EStopMonitor& monitor, const Vec6& wrench) {
  EStopMonitor next = monitor;
  if (next.tripped) return next;
  for (Axis a : kAllAxes) {
    const double limit = is_rotational(a) ? next.torque_threshold : next.force_threshold;
    const double v = wrench[index(a)];
    if (std::abs(v) > limit || std::isnan(v)) {
      next.tripped = true;
      next.trip_axis = a;
      break;
    }
  }
  return next;
}

EStopMonitor reset_estop(const EStopMonitor& monitor) {
  EStopMonitor next = monitor;
  next.tripped = false;
  next.trip_axis.reset();
  return next;
}

std::string_view wrench_label(Axis a) {
  static constexpr std::string_view kLabels[] = {"fx", "fy", "fz", "tx", "ty", "tz"};
  return kLabels[index(a)];
}

PlantState step_monitored(const PlantState& state, const ControllerGains& gains,
                          const Vec6& external_wrench, EStopMonitor& monitor,
                          double dt) {
  monitor = check_estop(monitor, external_wrench);
  if (monitor.tripped) {
    throw Error(ErrorCode::kEstopTripped,
                "emergency stop on " +
                    std::string(wrench_label(monitor.trip_axis.value_or(Axis::kX))));
  }
  return step_controller(state, gains, external_wrench, dt);
}

}  // namespace claw::control
