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

// Cartesian admittance controller around a position-controlled arm.
//
// Per axis: M a = F_ext - D v + K (commanded - pose), integrated with
// semi-implicit Euler at 500 Hz. Poses are mm/deg; gains are SI (N/m,
// N*m/rad, ...) and converted internally. Pose commands are latched at 20 ms
// window boundaries.

#ifndef CLAW_CONTROLLER_HPP_
#define CLAW_CONTROLLER_HPP_

#include <cstdint>
#include <optional>
#include <string_view>

#include "claw/core.hpp"

namespace claw::control {

inline constexpr double kInnerDt = 0.002;        // s
inline constexpr double kCommandPeriod = 0.02;   // s
inline constexpr int kTicksPerWindow = 10;
inline constexpr double kMinDampingRatio = 0.7;

struct ControllerGains {
  Vec6 virtual_mass{};         // kg, kg*m^2
  Vec6 virtual_damping{};      // N*s/m, N*m*s/rad
  Vec6 stiffness_to_target{};  // N/m, N*m/rad; +inf means pure tracking
  double force_deadband = 0.0;  // N, applied to force components only
};

// Soft tracking for contact work: 2 kg, 2000 N/m, critically damped.
ControllerGains compliant_gains();
// Stiff tracking for insertion sweeps: 4 kg, 1e5 N/m, critically damped.
ControllerGains stiff_gains();
// Infinite stiffness on every axis: the pose follows the command exactly.
ControllerGains rigid_tracking_gains();

// D / (2 sqrt(K M)); +inf when K is infinite.
double damping_ratio(const ControllerGains& gains, Axis axis);

// Throws Error(kInvalidArgument) with field "gains.<name>[i]".
void validate(const ControllerGains& gains);

struct PlantState {
  Vec6 tcp_pose{};
  Vec6 tcp_velocity{};
  Vec6 commanded_pose{};
  std::optional<Vec6> pending_command;
  std::uint64_t tick = 0;
  Vec6 wrist_deflection{};
  Vec6 measured_wrench{};

  double time() const { return static_cast<double>(tick) * kInnerDt; }
};

PlantState initial_plant(const Vec6& pose);

bool at_window_boundary(std::uint64_t tick);

// Queues a pose for the next window boundary. Later calls in the same window
// replace earlier ones. Throws kInvalidArgument for non-finite poses.
PlantState set_command(const PlantState& state, const Vec6& pose);

// Latches the pending command when the tick is on a window boundary.
PlantState latch_command(const PlantState& state);

// One inner step: latch_command, integrate_dynamics, advance the tick.
// dt must lie in (0, 0.01].
PlantState step_controller(const PlantState& state, const ControllerGains& gains,
                           const Vec6& external_wrench, double dt = kInnerDt);

// The admittance dynamics alone: no command latching, no tick advance.
PlantState integrate_dynamics(const PlantState& state, const ControllerGains& gains,
                              const Vec6& external_wrench, double dt);

// Kinetic plus virtual-spring energy in joules, about the commanded pose.
double virtual_energy(const PlantState& state, const ControllerGains& gains);

struct EStopMonitor {
  double force_threshold = 50.0;   // N
  double torque_threshold = 10.0;  // N*m
  bool tripped = false;
  std::optional<Axis> trip_axis;
};

// Latches on the first component whose magnitude exceeds its threshold.
EStopMonitor check_estop(const EStopMonitor& monitor, const Vec6& wrench);
EStopMonitor reset_estop(const EStopMonitor& monitor);

// "fx", "fy", "fz", "tx", "ty", "tz".
std::string_view wrench_label(Axis axis);

// step_controller guarded by the monitor: updates it with the wrench and
// throws Error(kEstopTripped) if it is or becomes tripped.
PlantState step_monitored(const PlantState& state, const ControllerGains& gains,
                          const Vec6& external_wrench, EStopMonitor& monitor,
                          double dt = kInnerDt);

}  // namespace claw::control

#endif  // CLAW_CONTROLLER_HPP_
