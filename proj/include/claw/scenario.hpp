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

// Quasi-static contact scenarios: peg-in-hole, spring-loaded door handle and
// a flat wall.
//
// The wrist sits between the arm flange (the controller's tcp_pose) and the
// held object, whose pose is tcp_pose + deflection. Every inner tick the
// object is placed at static equilibrium between wrist and environment; the
// environment force passes through the wrist to the flange sensor and is
// what the admittance controller feels.
//
// World frame: hole axis and door pivot at the origin, surface at z = 0,
// +z away from the surface. Lengths mm, angles deg.

#ifndef CLAW_SCENARIO_HPP_
#define CLAW_SCENARIO_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "claw/controller.hpp"
#include "claw/core.hpp"
#include "claw/lockstate.hpp"
#include "claw/wrist.hpp"

namespace claw::scenario {

using lock::StiffnessMode;

enum class Kind { kPegInHole, kDoorHandle, kWallTouch };
std::string_view kind_name(Kind kind);  // "peg_in_hole", ...
std::optional<Kind> parse_kind(std::string_view name);

enum class Outcome { kRunning, kSuccess, kEstop, kTimeout, kSlip };
std::string_view outcome_name(Outcome outcome);
std::optional<Outcome> parse_outcome(std::string_view name);
inline bool is_terminal(Outcome o) { return o != Outcome::kRunning; }

struct PegGeometry {
  double peg_width = 10.0;
  double hole_clearance = 0.1;  // per side
  double hole_depth = 10.0;
  double chamfer_depth = 1.0;   // 45 degree chamfer
  double start_height = 2.0;    // peg tip above the surface at t = 0
};

struct DoorGeometry {
  double handle_spring = 0.02;       // N*m/deg
  double latch_angle = 45.0;         // deg
  double handle_length = 40.0;       // mm, pivot to grasp point
  double handle_damping = 0.02;      // N*m*s/deg
  double release_torque = 0.8;       // N*m, Free-mode release threshold
  double door_closer_stiffness = 0.05;  // N/mm once unlatched
  double success_angle = 5.0;        // deg
};

struct WallGeometry {
  double wall_distance = 10.0;  // mm along +y from the start pose
};

struct ContactParams {
  double stiffness = 500.0;  // N/mm
  double friction = 0.2;
};

// Grip ceiling: axial load above grip_force * pad_friction slips the object
// and ends the episode. pad_friction = 0 turns the check off.
struct GripParams {
  double grip_force = 7.5;  // N
  double pad_friction = 0.0;
};

struct ModeChange {
  double t = 0.0;
  StiffnessMode mode = StiffnessMode::kFree;
};

enum class GripperChoice { kClaw, kRigid, kFinRay };
std::string_view gripper_name(GripperChoice g);
std::optional<GripperChoice> parse_gripper(std::string_view name);

struct ScenarioConfig {
  Kind kind = Kind::kPegInHole;
  GripperChoice gripper = GripperChoice::kClaw;
  PegGeometry peg;
  DoorGeometry door;
  WallGeometry wall;
  ContactParams contact;
  GripParams grip;
  Vec6 initial_misalignment{};
  std::vector<ModeChange> mode_schedule;
  control::ControllerGains gains = control::compliant_gains();
  double force_threshold = 50.0;
  double torque_threshold = 10.0;
  double timeout = 60.0;  // s
  // Physics substeps per 2 ms control tick; commands and the lock still run
  // at the tick rate.
  int substeps = 1;
  std::uint64_t seed = 0;
};

// Defaults per kind: stiff tracking for peg and door, compliant tracking for
// the wall.
ScenarioConfig default_config(Kind kind);

// Throws Error(kInvalidConfig) naming the field, e.g. "geometry.hole_clearance".
void validate(const ScenarioConfig& config);

struct ScenarioStatus {
  Outcome outcome = Outcome::kRunning;
  double insertion_depth = 0.0;  // mm below the surface
  double handle_angle = 0.0;     // deg
  bool latch_released = false;
  bool handle_grasped = true;
  double elapsed = 0.0;          // s
};

struct ScenarioState {
  control::PlantState plant;
  lock::LockState lock;
  control::EStopMonitor monitor;
  ScenarioStatus status;
  StiffnessMode lever = StiffnessMode::kFree;
  std::size_t schedule_index = 0;
  double peak_force = 0.0;  // N, largest |(fx, fy, fz)| seen
  // Unclamped equilibrium deflection, used to warm-start the next solve.
  Vec6 raw_deflection{};
  // Generalized handle torque from the wrist at the last solve, N*m.
  double handle_torque = 0.0;
  // Events raised since the caller last cleared them.
  std::vector<std::string> events;
};

// Gripper model used by the scenario (claw uses the reference calibration).
wrist::GripperModel make_gripper(GripperChoice g);

// Pose of the flange at t = 0.
Vec6 start_pose(const ScenarioConfig& config);

// Initial state: paused at t = 0 with the lock at the schedule's t = 0 mode.
ScenarioState initial_state(const ScenarioConfig& config);

// Per-run context built once from a config.
class Scenario {
 public:
  explicit Scenario(ScenarioConfig config);

  const ScenarioConfig& config() const { return config_; }
  const wrist::GripperModel& gripper() const { return gripper_; }
  ScenarioState initial_state() const;

  // One 2 ms tick: schedule, lever, equilibrium, e-stop, controller, status.
  // A command is queued through set_command; a lever overrides the schedule.
  // No-op once the outcome is terminal.
  void step(ScenarioState& state, const std::optional<Vec6>& command = std::nullopt,
            const std::optional<StiffnessMode>& lever = std::nullopt) const;

 private:
  void solve_translational(ScenarioState& state, StiffnessMode mode) const;
  void solve_door(ScenarioState& state, StiffnessMode mode, double dt) const;
  // Equilibrium, status and stop checks for one physics substep. Returns
  // true when the outcome became terminal.
  bool settle(ScenarioState& state, StiffnessMode mode, double dt, int substep) const;

  ScenarioConfig config_;
  wrist::GripperModel gripper_;
  Vec6 start_;
};

// Force the environment applies to the peg tip at position (x, y, z).
// Zero when nothing interpenetrates. Throws kGeometryViolation for
// non-positive width or clearance.
Vec6 peg_contact_wrench(const Vec6& object_pose, const PegGeometry& geometry,
                        const ContactParams& contact = {});

// Static wrench the door exerts on the gripper with the handle held at
// handle_angle: the handle spring torque about the gripper yaw axis and
// the door-face reaction along z.
Vec6 door_contact_wrench(const Vec6& object_pose, double handle_angle,
                         const DoorGeometry& geometry, bool latch_released,
                         const ContactParams& contact = {});

// Wall plane at y = wall_distance relative to the start pose.
Vec6 wall_contact_wrench(const Vec6& object_pose, const WallGeometry& geometry,
                         const ContactParams& contact = {});

// Commands issued at each 20 ms boundary; nullopt holds the previous one.
struct WindowCommand {
  std::optional<Vec6> pose;
  std::optional<StiffnessMode> lever;
};
using CommandSource =
    std::function<WindowCommand(const ScenarioState& state, std::uint64_t window)>;

// Straight-down insertion to hole_depth + 3 mm below the surface at 10 mm/s.
CommandSource peg_insertion_script(const ScenarioConfig& config);
// Approach along +y at 10 mm/s to 3 mm past the wall.
CommandSource wall_approach_script(const ScenarioConfig& config);

// Scripted operator for the door: hold Full, rotate until the latch
// releases, switch the lever to Free, then push the door open while rotating
// the handle back. With variable_stiffness = false the lever never moves.
struct DoorScript {
  double hold = 0.5;           // s in Full before rotating
  double rotate_rate = 25.0;   // deg/s
  double max_rotation = 80.0;  // deg
  double settle = 0.2;         // s after the lever switch
  double push_distance = 60.0;  // mm along -z
  double push_duration = 0.6;  // s, also the rotate-back duration
  bool variable_stiffness = true;
};
CommandSource door_operator_script(const ScenarioConfig& config, DoorScript script = {});

// Default script for the config's kind.
CommandSource default_script(const ScenarioConfig& config);

struct RunResult {
  ScenarioState final_state;
  std::uint64_t ticks = 0;
};

// Observer called at every window boundary before stepping it.
using WindowObserver = std::function<void(const ScenarioState& state, std::uint64_t window,
                                          const WindowCommand& command)>;

// Steps until the outcome is terminal.
RunResult run_scenario(const Scenario& scenario, const CommandSource& source,
                       const WindowObserver& observer = {});

// Misalignment sweep over lateral offsets along one axis.
enum class SweepGripper { kClawFree, kClawHalf, kClawFull, kRigid, kFinRay };
std::string_view sweep_gripper_name(SweepGripper g);
std::optional<SweepGripper> parse_sweep_gripper(std::string_view name);
inline constexpr SweepGripper kAllSweepGrippers[] = {
    SweepGripper::kClawFree, SweepGripper::kClawHalf, SweepGripper::kClawFull,
    SweepGripper::kRigid, SweepGripper::kFinRay};

// Peg config for a sweep: the given gripper and a fixed mode schedule.
ScenarioConfig sweep_config(const ScenarioConfig& base, SweepGripper gripper);

struct SweepPoint {
  double offset_x = 0.0;
  double offset_y = 0.0;
  SweepGripper gripper = SweepGripper::kClawFree;
  Outcome outcome = Outcome::kRunning;
  double depth = 0.0;
  double peak_force = 0.0;
  double elapsed = 0.0;
};

// Runs the insertion script for every (offset_x, offset_y) pair, in order.
// Offsets are added to the config's initial misalignment.
std::vector<SweepPoint> misalignment_sweep(
    const ScenarioConfig& base, SweepGripper gripper,
    const std::vector<std::pair<double, double>>& offsets);

// Symmetric offsets -max..max in  increments along x and along y,
// x-axis entries first, each ascending.
std::vector<std::pair<double, double>> axis_offset_grid(double max, double step);

inline constexpr std::string_view kSweepCsvHeader =
    "offset_x_mm,offset_y_mm,gripper,outcome,depth_mm,peak_force_N,elapsed_s";
std::string sweep_csv_row(const SweepPoint& point);

}  // namespace claw::scenario

#endif  // CLAW_SCENARIO_HPP_
