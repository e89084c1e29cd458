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

#include "claw/scenario.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <cstdint>
#include <memory>

#include "claw/format.hpp"

namespace claw::scenario {
namespace {

using control::PlantState;
using lock::mode_name;

constexpr double kDt = control::kInnerDt;

[[noreturn]] void bad_config(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::kInvalidConfig, field + ": " + why, field);
}

bool positive(double v) { return v > 0.0 && std::isfinite(v); }

// Contact of one mirrored peg corner (q outward, z up) with the hole side
// solid: rim top at z = 0 beyond h + c, a 45 degree chamfer down to (h, -c),
// then the vertical wall. Returns (f_q, f_z) on the peg.
std::pair<double, double> side_contact(double q, double z, double h, double c,
                                       double k, double mu) {
  if (z >= 0.0) return {0.0, 0.0};
  const double edge = z > -c ? h + c + z : h;
  if (q <= edge) return {0.0, 0.0};

  struct Candidate {
    double bq, bz;  // closest boundary point
    double tq, tz;  // upward unit tangent, zero for the rim top
  };
  Candidate best{std::max(q, h + c), 0.0, 0.0, 0.0};
  double best_d2 = (best.bq - q) * (best.bq - q) + z * z;
  auto consider = [&](const Candidate& cand) {
    const double d2 = (cand.bq - q) * (cand.bq - q) + (cand.bz - z) * (cand.bz - z);
    if (d2 < best_d2) {
      best_d2 = d2;
      best = cand;
    }
  };
  if (c > 0.0) {
    // Segment (h, -c) -> (h + c, 0), parameterized along its upward tangent.
    const double inv = 1.0 / std::sqrt(2.0);
    const double s = std::clamp(((q - h) + (z + c)) * inv, 0.0, c * std::sqrt(2.0));
    consider({h + s * inv, -c + s * inv, inv, inv});
  }
  consider({h, std::min(z, -c), 0.0, 1.0});

  const double fq = k * (best.bq - q);
  const double fz = k * (best.bz - z);
  const double normal = std::sqrt(best_d2) * k;
  return {fq + mu * normal * best.tq, fz + mu * normal * best.tz};
}

Vec6 translational(const Vec6& v) { return {v[0], v[1], v[2], 0.0, 0.0, 0.0}; }

}  // namespace

std::string_view kind_name(Kind kind) {
  switch (kind) {
    case Kind::kPegInHole: return "peg_in_hole";
    case Kind::kDoorHandle: return "door_handle";
    case Kind::kWallTouch: return "wall_touch";
  }
  return "peg_in_hole";
}

std::optional<Kind> parse_kind(std::string_view name) {
  for (Kind k : {Kind::kPegInHole, Kind::kDoorHandle, Kind::kWallTouch}) {
    if (kind_name(k) == name) return k;
  }
  return std::nullopt;
}

std::string_view outcome_name(Outcome o) {
  switch (o) {
    case Outcome::kRunning: return "running";
    case Outcome::kSuccess: return "success";
    case Outcome::kEstop: return "estop";
    case Outcome::kTimeout: return "timeout";
    case Outcome::kSlip: return "slip";
  }
  return "running";
}

std::optional<Outcome> parse_outcome(std::string_view name) {
  for (Outcome o : {Outcome::kRunning, Outcome::kSuccess, Outcome::kEstop,
                    Outcome::kTimeout, Outcome::kSlip}) {
    if (outcome_name(o) == name) return o;
  }
  return std::nullopt;
}

std::string_view gripper_name(GripperChoice g) {
  switch (g) {
    case GripperChoice::kClaw: return "claw";
    case GripperChoice::kRigid: return "rigid";
    case GripperChoice::kFinRay: return "finray";
  }
  return "claw";
}

std::optional<GripperChoice> parse_gripper(std::string_view name) {
  for (GripperChoice g : {GripperChoice::kClaw, GripperChoice::kRigid, GripperChoice::kFinRay}) {
    if (gripper_name(g) == name) return g;
  }
  return std::nullopt;
}

ScenarioConfig default_config(Kind kind) {
  ScenarioConfig c;
  c.kind = kind;
  c.gains = kind == Kind::kWallTouch ? control::compliant_gains() : control::stiff_gains();
  return c;
}

void validate(const ScenarioConfig& c) {
  const PegGeometry& p = c.peg;
  if (c.kind == Kind::kPegInHole) {
    if (!positive(p.peg_width)) bad_config("geometry.peg_width", "must be positive");
    if (!positive(p.hole_clearance)) bad_config("geometry.hole_clearance", "must be positive");
    if (!positive(p.hole_depth)) bad_config("geometry.hole_depth", "must be positive");
    if (!(p.chamfer_depth >= 0.0) || !std::isfinite(p.chamfer_depth)) {
      bad_config("geometry.chamfer_depth", "must be non-negative");
    }
    if (p.chamfer_depth >= p.hole_depth) {
      bad_config("geometry.chamfer_depth", "must be shallower than the hole");
    }
    if (!(p.start_height >= 0.0) || !std::isfinite(p.start_height)) {
      bad_config("geometry.start_height", "must be non-negative");
    }
  }
  const DoorGeometry& d = c.door;
  if (c.kind == Kind::kDoorHandle) {
    if (!positive(d.handle_spring)) bad_config("geometry.handle_spring", "must be positive");
    if (!(d.latch_angle > 0.0 && d.latch_angle <= 90.0)) {
      bad_config("geometry.latch_angle", "must lie in (0, 90]");
    }
    if (!positive(d.handle_length)) bad_config("geometry.handle_length", "must be positive");
    if (!positive(d.handle_damping)) bad_config("geometry.handle_damping", "must be positive");
    if (!positive(d.release_torque)) bad_config("geometry.release_torque", "must be positive");
    if (!positive(d.door_closer_stiffness)) {
      bad_config("geometry.door_closer_stiffness", "must be positive");
    }
    if (!(d.success_angle >= 0.0 && d.success_angle < d.latch_angle)) {
      bad_config("geometry.success_angle", "must lie in [0, latch_angle)");
    }
  }
  if (c.kind == Kind::kWallTouch && !positive(c.wall.wall_distance)) {
    bad_config("geometry.wall_distance", "must be positive");
  }
  if (!positive(c.contact.stiffness)) bad_config("contact.stiffness", "must be positive");
  if (!(c.contact.friction >= 0.0) || !std::isfinite(c.contact.friction)) {
    bad_config("contact.friction", "must be non-negative");
  }
  if (!positive(c.grip.grip_force)) bad_config("grip.grip_force", "must be positive");
  if (!(c.grip.pad_friction >= 0.0) || !std::isfinite(c.grip.pad_friction)) {
    bad_config("grip.pad_friction", "must be non-negative");
  }
  for (std::size_t i = 0; i < 6; ++i) {
    if (!std::isfinite(c.initial_misalignment[i])) {
      bad_config("initial_misalignment[" + std::to_string(i) + "]", "must be finite");
    }
  }
  for (std::size_t i = 0; i < c.mode_schedule.size(); ++i) {
    const double t = c.mode_schedule[i].t;
    const std::string field = "mode_schedule[" + std::to_string(i) + "].t";
    if (!(t >= 0.0) || !std::isfinite(t)) bad_config(field, "must be a non-negative time");
    if (i > 0 && !(t > c.mode_schedule[i - 1].t)) bad_config(field, "times must strictly increase");
  }
  try {
    control::validate(c.gains);
  } catch (const Error& e) {
    bad_config(e.field(), e.what());
  }
  if (!positive(c.force_threshold)) bad_config("estop.force_threshold", "must be positive");
  if (!positive(c.torque_threshold)) bad_config("estop.torque_threshold", "must be positive");
  if (!positive(c.timeout)) bad_config("timeout", "must be positive");
  if (c.substeps < 1 || c.substeps > 100) bad_config("substeps", "must lie in [1, 100]");
}

wrist::GripperModel make_gripper(GripperChoice g) {
  switch (g) {
    case GripperChoice::kClaw: return wrist::claw_gripper(wrist::calibrate(wrist::reference_anchors()));
    case GripperChoice::kRigid: return wrist::rigid_gripper();
    case GripperChoice::kFinRay: return wrist::finray_gripper();
  }
  return wrist::claw_gripper();
}

Vec6 start_pose(const ScenarioConfig& c) {
  Vec6 p = c.initial_misalignment;
  switch (c.kind) {
    case Kind::kPegInHole: p[2] += c.peg.start_height; break;
    case Kind::kDoorHandle: p[0] += c.door.handle_length; break;
    case Kind::kWallTouch: break;
  }
  return p;
}

ScenarioState initial_state(const ScenarioConfig& c) {
  ScenarioState s;
  s.plant = control::initial_plant(start_pose(c));
  StiffnessMode mode = StiffnessMode::kFree;
  if (!c.mode_schedule.empty() && c.mode_schedule.front().t == 0.0) {
    mode = c.mode_schedule.front().mode;
  }
  s.lock = lock::initial_state(mode);
  s.lever = mode;
  s.monitor.force_threshold = c.force_threshold;
  s.monitor.torque_threshold = c.torque_threshold;
  return s;
}

Vec6 peg_contact_wrench(const Vec6& pose, const PegGeometry& g, const ContactParams& contact) {
  if (!(g.peg_width > 0.0)) {
    throw Error(ErrorCode::kGeometryViolation, "peg_width must be positive", "geometry.peg_width");
  }
  if (!(g.hole_clearance > 0.0)) {
    throw Error(ErrorCode::kGeometryViolation, "hole_clearance must be positive",
                "geometry.hole_clearance");
  }
  const double half = 0.5 * g.peg_width;
  const double h = half + g.hole_clearance;
  const double z = pose[2];
  Vec6 w{};
  for (std::size_t axis : {std::size_t{0}, std::size_t{1}}) {
    for (double s : {1.0, -1.0}) {
      const double q = s * pose[axis] + half;
      const auto [fq, fz] =
          side_contact(q, z, h, g.chamfer_depth, contact.stiffness, contact.friction);
      w[axis] += s * fq;
      w[2] += fz;
    }
  }
  if (z < -g.hole_depth) w[2] += contact.stiffness * (-g.hole_depth - z);
  return w;
}

Vec6 door_contact_wrench(const Vec6& pose, double handle_angle, const DoorGeometry& g,
                         bool latch_released, const ContactParams& contact) {
  Vec6 w{};
  // The handle resists rotation; handle angle maps to gripper yaw -angle.
  w[5] = g.handle_spring * handle_angle;
  if (pose[2] < 0.0) {
    const double k = latch_released ? g.door_closer_stiffness : contact.stiffness;
    w[2] = -k * pose[2];
  }
  return w;
}

Vec6 wall_contact_wrench(const Vec6& pose, const WallGeometry& g, const ContactParams& contact) {
  Vec6 w{};
  if (pose[1] > g.wall_distance) w[1] = -contact.stiffness * (pose[1] - g.wall_distance);
  return w;
}

Scenario::Scenario(ScenarioConfig config)
    : config_(std::move(config)),
      gripper_(make_gripper(config_.gripper)),
      start_(start_pose(config_)) {
  validate(config_);
}

ScenarioState Scenario::initial_state() const { return scenario::initial_state(config_); }

void Scenario::solve_translational(ScenarioState& state, StiffnessMode mode) const {
  const Vec6& tcp = state.plant.tcp_pose;
  auto contact = [&](const Vec6& defl) {
    Vec6 obj{};
    for (std::size_t i = 0; i < 3; ++i) obj[i] = tcp[i] + defl[i];
    if (config_.kind == Kind::kPegInHole) {
      return translational(peg_contact_wrench(obj, config_.peg, config_.contact));
    }
    Vec6 rel = obj;
    for (std::size_t i = 0; i < 3; ++i) rel[i] -= start_[i];
    return translational(wall_contact_wrench(rel, config_.wall, config_.contact));
  };

  Vec6 defl{};
  Vec6 c = contact(defl);
  if (c == Vec6{}) {
    state.raw_deflection = defl;
    return;
  }
  defl = translational(state.raw_deflection);
  auto residual = [&](const Vec6& d, Vec6& out) {
    const Vec6 w = gripper_.reaction(d, mode);
    const Vec6 cc = contact(d);
    double n2 = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      out[i] = w[i] + cc[i];
      n2 += out[i] * out[i];
    }
    return n2;
  };
  Vec6 r{};
  double n2 = residual(defl, r);
  for (int it = 0; it < 60 && n2 > 1e-20; ++it) {
    Eigen::Matrix3d jac = Eigen::Matrix3d::Zero();
    const Vec6 k = gripper_.stiffness(defl, mode);
    const Vec6 c0 = contact(defl);
    for (int j = 0; j < 3; ++j) {
      const double h = 1e-7 * std::max(1.0, std::abs(defl[j]));
      Vec6 dp = defl;
      dp[j] += h;
      const Vec6 c1 = contact(dp);
      for (int i = 0; i < 3; ++i) jac(i, j) = (c1[i] - c0[i]) / h;
      jac(j, j) -= k[j];
    }
    const Eigen::Vector3d rhs(-r[0], -r[1], -r[2]);
    const Eigen::Vector3d dx = jac.fullPivLu().solve(rhs);
    double alpha = 1.0;
    Vec6 trial{};
    Vec6 rt{};
    double nt = 0.0;
    for (int ls = 0; ls < 30; ++ls) {
      trial = defl;
      for (int i = 0; i < 3; ++i) trial[i] += alpha * dx[i];
      nt = residual(trial, rt);
      if (nt <= (1.0 - 1e-4 * alpha) * n2) break;
      alpha *= 0.5;
    }
    if (!(nt < n2)) break;
    defl = trial;
    r = rt;
    n2 = nt;
  }
  state.raw_deflection = defl;
}

void Scenario::solve_door(ScenarioState& state, StiffnessMode mode, double dt) const {
  using boost::math::tools::eps_tolerance;
  using boost::math::tools::toms748_solve;
  const DoorGeometry& g = config_.door;
  const Vec6& tcp = state.plant.tcp_pose;
  ScenarioStatus& st = state.status;
  Vec6 defl{};

  // Door face along z: monotone 1-D balance.
  const double k_face = st.latch_released ? g.door_closer_stiffness : config_.contact.stiffness;
  if (tcp[2] < 0.0) {
    auto fz = [&](double dz) {
      Vec6 d{};
      d[2] = dz;
      const double obj_z = tcp[2] + dz;
      return gripper_.reaction(d, mode)[2] + (obj_z < 0.0 ? -k_face * obj_z : 0.0);
    };
    std::uintmax_t iters = 100;
    const auto root = toms748_solve(fz, 0.0, -tcp[2], fz(0.0), fz(-tcp[2]),
                                    eps_tolerance<double>(50), iters);
    defl[2] = 0.5 * (root.first + root.second);
  }

  const double r_m = g.handle_length * 1e-3;
  const double theta = st.handle_angle;
  auto handle_defl = [&](double th) {
    Vec6 d = defl;
    const double rad = deg_to_rad(th);
    d[0] = g.handle_length * std::cos(rad) - tcp[0];
    d[1] = -g.handle_length * std::sin(rad) - tcp[1];
    d[5] = -th - tcp[5];
    return d;
  };
  // Torque the wrist applies to the handle in the +angle direction.
  auto wrist_torque = [&](double th) {
    const Vec6 w = gripper_.reaction(handle_defl(th), mode);
    const double rad = deg_to_rad(th);
    return r_m * (w[0] * -std::sin(rad) + w[1] * -std::cos(rad)) - w[5];
  };

  if (st.handle_grasped) {
    const double b = g.handle_damping / dt;
    auto balance = [&](double th) {
      return wrist_torque(th) - g.handle_spring * th - b * (th - theta);
    };
    const double lo = 0.0;
    const double hi = 90.0;
    const double f_lo = balance(lo);
    const double f_hi = balance(hi);
    double next = theta;
    if (f_lo <= 0.0) {
      next = lo;
    } else if (f_hi >= 0.0) {
      next = hi;
    } else {
      std::uintmax_t iters = 100;
      const auto root = toms748_solve(balance, lo, hi, f_lo, f_hi, eps_tolerance<double>(50), iters);
      next = 0.5 * (root.first + root.second);
    }
    st.handle_angle = next;
    state.handle_torque = wrist_torque(next);
    defl = handle_defl(next);
  } else {
    // Released handle relaxes under its own spring.
    st.handle_angle = theta * g.handle_damping / (g.handle_damping + g.handle_spring * dt);
    state.handle_torque = 0.0;
  }
  state.raw_deflection = defl;
}

void Scenario::step(ScenarioState& state, const std::optional<Vec6>& command,
                    const std::optional<StiffnessMode>& lever) const {
  ScenarioStatus& st = state.status;
  if (is_terminal(st.outcome)) return;
  const double now = state.plant.time();

  const auto& sched = config_.mode_schedule;
  while (state.schedule_index < sched.size() && sched[state.schedule_index].t <= now + 1e-12) {
    state.lever = sched[state.schedule_index].mode;
    ++state.schedule_index;
  }
  if (lever) state.lever = *lever;
  if (command) state.plant = control::set_command(state.plant, *command);

  const StiffnessMode before = state.lock.effective_mode();
  if (config_.gripper == GripperChoice::kClaw) {
    state.lock = lock::command_mode(state.lock, state.lever, kDt);
  }
  const StiffnessMode mode = state.lock.effective_mode();
  if (mode != before) state.events.push_back("mode:" + std::string(mode_name(mode)));

  state.plant = control::latch_command(state.plant);
  const int n = config_.substeps;
  const double h = kDt / n;
  for (int sub = 0; sub < n; ++sub) {
    if (settle(state, mode, h, sub)) return;
    state.plant = control::integrate_dynamics(state.plant, config_.gains,
                                              state.plant.measured_wrench, h);
  }
  ++state.plant.tick;
  st.elapsed = state.plant.time();
  if (st.elapsed >= config_.timeout - 1e-9) {
    st.outcome = Outcome::kTimeout;
    state.events.push_back("timeout");
  }
}

bool Scenario::settle(ScenarioState& state, StiffnessMode mode, double dt, int substep) const {
  ScenarioStatus& st = state.status;
  if (config_.kind == Kind::kDoorHandle) {
    solve_door(state, mode, dt);
  } else {
    solve_translational(state, mode);
  }
  const Vec6 w = gripper_.reaction(state.raw_deflection, mode);
  Vec6 measured{};
  for (std::size_t i = 0; i < 6; ++i) measured[i] = -w[i];
  state.plant.measured_wrench = measured;
  state.plant.wrist_deflection =
      gripper_.is_claw()
          ? wrist::apply_envelope(state.raw_deflection, mode, gripper_.params.envelope).clamped
          : state.raw_deflection;
  state.peak_force = std::max(
      state.peak_force, std::sqrt(measured[0] * measured[0] + measured[1] * measured[1] +
                                  measured[2] * measured[2]));

  if (config_.kind == Kind::kPegInHole) {
    st.insertion_depth = std::max(0.0, -(state.plant.tcp_pose[2] + state.raw_deflection[2]));
  } else if (config_.kind == Kind::kDoorHandle) {
    const DoorGeometry& g = config_.door;
    if (!st.latch_released && st.handle_angle >= g.latch_angle) {
      st.latch_released = true;
      state.events.push_back("latch_released");
    }
    if (st.handle_grasped && st.latch_released && mode == StiffnessMode::kFree &&
        std::abs(state.handle_torque) < g.release_torque) {
      st.handle_grasped = false;
      state.events.push_back("handle_released");
    }
  }

  auto finish = [&](Outcome o, const std::string& event) {
    st.outcome = o;
    st.elapsed = state.plant.time() + substep * dt;
    state.events.push_back(event);
    return true;
  };
  state.monitor = control::check_estop(state.monitor, measured);
  if (state.monitor.tripped) {
    return finish(Outcome::kEstop,
                  "estop:" + std::string(control::wrench_label(
                                 state.monitor.trip_axis.value_or(Axis::kX))));
  }
  if (config_.grip.pad_friction > 0.0 &&
      std::abs(measured[2]) > config_.grip.grip_force * config_.grip.pad_friction) {
    return finish(Outcome::kSlip, "slip");
  }
  const bool success =
      (config_.kind == Kind::kPegInHole && st.insertion_depth >= config_.peg.hole_depth) ||
      (config_.kind == Kind::kDoorHandle && st.latch_released &&
       st.handle_angle <= config_.door.success_angle);
  if (success) return finish(Outcome::kSuccess, "success");
  return false;
}

CommandSource peg_insertion_script(const ScenarioConfig& config) {
  const Vec6 start = start_pose(config);
  const double target = -(config.peg.hole_depth + 3.0);
  return [start, target](const ScenarioState&, std::uint64_t window) {
    Vec6 pose = start;
    const double t = static_cast<double>(window) * control::kCommandPeriod;
    pose[2] = std::max(target, start[2] - 10.0 * t);
    return WindowCommand{pose, std::nullopt};
  };
}

CommandSource wall_approach_script(const ScenarioConfig& config) {
  const Vec6 start = start_pose(config);
  const double target = start[1] + config.wall.wall_distance + 3.0;
  return [start, target](const ScenarioState&, std::uint64_t window) {
    Vec6 pose = start;
    const double t = static_cast<double>(window) * control::kCommandPeriod;
    pose[1] = std::min(target, start[1] + 10.0 * t);
    return WindowCommand{pose, std::nullopt};
  };
}

CommandSource door_operator_script(const ScenarioConfig& config, DoorScript script) {
  enum class Phase { kHold, kRotate, kSettle, kPush, kDone };
  struct Memory {
    Phase phase = Phase::kHold;
    double phi = 0.0;
    double phi_at_push = 0.0;
    double mark = 0.0;
  };
  auto mem = std::make_shared<Memory>();
  const Vec6 mis = config.initial_misalignment;
  const double r = config.door.handle_length;
  auto arc = [mis, r](double phi, double dz) {
    const double rad = deg_to_rad(phi);
    return Vec6{mis[0] + r * std::cos(rad), mis[1] - r * std::sin(rad), mis[2] + dz,
                mis[3], mis[4], mis[5] - phi};
  };
  return [mem, script, arc](const ScenarioState& state, std::uint64_t window) {
    const double t = static_cast<double>(window) * control::kCommandPeriod;
    WindowCommand cmd;
    Memory& m = *mem;
    switch (m.phase) {
      case Phase::kHold:
        if (window == 0) cmd.lever = StiffnessMode::kFullLock;
        if (t >= script.hold - 1e-9) m.phase = Phase::kRotate;
        cmd.pose = arc(m.phi, 0.0);
        break;
      case Phase::kRotate:
        if (state.status.latch_released) {
          m.phase = Phase::kSettle;
          m.mark = t;
          if (script.variable_stiffness) cmd.lever = StiffnessMode::kFree;
        } else {
          m.phi = std::min(script.max_rotation,
                           m.phi + script.rotate_rate * control::kCommandPeriod);
        }
        cmd.pose = arc(m.phi, 0.0);
        break;
      case Phase::kSettle:
        if (t - m.mark >= script.settle - 1e-9) {
          m.phase = Phase::kPush;
          m.mark = t;
          m.phi_at_push = m.phi;
        }
        cmd.pose = arc(m.phi, 0.0);
        break;
      case Phase::kPush:
      case Phase::kDone: {
        const double s = std::min(1.0, (t - m.mark) / script.push_duration);
        if (s >= 1.0) m.phase = Phase::kDone;
        m.phi = m.phi_at_push * (1.0 - s);
        cmd.pose = arc(m.phi, -script.push_distance * s);
        break;
      }
    }
    return cmd;
  };
}

CommandSource default_script(const ScenarioConfig& config) {
  switch (config.kind) {
    case Kind::kPegInHole: return peg_insertion_script(config);
    case Kind::kDoorHandle: return door_operator_script(config);
    case Kind::kWallTouch: return wall_approach_script(config);
  }
  return peg_insertion_script(config);
}

RunResult run_scenario(const Scenario& scenario, const CommandSource& source,
                       const WindowObserver& observer) {
  RunResult result;
  result.final_state = scenario.initial_state();
  ScenarioState& s = result.final_state;
  while (!is_terminal(s.status.outcome)) {
    std::optional<Vec6> pose;
    std::optional<StiffnessMode> lever;
    if (control::at_window_boundary(s.plant.tick)) {
      const std::uint64_t window = s.plant.tick / control::kTicksPerWindow;
      const WindowCommand cmd = source ? source(s, window) : WindowCommand{};
      if (observer) observer(s, window, cmd);
      s.events.clear();
      pose = cmd.pose;
      lever = cmd.lever;
    }
    scenario.step(s, pose, lever);
    ++result.ticks;
  }
  return result;
}

std::string_view sweep_gripper_name(SweepGripper g) {
  switch (g) {
    case SweepGripper::kClawFree: return "claw_free";
    case SweepGripper::kClawHalf: return "claw_half";
    case SweepGripper::kClawFull: return "claw_full";
    case SweepGripper::kRigid: return "rigid";
    case SweepGripper::kFinRay: return "finray";
  }
  return "claw_free";
}

std::optional<SweepGripper> parse_sweep_gripper(std::string_view name) {
  for (SweepGripper g : kAllSweepGrippers) {
    if (sweep_gripper_name(g) == name) return g;
  }
  return std::nullopt;
}

ScenarioConfig sweep_config(const ScenarioConfig& base, SweepGripper gripper) {
  ScenarioConfig c = base;
  c.kind = Kind::kPegInHole;
  c.mode_schedule.clear();
  switch (gripper) {
    case SweepGripper::kClawFree:
      c.gripper = GripperChoice::kClaw;
      c.mode_schedule = {{0.0, StiffnessMode::kFree}};
      break;
    case SweepGripper::kClawHalf:
      c.gripper = GripperChoice::kClaw;
      c.mode_schedule = {{0.0, StiffnessMode::kHalfLock}};
      break;
    case SweepGripper::kClawFull:
      c.gripper = GripperChoice::kClaw;
      c.mode_schedule = {{0.0, StiffnessMode::kFullLock}};
      break;
    case SweepGripper::kRigid: c.gripper = GripperChoice::kRigid; break;
    case SweepGripper::kFinRay: c.gripper = GripperChoice::kFinRay; break;
  }
  return c;
}

std::vector<SweepPoint> misalignment_sweep(const ScenarioConfig& base, SweepGripper gripper,
                                           const std::vector<std::pair<double, double>>& offsets) {
  const ScenarioConfig shared = sweep_config(base, gripper);
  std::vector<SweepPoint> out;
  out.reserve(offsets.size());
  for (const auto& [ox, oy] : offsets) {
    ScenarioConfig c = shared;
    c.initial_misalignment[0] += ox;
    c.initial_misalignment[1] += oy;
    const Scenario sc(c);
    const RunResult r = run_scenario(sc, peg_insertion_script(c));
    const ScenarioStatus& st = r.final_state.status;
    out.push_back({ox, oy, gripper, st.outcome, st.insertion_depth, r.final_state.peak_force,
                   st.elapsed});
  }
  return out;
}

std::vector<std::pair<double, double>> axis_offset_grid(double max, double step) {
  if (!(step > 0.0) || !(max >= 0.0) || !std::isfinite(max)) {
    throw Error(ErrorCode::kInvalidArgument, "offset grid needs step > 0 and max >= 0");
  }
  const auto n = static_cast<long>(std::floor(max / step + 1e-9));
  std::vector<std::pair<double, double>> out;
  for (int axis = 0; axis < 2; ++axis) {
    for (long i = -n; i <= n; ++i) {
      const double o = static_cast<double>(i) * step;
      out.push_back(axis == 0 ? std::make_pair(o, 0.0) : std::make_pair(0.0, o));
    }
  }
  return out;
}

std::string sweep_csv_row(const SweepPoint& p) {
  return format_double(p.offset_x) + "," + format_double(p.offset_y) + "," +
         std::string(sweep_gripper_name(p.gripper)) + "," + std::string(outcome_name(p.outcome)) +
         "," + format_double(p.depth) + "," + format_double(p.peak_force) + "," +
         format_double(p.elapsed);
}

}  // namespace claw::scenario
