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

#include "claw/lockstate.hpp"

#include <cmath>

namespace claw::lock {

std::string_view mode_name(StiffnessMode mode) {
  switch (mode) {
    case StiffnessMode::kFree: return "free";
    case StiffnessMode::kHalfLock: return "half_lock";
    case StiffnessMode::kFullLock: return "full_lock";
  }
  return "free";
}

std::optional<StiffnessMode> parse_mode(std::string_view name) {
  for (StiffnessMode m : kAllModes) {
    if (mode_name(m) == name) return m;
  }
  return std::nullopt;
}

JointSet joints_for(StiffnessMode mode) {
  switch (mode) {
    case StiffnessMode::kFree: return JointSet{};
    case StiffnessMode::kHalfLock: return JointSet{0b0011};
    case StiffnessMode::kFullLock: return JointSet{0b1111};
  }
  return JointSet{};
}

double carrier_target(StiffnessMode mode) {
  switch (mode) {
    case StiffnessMode::kFree: return 0.0;
    case StiffnessMode::kHalfLock: return -1.0;
    case StiffnessMode::kFullLock: return 1.0;
  }
  return 0.0;
}

bool LockState::at_detent() const {
  return carrier_position == -1.0 || carrier_position == 0.0 ||
         carrier_position == 1.0;
}

StiffnessMode LockState::effective_mode() const {
  if (engaged_joints == joints_for(StiffnessMode::kFullLock)) {
    return StiffnessMode::kFullLock;
  }
  if (engaged_joints == joints_for(StiffnessMode::kHalfLock)) {
    return StiffnessMode::kHalfLock;
  }
  return StiffnessMode::kFree;
}

LockState initial_state(StiffnessMode mode) {
  LockState s;
  s.carrier_position = carrier_target(mode);
  s.engaged_joints = joints_for(mode);
  s.mode = mode;
  return s;
}

namespace {

StiffnessMode mode_at(double detent) {
  if (detent < 0.0) return StiffnessMode::kHalfLock;
  if (detent > 0.0) return StiffnessMode::kFullLock;
  return StiffnessMode::kFree;
}

}  // namespace

LockState command_mode(const LockState& current, StiffnessMode target,
                       double dt, double carrier_rate) {
  if (!(dt > 0.0) || !(carrier_rate > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "command_mode needs dt > 0 and a positive carrier rate");
  }
  LockState next = current;
  const double goal = carrier_target(target);
  double budget = carrier_rate * dt;
  // Walk detent by detent so that each crossed detent is visited exactly and
  // leftover travel carries on past it.
  while (next.carrier_position != goal && budget > 0.0) {
    const double dir = goal > next.carrier_position ? 1.0 : -1.0;
    double detent = dir > 0.0 ? std::floor(next.carrier_position) + 1.0
                              : std::ceil(next.carrier_position) - 1.0;
    if (dir * (detent - goal) > 0.0) detent = goal;
    const double gap = std::abs(detent - next.carrier_position);
    if (budget >= gap) {
      next.carrier_position = detent;
      next.mode = mode_at(detent);
      budget -= gap;
    } else {
      next.carrier_position += dir * budget;
      budget = 0.0;
    }
  }
  next.engaged_joints =
      next.at_detent() ? joints_for(next.mode) : JointSet{};
  return next;
}

std::vector<Axis> locked_axes(StiffnessMode mode) {
  switch (mode) {
    case StiffnessMode::kFree: return {};
    case StiffnessMode::kHalfLock: return {Axis::kX};
    case StiffnessMode::kFullLock: return {Axis::kX, Axis::kY, Axis::kYaw};
  }
  return {};
}

bool satisfies_invariants(const LockState& s) {
  if (!(s.carrier_position >= -1.0 && s.carrier_position <= 1.0)) return false;
  if (s.at_detent()) {
    const StiffnessMode m = mode_at(s.carrier_position);
    return s.mode == m && s.engaged_joints == joints_for(m);
  }
  // Between detents: nothing engaged, mode is one of the two bracketing
  // detents.
  if (s.engaged_joints.any()) return false;
  const double lo = std::floor(s.carrier_position);
  const double hi = lo + 1.0;
  return s.mode == mode_at(lo) || s.mode == mode_at(hi);
}

}  // namespace claw::lock
