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

// Pin-carrier lock mechanism. A single carrier slides along one axis; at -1
// the slot-shaped pins engage the X joints, at +1 all four pins engage, and
// at 0 nothing engages. Moving between -1 and +1 passes through 0.

#ifndef CLAW_LOCKSTATE_HPP_
#define CLAW_LOCKSTATE_HPP_

#include <bitset>
#include <optional>
#include <string_view>
#include <vector>

#include "claw/core.hpp"

namespace claw::lock {

enum class StiffnessMode { kFree, kHalfLock, kFullLock };

inline constexpr StiffnessMode kAllModes[] = {
    StiffnessMode::kFree, StiffnessMode::kHalfLock, StiffnessMode::kFullLock};

// "free", "half_lock", "full_lock".
std::string_view mode_name(StiffnessMode mode);
std::optional<StiffnessMode> parse_mode(std::string_view name);

enum class Joint { kXPlus = 0, kXMinus, kYPlus, kYMinus };
using JointSet = std::bitset<4>;

JointSet joints_for(StiffnessMode mode);

// Detent position of the carrier for each mode.
double carrier_target(StiffnessMode mode);

inline constexpr double kDefaultCarrierRate = 4.0;  // units per second

struct LockState {
  double carrier_position = 0.0;
  JointSet engaged_joints;
  // Last detent the carrier reached. While the carrier is between detents no
  // pins engage, so the wrist behaves as Free regardless of this field.
  StiffnessMode mode = StiffnessMode::kFree;

  bool at_detent() const;
  // Mode whose stiffness currently applies to the wrist.
  StiffnessMode effective_mode() const;
};

LockState initial_state(StiffnessMode mode = StiffnessMode::kFree);

// Advances the carrier toward the target detent by rate*dt. Passing a detent
// on the way updates mode to that detent. Throws kInvalidArgument if dt <= 0.
LockState command_mode(const LockState& current, StiffnessMode target,
                       double dt, double carrier_rate = kDefaultCarrierRate);

// Axes whose compliance the mode removes. Z, roll and pitch never appear.
std::vector<Axis> locked_axes(StiffnessMode mode);

// Table check used by tests and debug assertions.
bool satisfies_invariants(const LockState& state);

}  // namespace claw::lock

#endif  // CLAW_LOCKSTATE_HPP_
