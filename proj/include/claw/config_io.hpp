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

// Scenario config files.
//
// Document layout (every key but spec_version and kind is optional and
// falls back to default_config(kind)):
//
//   {
//     "spec_version": 1,
//     "kind": "peg_in_hole" | "door_handle" | "wall_touch",
//     "gripper": "claw" | "rigid" | "finray",
//     "geometry": { kind-specific lengths, mm / deg / N*m },
//     "contact": { "stiffness": N/mm, "friction": mu },
//     "grip": { "grip_force": N, "pad_friction": mu },
//     "initial_misalignment": [x, y, z, roll, pitch, yaw],
//     "mode_schedule": [ { "t": s, "mode": "free" }, ... ],
//     "gains": { "virtual_mass": [6], "virtual_damping": [6],
//                "stiffness_to_target": [6], "force_deadband": N },
//     "estop": { "force_threshold": N, "torque_threshold": N*m },
//     "timeout": s, "substeps": n, "seed": n
//   }
//
// Unknown keys are rejected. Infinite stiffness is written as "inf".

#ifndef CLAW_CONFIG_IO_HPP_
#define CLAW_CONFIG_IO_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "claw/scenario.hpp"

namespace claw::config {

// Parses and validates. Throws Error(kInvalidConfig) naming the field,
// Error(kVersionMismatch) for another spec_version.
scenario::ScenarioConfig parse_config(std::string_view json_text);

// Throws Error(kIo) when the file cannot be read.
scenario::ScenarioConfig load_config(const std::filesystem::path& path);

// Indented document with every key present.
std::string dump_config(const scenario::ScenarioConfig& config);

// Compact document with sorted keys; the input to config_hash.
std::string canonical_config(const scenario::ScenarioConfig& config);

// 16 hex digits identifying the config in episode headers.
std::string config_hash(const scenario::ScenarioConfig& config);

void save_config(const std::filesystem::path& path, const scenario::ScenarioConfig& config);

// Accepts a bare array of {t, mode} entries or {"mode_schedule": [...]}.
std::vector<scenario::ModeChange> parse_schedule(std::string_view json_text);

}  // namespace claw::config

#endif  // CLAW_CONFIG_IO_HPP_
