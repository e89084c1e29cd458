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

#include "claw/config_io.hpp"

#include <cmath>
#include <initializer_list>
#include <limits>
#include <set>

#include "claw/format.hpp"
#include "json.hpp"

namespace claw::config {
namespace {

using nlohmann::json;
using scenario::Kind;
using scenario::ModeChange;
using scenario::ScenarioConfig;

[[noreturn]] void bad(const std::string& field, const std::string& message) {
  throw Error(ErrorCode::kInvalidConfig, field + ": " + message, field);
}

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

void require_object(const json& j, const std::string& field) {
  if (!j.is_object()) bad(field.empty() ? "<root>" : field, "expected an object");
}

void reject_unknown(const json& j, const std::string& prefix,
                    std::initializer_list<const char*> allowed) {
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!keys.count(key)) bad(join(prefix, key), "unknown key");
  }
}

double number(const json& j, const std::string& field) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
  }
  bad(field, "expected a number");
}

// Reads j[key] into out when present.
void read(const json& j, const char* key, const std::string& prefix, double& out) {
  if (auto it = j.find(key); it != j.end()) out = number(*it, join(prefix, key));
}

Vec6 vec6(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 6) bad(field, "expected an array of 6 numbers");
  Vec6 v{};
  for (std::size_t i = 0; i < 6; ++i) v[i] = number(j[i], field + "[" + std::to_string(i) + "]");
  return v;
}

json number_json(double v) {
  if (std::isinf(v) && v > 0) return "inf";
  return v;
}

json vec6_json(const Vec6& v) {
  json a = json::array();
  for (double x : v) a.push_back(number_json(x));
  return a;
}

std::vector<ModeChange> schedule_from(const json& j, const std::string& field) {
  if (!j.is_array()) bad(field, "expected an array");
  std::vector<ModeChange> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string item = field + "[" + std::to_string(i) + "]";
    const json& e = j[i];
    require_object(e, item);
    reject_unknown(e, item, {"t", "mode"});
    if (!e.contains("t")) bad(item + ".t", "missing");
    if (!e.contains("mode")) bad(item + ".mode", "missing");
    ModeChange m;
    m.t = number(e["t"], item + ".t");
    if (!e["mode"].is_string()) bad(item + ".mode", "expected a mode name");
    const auto mode = lock::parse_mode(e["mode"].get<std::string>());
    if (!mode) bad(item + ".mode", "unknown mode '" + e["mode"].get<std::string>() + "'");
    m.mode = *mode;
    out.push_back(m);
  }
  return out;
}

json schedule_json(const std::vector<ModeChange>& schedule) {
  json a = json::array();
  for (const ModeChange& m : schedule) {
    a.push_back({{"t", m.t}, {"mode", std::string(lock::mode_name(m.mode))}});
  }
  return a;
}

json geometry_json(const ScenarioConfig& c) {
  switch (c.kind) {
    case Kind::kPegInHole:
      return {{"peg_width", c.peg.peg_width},
              {"hole_clearance", c.peg.hole_clearance},
              {"hole_depth", c.peg.hole_depth},
              {"chamfer_depth", c.peg.chamfer_depth},
              {"start_height", c.peg.start_height}};
    case Kind::kDoorHandle:
      return {{"handle_spring", c.door.handle_spring},
              {"latch_angle", c.door.latch_angle},
              {"handle_length", c.door.handle_length},
              {"handle_damping", c.door.handle_damping},
              {"release_torque", c.door.release_torque},
              {"door_closer_stiffness", c.door.door_closer_stiffness},
              {"success_angle", c.door.success_angle}};
    case Kind::kWallTouch:
      return {{"wall_distance", c.wall.wall_distance}};
  }
  return json::object();
}

void read_geometry(const json& g, ScenarioConfig& c) {
  const std::string p = "geometry";
  require_object(g, p);
  switch (c.kind) {
    case Kind::kPegInHole:
      reject_unknown(g, p, {"peg_width", "hole_clearance", "hole_depth", "chamfer_depth",
                            "start_height"});
      read(g, "peg_width", p, c.peg.peg_width);
      read(g, "hole_clearance", p, c.peg.hole_clearance);
      read(g, "hole_depth", p, c.peg.hole_depth);
      read(g, "chamfer_depth", p, c.peg.chamfer_depth);
      read(g, "start_height", p, c.peg.start_height);
      break;
    case Kind::kDoorHandle:
      reject_unknown(g, p, {"handle_spring", "latch_angle", "handle_length", "handle_damping",
                            "release_torque", "door_closer_stiffness", "success_angle"});
      read(g, "handle_spring", p, c.door.handle_spring);
      read(g, "latch_angle", p, c.door.latch_angle);
      read(g, "handle_length", p, c.door.handle_length);
      read(g, "handle_damping", p, c.door.handle_damping);
      read(g, "release_torque", p, c.door.release_torque);
      read(g, "door_closer_stiffness", p, c.door.door_closer_stiffness);
      read(g, "success_angle", p, c.door.success_angle);
      break;
    case Kind::kWallTouch:
      reject_unknown(g, p, {"wall_distance"});
      read(g, "wall_distance", p, c.wall.wall_distance);
      break;
  }
}

json to_json(const ScenarioConfig& c) {
  const control::ControllerGains& g = c.gains;
  return {
      {"spec_version", kSpecVersion},
      {"kind", std::string(scenario::kind_name(c.kind))},
      {"gripper", std::string(scenario::gripper_name(c.gripper))},
      {"geometry", geometry_json(c)},
      {"contact", {{"stiffness", c.contact.stiffness}, {"friction", c.contact.friction}}},
      {"grip", {{"grip_force", c.grip.grip_force}, {"pad_friction", c.grip.pad_friction}}},
      {"initial_misalignment", vec6_json(c.initial_misalignment)},
      {"mode_schedule", schedule_json(c.mode_schedule)},
      {"gains",
       {{"virtual_mass", vec6_json(g.virtual_mass)},
        {"virtual_damping", vec6_json(g.virtual_damping)},
        {"stiffness_to_target", vec6_json(g.stiffness_to_target)},
        {"force_deadband", g.force_deadband}}},
      {"estop",
       {{"force_threshold", c.force_threshold}, {"torque_threshold", c.torque_threshold}}},
      {"timeout", c.timeout},
      {"substeps", c.substeps},
      {"seed", c.seed},
  };
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidConfig,
                "config is not valid JSON (byte " + std::to_string(e.byte) + ")", "<root>");
  }
}

}  // namespace

ScenarioConfig parse_config(std::string_view json_text) {
  const json j = parse_json(json_text);
  require_object(j, "");
  reject_unknown(j, "", {"spec_version", "kind", "gripper", "geometry", "contact", "grip",
                         "initial_misalignment", "mode_schedule", "gains", "estop", "timeout",
                         "substeps", "seed"});
  if (!j.contains("spec_version")) bad("spec_version", "missing");
  if (!j["spec_version"].is_number_integer()) bad("spec_version", "expected an integer");
  if (j["spec_version"].get<long long>() != kSpecVersion) {
    throw Error(ErrorCode::kVersionMismatch,
                "config spec_version " + j["spec_version"].dump() + " is not supported (expected " +
                    std::to_string(kSpecVersion) + ")",
                "spec_version");
  }
  if (!j.contains("kind")) bad("kind", "missing");
  if (!j["kind"].is_string()) bad("kind", "expected a scenario kind");
  const auto kind = scenario::parse_kind(j["kind"].get<std::string>());
  if (!kind) bad("kind", "unknown scenario kind '" + j["kind"].get<std::string>() + "'");
  ScenarioConfig c = scenario::default_config(*kind);

  if (auto it = j.find("gripper"); it != j.end()) {
    const auto g = it->is_string() ? scenario::parse_gripper(it->get<std::string>()) : std::nullopt;
    if (!g) bad("gripper", "expected one of claw, rigid, finray");
    c.gripper = *g;
  }
  if (auto it = j.find("geometry"); it != j.end()) read_geometry(*it, c);
  if (auto it = j.find("contact"); it != j.end()) {
    require_object(*it, "contact");
    reject_unknown(*it, "contact", {"stiffness", "friction"});
    read(*it, "stiffness", "contact", c.contact.stiffness);
    read(*it, "friction", "contact", c.contact.friction);
  }
  if (auto it = j.find("grip"); it != j.end()) {
    require_object(*it, "grip");
    reject_unknown(*it, "grip", {"grip_force", "pad_friction"});
    read(*it, "grip_force", "grip", c.grip.grip_force);
    read(*it, "pad_friction", "grip", c.grip.pad_friction);
  }
  if (auto it = j.find("initial_misalignment"); it != j.end()) {
    c.initial_misalignment = vec6(*it, "initial_misalignment");
  }
  if (auto it = j.find("mode_schedule"); it != j.end()) {
    c.mode_schedule = schedule_from(*it, "mode_schedule");
  }
  if (auto it = j.find("gains"); it != j.end()) {
    const json& g = *it;
    require_object(g, "gains");
    reject_unknown(g, "gains",
                   {"virtual_mass", "virtual_damping", "stiffness_to_target", "force_deadband"});
    if (g.contains("virtual_mass")) c.gains.virtual_mass = vec6(g["virtual_mass"], "gains.virtual_mass");
    if (g.contains("virtual_damping")) {
      c.gains.virtual_damping = vec6(g["virtual_damping"], "gains.virtual_damping");
    }
    if (g.contains("stiffness_to_target")) {
      c.gains.stiffness_to_target = vec6(g["stiffness_to_target"], "gains.stiffness_to_target");
    }
    read(g, "force_deadband", "gains", c.gains.force_deadband);
  }
  if (auto it = j.find("estop"); it != j.end()) {
    require_object(*it, "estop");
    reject_unknown(*it, "estop", {"force_threshold", "torque_threshold"});
    read(*it, "force_threshold", "estop", c.force_threshold);
    read(*it, "torque_threshold", "estop", c.torque_threshold);
  }
  read(j, "timeout", "", c.timeout);
  if (auto it = j.find("substeps"); it != j.end()) {
    if (!it->is_number_integer()) bad("substeps", "expected an integer");
    const long long n = it->get<long long>();
    if (n < 1 || n > 100) bad("substeps", "must lie in [1, 100]");
    c.substeps = static_cast<int>(n);
  }
  if (auto it = j.find("seed"); it != j.end()) {
    if (!it->is_number_unsigned()) bad("seed", "expected a non-negative integer");
    c.seed = it->get<std::uint64_t>();
  }
  scenario::validate(c);
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file(path));
}

std::string dump_config(const ScenarioConfig& config) { return to_json(config).dump(2) + "\n"; }

std::string canonical_config(const ScenarioConfig& config) { return to_json(config).dump(); }

std::string config_hash(const ScenarioConfig& config) {
  return fnv1a_hex(canonical_config(config));
}

void save_config(const std::filesystem::path& path, const ScenarioConfig& config) {
  write_file_atomic(path, dump_config(config));
}

std::vector<ModeChange> parse_schedule(std::string_view json_text) {
  const json j = parse_json(json_text);
  std::vector<ModeChange> s;
  if (j.is_object()) {
    reject_unknown(j, "", {"mode_schedule"});
    if (!j.contains("mode_schedule")) bad("mode_schedule", "missing");
    s = schedule_from(j["mode_schedule"], "mode_schedule");
  } else {
    s = schedule_from(j, "mode_schedule");
  }
  if (s.empty()) bad("mode_schedule", "must not be empty");
  for (std::size_t i = 0; i < s.size(); ++i) {
    const std::string field = "mode_schedule[" + std::to_string(i) + "].t";
    if (!(s[i].t >= 0.0) || !std::isfinite(s[i].t)) bad(field, "must be a non-negative time");
    if (i > 0 && !(s[i].t > s[i - 1].t)) bad(field, "times must strictly increase");
  }
  return s;
}

}  // namespace claw::config
