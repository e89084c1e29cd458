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

// Episode logs: one row per 20 ms command window, plus a closing row.
//
//   # claw-episode v1 scenario=<hash> gripper=<id> started=<iso8601>
//   t_s,x_mm,...,tz_Nm,mode,estop,event
//
// Row k sits at t = k / 50. `pose` is the command in force for the window,
// deflection and wrench are the values measured when the window opened,
// `mode` is the lever position and `event` joins the events raised during
// the previous window with ';'. An explicit lever command is logged as the
// event "lever:<mode>"; the closing row carries "end:<outcome>".

#ifndef CLAW_EPISODE_HPP_
#define CLAW_EPISODE_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "claw/core.hpp"
#include "claw/scenario.hpp"

namespace claw::episode {

inline constexpr std::string_view kColumns =
    "t_s,x_mm,y_mm,z_mm,roll_deg,pitch_deg,yaw_deg,dx_mm,dy_mm,dz_mm,droll_deg,dpitch_deg,"
    "dyaw_deg,fx_N,fy_N,fz_N,tx_Nm,ty_Nm,tz_Nm,mode,estop,event";

struct Header {
  int version = kSpecVersion;
  std::string scenario_hash;
  std::string gripper;
  std::string started;
};

struct Row {
  std::uint64_t window = 0;  // t_s = window / 50
  Vec6 pose{};
  Vec6 deflection{};
  Vec6 wrench{};
  lock::StiffnessMode mode = lock::StiffnessMode::kFree;
  bool estop = false;
  std::vector<std::string> events;

  double t() const { return static_cast<double>(window) / 50.0; }
  // Lever commanded at this row, if the row logs one.
  std::optional<lock::StiffnessMode> lever_command() const;
  bool is_end() const;
};

struct EpisodeLog {
  Header header;
  std::vector<Row> rows;

  // Outcome named by the closing row, if present.
  std::optional<scenario::Outcome> outcome() const;
  bool operator==(const EpisodeLog&) const = default;
};

bool operator==(const Header& a, const Header& b);
bool operator==(const Row& a, const Row& b);

std::string write_episode(const EpisodeLog& log);

// Throws Error(kVersionMismatch) for another header version and
// Error(kMalformedMessage) naming the line for anything unparsable.
EpisodeLog parse_episode(std::string_view text);

EpisodeLog load_episode(const std::filesystem::path& path);
void save_episode(const std::filesystem::path& path, const EpisodeLog& log);

// Builds rows from run_scenario observer callbacks.
class Recorder {
 public:
  Recorder(const scenario::ScenarioConfig& config, std::string started);
  explicit Recorder(Header header);

  void observe(const scenario::ScenarioState& state, std::uint64_t window,
               const scenario::WindowCommand& command);
  // Appends the closing row; call once the outcome is terminal.
  void finish(const scenario::ScenarioState& state);

  const EpisodeLog& log() const { return log_; }
  EpisodeLog take() { return std::move(log_); }

 private:
  EpisodeLog log_;
};

// Runs the scenario under `source` and records it.
EpisodeLog record(const scenario::ScenarioConfig& config, const scenario::CommandSource& source,
                  std::string started);

struct ReplayOverride {
  std::optional<lock::StiffnessMode> mode;               // pin the lock for the whole run
  std::optional<std::vector<scenario::ModeChange>> schedule;  // replaces the lever channel
};

// Feeds the recorded poses back as window commands. Without an override the
// recorded lever commands are replayed; with one they are dropped. Once the
// rows run out the last pose is held until the outcome is terminal. The
// output keeps the source header.
//
// Throws Error(kInvalidArgument) when `config` does not hash to the header's
// scenario or both override fields are set, Error(kScheduleConflict) when a
// schedule override meets a config that already switches modes.
EpisodeLog replay(const EpisodeLog& log, const scenario::ScenarioConfig& config,
                  const ReplayOverride& override = {});

}  // namespace claw::episode

#endif  // CLAW_EPISODE_HPP_
