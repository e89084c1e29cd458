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

// A leader that replays the door operator script as timestamped commands.

#ifndef CLAW_TESTS_SCRIPTED_LEADER_HPP_
#define CLAW_TESTS_SCRIPTED_LEADER_HPP_

#include <string>
#include <vector>

#include "claw/teleop.hpp"

namespace claw::testing {

struct Scripted {
  std::vector<teleop::Command> commands;
  episode::EpisodeLog log;  // what a follower driven by the commands records
};

// Runs the door script against a local follower and keeps the commands it
// sent, one per window.
inline Scripted door_commands(const scenario::ScenarioConfig& c, const std::string& started) {
  teleop::FollowerSession s(c, started);
  s.receive(teleop::Hello{kSpecVersion, "leader"});
  const scenario::CommandSource script = scenario::door_operator_script(c);
  Scripted out;
  std::uint64_t seq = 0;
  lock::StiffnessMode lever = lock::StiffnessMode::kFree;
  while (!s.terminal()) {
    const scenario::WindowCommand w = script(s.state(), s.window());
    if (w.lever) lever = *w.lever;
    teleop::Command cmd{++seq, s.time(), w.pose.value_or(s.state().plant.commanded_pose), lever};
    out.commands.push_back(cmd);
    s.receive(cmd);
    s.advance();
  }
  out.log = s.log();
  return out;
}

// Hello, the commands, then Bye, as wire bytes.
inline std::string wire(const std::vector<teleop::Command>& cmds) {
  std::string bytes = teleop::encode(teleop::Hello{kSpecVersion, "leader"});
  for (const teleop::Command& c : cmds) bytes += teleop::encode(c);
  return bytes + teleop::encode(teleop::Bye{"done"});
}

}  // namespace claw::testing

#endif  // CLAW_TESTS_SCRIPTED_LEADER_HPP_
