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

#include "claw/episode.hpp"

#include <cstring>
#include <regex>
#include <sstream>

#include "claw/config_io.hpp"
#include "claw/format.hpp"

namespace claw::episode {
namespace {

using scenario::Outcome;
using scenario::ScenarioConfig;
using scenario::ScenarioState;
using scenario::WindowCommand;

constexpr std::string_view kLeverPrefix = "lever:";
constexpr std::string_view kEndPrefix = "end:";

bool bit_equal(const Vec6& a, const Vec6& b) {
  return std::memcmp(a.data(), b.data(), sizeof(double) * 6) == 0;
}

[[noreturn]] void malformed(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::kMalformedMessage,
              "episode line " + std::to_string(line) + ": " + what);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

void append_vec(std::string& out, const Vec6& v) {
  for (double x : v) {
    out += format_double(x);
    out += ',';
  }
}

Vec6 pose_in_force(const ScenarioState& s, const WindowCommand& cmd) {
  if (cmd.pose) return *cmd.pose;
  if (s.plant.pending_command) return *s.plant.pending_command;
  return s.plant.commanded_pose;
}

}  // namespace

std::optional<lock::StiffnessMode> Row::lever_command() const {
  for (const std::string& e : events) {
    if (e.rfind(kLeverPrefix, 0) == 0) return lock::parse_mode(e.substr(kLeverPrefix.size()));
  }
  return std::nullopt;
}

bool Row::is_end() const {
  for (const std::string& e : events) {
    if (e.rfind(kEndPrefix, 0) == 0) return true;
  }
  return false;
}

std::optional<Outcome> EpisodeLog::outcome() const {
  if (rows.empty()) return std::nullopt;
  for (const std::string& e : rows.back().events) {
    if (e.rfind(kEndPrefix, 0) == 0) return scenario::parse_outcome(e.substr(kEndPrefix.size()));
  }
  return std::nullopt;
}

bool operator==(const Header& a, const Header& b) {
  return a.version == b.version && a.scenario_hash == b.scenario_hash &&
         a.gripper == b.gripper && a.started == b.started;
}

bool operator==(const Row& a, const Row& b) {
  return a.window == b.window && bit_equal(a.pose, b.pose) &&
         bit_equal(a.deflection, b.deflection) && bit_equal(a.wrench, b.wrench) &&
         a.mode == b.mode && a.estop == b.estop && a.events == b.events;
}

std::string write_episode(const EpisodeLog& log) {
  std::string out = "# claw-episode v" + std::to_string(log.header.version) +
                    " scenario=" + log.header.scenario_hash + " gripper=" + log.header.gripper +
                    " started=" + log.header.started + "\n";
  out += kColumns;
  out += '\n';
  for (const Row& r : log.rows) {
    out += format_double(r.t());
    out += ',';
    append_vec(out, r.pose);
    append_vec(out, r.deflection);
    append_vec(out, r.wrench);
    out += lock::mode_name(r.mode);
    out += r.estop ? ",1," : ",0,";
    for (std::size_t i = 0; i < r.events.size(); ++i) {
      if (i) out += ';';
      out += r.events[i];
    }
    out += '\n';
  }
  return out;
}

EpisodeLog parse_episode(std::string_view text) {
  std::vector<std::string_view> lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  for (auto& l : lines) {
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
  }
  if (lines.empty()) malformed(1, "missing header");

  static const std::regex header_re(
      R"(# claw-episode v(\d+) scenario=(\S+) gripper=(\S+) started=(\S+))");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(lines[0].begin(), lines[0].end(), m, header_re)) {
    malformed(1, "expected '# claw-episode v<N> scenario=<hash> gripper=<id> started=<time>'");
  }
  EpisodeLog log;
  try {
    log.header.version = std::stoi(m[1].str());
  } catch (const std::exception&) {
    malformed(1, "bad version");
  }
  if (log.header.version != kSpecVersion) {
    throw Error(ErrorCode::kVersionMismatch,
                "episode version v" + m[1].str() + " is not supported (expected v" +
                    std::to_string(kSpecVersion) + ")");
  }
  log.header.scenario_hash = m[2].str();
  log.header.gripper = m[3].str();
  log.header.started = m[4].str();

  if (lines.size() < 2 || lines[1] != kColumns) malformed(2, "expected the column header");
  for (std::size_t i = 2; i < lines.size(); ++i) {
    const std::size_t line = i + 1;
    const auto f = split(lines[i], ',');
    if (f.size() != 22) malformed(line, "expected 22 fields, got " + std::to_string(f.size()));
    Row r;
    double t = 0.0;
    if (!parse_double(f[0], t) || !(t >= 0.0)) malformed(line, "bad t_s");
    const double k = std::round(t * 50.0);
    if (static_cast<double>(k) / 50.0 != t) malformed(line, "t_s is off the 20 ms grid");
    r.window = static_cast<std::uint64_t>(k);
    if (!log.rows.empty() && r.window <= log.rows.back().window) {
      malformed(line, "t_s must strictly increase");
    }
    Vec6* blocks[3] = {&r.pose, &r.deflection, &r.wrench};
    for (std::size_t b = 0; b < 3; ++b) {
      for (std::size_t j = 0; j < 6; ++j) {
        if (!parse_double(f[1 + 6 * b + j], (*blocks[b])[j])) {
          malformed(line, "bad number in column " + std::to_string(2 + 6 * b + j));
        }
      }
    }
    const auto mode = lock::parse_mode(f[19]);
    if (!mode) malformed(line, "bad mode '" + std::string(f[19]) + "'");
    r.mode = *mode;
    if (f[20] == "1") {
      r.estop = true;
    } else if (f[20] != "0") {
      malformed(line, "estop must be 0 or 1");
    }
    if (!f[21].empty()) {
      for (std::string_view e : split(f[21], ';')) {
        if (e.empty()) malformed(line, "empty event");
        r.events.emplace_back(e);
      }
    }
    log.rows.push_back(std::move(r));
  }
  return log;
}

EpisodeLog load_episode(const std::filesystem::path& path) { return parse_episode(read_file(path)); }

void save_episode(const std::filesystem::path& path, const EpisodeLog& log) {
  write_file_atomic(path, write_episode(log));
}

Recorder::Recorder(const ScenarioConfig& config, std::string started) {
  log_.header.scenario_hash = config::config_hash(config);
  log_.header.gripper = std::string(scenario::gripper_name(config.gripper));
  log_.header.started = std::move(started);
}

Recorder::Recorder(Header header) { log_.header = std::move(header); }

void Recorder::observe(const ScenarioState& s, std::uint64_t window, const WindowCommand& cmd) {
  Row r;
  r.window = window;
  r.pose = pose_in_force(s, cmd);
  r.deflection = s.plant.wrist_deflection;
  r.wrench = s.plant.measured_wrench;
  r.mode = cmd.lever.value_or(s.lever);
  r.estop = s.monitor.tripped;
  r.events = s.events;
  if (cmd.lever) r.events.push_back(std::string(kLeverPrefix) + std::string(lock::mode_name(*cmd.lever)));
  log_.rows.push_back(std::move(r));
}

void Recorder::finish(const ScenarioState& s) {
  Row r;
  r.window = s.plant.tick / control::kTicksPerWindow + 1;
  if (!log_.rows.empty()) r.window = std::max(r.window, log_.rows.back().window + 1);
  r.pose = s.plant.pending_command.value_or(s.plant.commanded_pose);
  r.deflection = s.plant.wrist_deflection;
  r.wrench = s.plant.measured_wrench;
  r.mode = s.lever;
  r.estop = s.monitor.tripped;
  r.events = s.events;
  r.events.push_back(std::string(kEndPrefix) + std::string(scenario::outcome_name(s.status.outcome)));
  log_.rows.push_back(std::move(r));
}

EpisodeLog record(const ScenarioConfig& config, const scenario::CommandSource& source,
                  std::string started) {
  const scenario::Scenario sc(config);
  Recorder rec(config, std::move(started));
  const scenario::RunResult result = scenario::run_scenario(
      sc, source, [&](const ScenarioState& s, std::uint64_t w, const WindowCommand& c) {
        rec.observe(s, w, c);
      });
  rec.finish(result.final_state);
  return rec.take();
}

EpisodeLog replay(const EpisodeLog& log, const ScenarioConfig& config,
                  const ReplayOverride& override) {
  if (override.mode && override.schedule) {
    throw Error(ErrorCode::kInvalidArgument, "give either a fixed mode or a schedule, not both");
  }
  const std::string hash = config::config_hash(config);
  if (hash != log.header.scenario_hash) {
    throw Error(ErrorCode::kInvalidArgument, "episode was recorded with scenario " +
                                                 log.header.scenario_hash +
                                                 " but the config hashes to " + hash);
  }
  if (override.schedule && config.mode_schedule.size() > 1) {
    throw Error(ErrorCode::kScheduleConflict,
                "the scenario already carries a mode schedule; drop it or the override");
  }
  if (log.rows.empty()) return EpisodeLog{log.header, {}};

  ScenarioConfig c = config;
  if (override.mode) c.mode_schedule = {{0.0, *override.mode}};
  if (override.schedule) c.mode_schedule = *override.schedule;
  const bool replay_levers = !override.mode && !override.schedule;

  // Rows by window; the closing row is bookkeeping, not a command.
  std::vector<const Row*> by_window;
  for (const Row& r : log.rows) {
    if (r.is_end()) continue;
    if (r.window >= by_window.size()) by_window.resize(r.window + 1, nullptr);
    by_window[r.window] = &r;
  }

  const scenario::CommandSource source = [&](const ScenarioState&, std::uint64_t w) {
    WindowCommand cmd;
    if (w < by_window.size() && by_window[w]) {
      cmd.pose = by_window[w]->pose;
      if (replay_levers) cmd.lever = by_window[w]->lever_command();
    }
    return cmd;
  };
  const scenario::Scenario sc(c);
  Recorder rec(log.header);
  const scenario::RunResult result = scenario::run_scenario(
      sc, source, [&](const ScenarioState& s, std::uint64_t w, const WindowCommand& cmd) {
        rec.observe(s, w, cmd);
      });
  rec.finish(result.final_state);
  return rec.take();
}

}  // namespace claw::episode
