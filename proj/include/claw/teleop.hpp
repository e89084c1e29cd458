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

// Teleoperation wire protocol and the follower side of a session.
//
// One JSON object per line. Keys appear in a fixed order:
//   {"type":"command","seq":N,"t":s,"pose":[6],"mode":"free"}
//   {"type":"feedback","seq":N,"t":s,"wrench":[6],"estop":false}
//   {"type":"hello","spec_version":1,"role":"leader"}
//   {"type":"bye","reason":"..."}
//   {"type":"state","t":s,"pose":[6],"deflection":[6],"wrench":[6],
//    "mode":"free","carrier_position":0.0,"estop":false,
//    "scenario":{"outcome":"running","insertion_depth":0.0,"latch_released":false}}
//
// Numbers use the shortest text that reads back to the same double, so a
// decode/encode cycle is bit-exact. seq is limited to 2^53 - 1 so that
// JavaScript peers read it exactly.

#ifndef CLAW_TELEOP_HPP_
#define CLAW_TELEOP_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "claw/core.hpp"
#include "claw/episode.hpp"
#include "claw/lockstate.hpp"
#include "claw/scenario.hpp"

namespace claw::teleop {

inline constexpr std::uint64_t kMaxSeq = (std::uint64_t{1} << 53) - 1;
inline constexpr std::size_t kMaxLineBytes = 64 * 1024;

struct Command {
  std::uint64_t seq = 0;
  double t = 0.0;
  Vec6 pose{};
  lock::StiffnessMode mode = lock::StiffnessMode::kFree;
};

struct Feedback {
  std::uint64_t seq = 0;
  double t = 0.0;
  Vec6 wrench{};
  bool estop = false;
};

struct Hello {
  int spec_version = kSpecVersion;
  std::string role;  // "leader", "follower" or "observer"
};

struct Bye {
  std::string reason;
};

struct ScenarioSummary {
  scenario::Outcome outcome = scenario::Outcome::kRunning;
  std::optional<double> insertion_depth;
  std::optional<double> handle_angle;
  bool latch_released = false;
};

struct StateFrame {
  double t = 0.0;
  Vec6 pose{};
  Vec6 deflection{};
  Vec6 wrench{};
  lock::StiffnessMode mode = lock::StiffnessMode::kFree;
  double carrier_position = 0.0;
  bool estop = false;
  ScenarioSummary scenario;
};

using Message = std::variant<Command, Feedback, Hello, Bye, StateFrame>;

std::string_view type_name(const Message& msg);

// Field-by-field comparison with doubles compared by bit pattern.
bool bit_equal(const Message& a, const Message& b);

// One line including the trailing '\n'. Throws Error(kInvalidArgument) for
// messages that cannot be sent (non-finite numbers, seq above kMaxSeq,
// unknown role).
std::string encode(const Message& msg);

struct DecodeError {
  std::size_t offset = 0;  // byte offset of the fault within the stream
  std::string message;
};

using DecodeResult = std::variant<Message, DecodeError>;

// Decodes one line (a trailing '\n' or "\r\n" is allowed). Never throws.
// `base_offset` is the position of the line in its stream.
DecodeResult decode(std::string_view line, std::size_t base_offset = 0);

// Throwing form: Error(kMalformedMessage) with the offset in the message.
Message decode_or_throw(std::string_view line);

// Splits a byte stream into lines and decodes each. Blank lines are skipped.
class StreamDecoder {
 public:
  std::vector<DecodeResult> feed(std::string_view bytes);
  std::size_t consumed() const { return consumed_; }

 private:
  std::string buffer_;
  std::size_t consumed_ = 0;  // stream offset of buffer_[0]
  bool discarding_ = false;   // inside an overlong line
};

StateFrame make_frame(const scenario::ScenarioConfig& config, const scenario::ScenarioState& state);

// Follower end of a teleoperation link. Single-threaded; the owner
// serializes calls.
//
// The leader must open with Hello. Commands are queued and applied at the
// first window opening at or after their t; when several are due the
// newest wins, so poses change at most once per 20 ms window. A seq at or
// below the last accepted one is dropped. A t older than the last accepted
// command, a second Hello, or a follower-side message from the leader
// closes the link.
class FollowerSession {
 public:
  explicit FollowerSession(scenario::ScenarioConfig config, std::string started = {});

  // Handles one inbound message; returns replies (Hello, or Bye on close).
  std::vector<Message> receive(const Message& msg);
  // Reports an undecodable line; closes the link.
  std::vector<Message> receive_error(const DecodeError& error);

  // Runs one 20 ms window and returns the feedback for it. No-op (other than
  // producing feedback) once the scenario is terminal.
  Feedback advance();

  bool handshake_done() const { return handshake_done_; }
  bool closed() const { return closed_; }
  const std::string& close_reason() const { return close_reason_; }
  bool terminal() const { return scenario::is_terminal(state_.status.outcome); }

  // True when queued commands reach the window about to open.
  bool has_command_for_next_window() const;
  std::uint64_t dropped_commands() const { return dropped_; }

  std::uint64_t window() const { return window_; }
  double time() const { return state_.plant.time(); }
  const scenario::ScenarioState& state() const { return state_; }
  const scenario::ScenarioConfig& config() const { return scenario_.config(); }
  StateFrame frame() const { return make_frame(scenario_.config(), state_); }

  // Reopens the link for a new leader after Bye or a violation. Commands
  // already queued stay queued.
  void reset_link();

  // Closing row is appended by finish_log() once the scenario ends.
  const episode::EpisodeLog& log() const { return recorder_.log(); }
  void finish_log();

 private:
  std::vector<Message> close(std::string reason);

  scenario::Scenario scenario_;
  scenario::ScenarioState state_;
  episode::Recorder recorder_;
  bool log_finished_ = false;
  std::vector<Command> queue_;
  std::optional<std::uint64_t> last_seq_;
  double last_t_ = 0.0;
  std::uint64_t dropped_ = 0;
  std::uint64_t feedback_seq_ = 0;
  std::uint64_t window_ = 0;
  bool handshake_done_ = false;
  bool closed_ = false;
  std::string close_reason_;
};

}  // namespace claw::teleop

#endif  // CLAW_TELEOP_HPP_
