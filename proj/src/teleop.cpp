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

#include "claw/teleop.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

#include "claw/format.hpp"
#include "json.hpp"

namespace claw::teleop {
namespace {

using json = nlohmann::ordered_json;
using scenario::Kind;
using scenario::Outcome;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

bool same_bits(const Vec6& a, const Vec6& b) {
  return std::memcmp(a.data(), b.data(), sizeof(double) * 6) == 0;
}

bool same_bits(const std::optional<double>& a, const std::optional<double>& b) {
  if (a.has_value() != b.has_value()) return false;
  return !a || same_bits(*a, *b);
}

bool valid_role(std::string_view role) {
  return role == "leader" || role == "follower" || role == "observer";
}

void check_finite(double v, const char* field) {
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::kInvalidArgument, std::string(field) + " must be finite", field);
  }
}

json vec_json(const Vec6& v, const char* field) {
  json a = json::array();
  for (double x : v) {
    check_finite(x, field);
    a.push_back(x);
  }
  return a;
}

json seq_json(std::uint64_t seq) {
  if (seq > kMaxSeq) throw Error(ErrorCode::kInvalidArgument, "seq exceeds 2^53 - 1", "seq");
  return seq;
}

json time_json(double t) {
  check_finite(t, "t");
  if (t < 0.0) throw Error(ErrorCode::kInvalidArgument, "t must be non-negative", "t");
  return t;
}

// Schema failure inside a syntactically valid line.
struct SchemaError {
  std::string message;
};

[[noreturn]] void schema(const std::string& message) { throw SchemaError{message}; }

void expect_keys(const json& j, std::initializer_list<const char*> keys) {
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) schema("unexpected key '" + key + "'");
  }
  for (const char* k : keys) {
    if (!j.contains(k)) schema(std::string("missing key '") + k + "'");
  }
}

double get_number(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number()) schema(std::string("'") + key + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) schema(std::string("'") + key + "' must be finite");
  return d;
}

double get_time(const json& j) {
  const double t = get_number(j, "t");
  if (t < 0.0) schema("'t' must be non-negative");
  return t;
}

std::uint64_t get_seq(const json& j) {
  const json& v = j.at("seq");
  if (!v.is_number_unsigned()) schema("'seq' must be a non-negative integer");
  const std::uint64_t s = v.get<std::uint64_t>();
  if (s > kMaxSeq) schema("'seq' exceeds 2^53 - 1");
  return s;
}

bool get_bool(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_boolean()) schema(std::string("'") + key + "' must be a boolean");
  return v.get<bool>();
}

std::string get_string(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_string()) schema(std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

Vec6 get_vec(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != 6) schema(std::string("'") + key + "' must hold 6 numbers");
  Vec6 out{};
  for (std::size_t i = 0; i < 6; ++i) {
    if (!v[i].is_number()) schema(std::string("'") + key + "' must hold 6 numbers");
    out[i] = v[i].get<double>();
    if (!std::isfinite(out[i])) schema(std::string("'") + key + "' must be finite");
  }
  return out;
}

lock::StiffnessMode get_mode(const json& j) {
  const auto m = lock::parse_mode(get_string(j, "mode"));
  if (!m) schema("unknown mode");
  return *m;
}

Message from_json(const json& j) {
  if (!j.is_object()) schema("expected a JSON object");
  if (!j.contains("type") || !j["type"].is_string()) schema("missing string 'type'");
  const std::string type = j["type"].get<std::string>();
  if (type == "command") {
    expect_keys(j, {"type", "seq", "t", "pose", "mode"});
    return Command{get_seq(j), get_time(j), get_vec(j, "pose"), get_mode(j)};
  }
  if (type == "feedback") {
    expect_keys(j, {"type", "seq", "t", "wrench", "estop"});
    return Feedback{get_seq(j), get_time(j), get_vec(j, "wrench"), get_bool(j, "estop")};
  }
  if (type == "hello") {
    expect_keys(j, {"type", "spec_version", "role"});
    const json& v = j["spec_version"];
    if (!v.is_number_integer()) schema("'spec_version' must be an integer");
    const auto version = v.get<std::int64_t>();
    if (version < 0 || version > 1'000'000) schema("'spec_version' out of range");
    Hello h{static_cast<int>(version), get_string(j, "role")};
    if (!valid_role(h.role)) schema("unknown role");
    return h;
  }
  if (type == "bye") {
    expect_keys(j, {"type", "reason"});
    return Bye{get_string(j, "reason")};
  }
  if (type == "state") {
    expect_keys(j, {"type", "t", "pose", "deflection", "wrench", "mode", "carrier_position",
                    "estop", "scenario"});
    StateFrame f;
    f.t = get_time(j);
    f.pose = get_vec(j, "pose");
    f.deflection = get_vec(j, "deflection");
    f.wrench = get_vec(j, "wrench");
    f.mode = get_mode(j);
    f.carrier_position = get_number(j, "carrier_position");
    f.estop = get_bool(j, "estop");
    const json& s = j["scenario"];
    if (!s.is_object()) schema("'scenario' must be an object");
    for (const auto& [key, value] : s.items()) {
      if (key != "outcome" && key != "insertion_depth" && key != "handle_angle" &&
          key != "latch_released") {
        schema("unexpected key 'scenario." + key + "'");
      }
    }
    if (!s.contains("outcome") || !s.contains("latch_released")) {
      schema("'scenario' needs outcome and latch_released");
    }
    const auto outcome = scenario::parse_outcome(get_string(s, "outcome"));
    if (!outcome) schema("unknown outcome");
    f.scenario.outcome = *outcome;
    if (s.contains("insertion_depth")) f.scenario.insertion_depth = get_number(s, "insertion_depth");
    if (s.contains("handle_angle")) f.scenario.handle_angle = get_number(s, "handle_angle");
    f.scenario.latch_released = get_bool(s, "latch_released");
    return f;
  }
  schema("unknown type '" + type + "'");
}

}  // namespace

std::string_view type_name(const Message& msg) {
  return std::visit(Overloaded{[](const Command&) { return std::string_view("command"); },
                               [](const Feedback&) { return std::string_view("feedback"); },
                               [](const Hello&) { return std::string_view("hello"); },
                               [](const Bye&) { return std::string_view("bye"); },
                               [](const StateFrame&) { return std::string_view("state"); }},
                    msg);
}

bool bit_equal(const Message& a, const Message& b) {
  if (a.index() != b.index()) return false;
  return std::visit(
      Overloaded{
          [&](const Command& x) {
            const auto& y = std::get<Command>(b);
            return x.seq == y.seq && same_bits(x.t, y.t) && same_bits(x.pose, y.pose) &&
                   x.mode == y.mode;
          },
          [&](const Feedback& x) {
            const auto& y = std::get<Feedback>(b);
            return x.seq == y.seq && same_bits(x.t, y.t) && same_bits(x.wrench, y.wrench) &&
                   x.estop == y.estop;
          },
          [&](const Hello& x) {
            const auto& y = std::get<Hello>(b);
            return x.spec_version == y.spec_version && x.role == y.role;
          },
          [&](const Bye& x) { return x.reason == std::get<Bye>(b).reason; },
          [&](const StateFrame& x) {
            const auto& y = std::get<StateFrame>(b);
            return same_bits(x.t, y.t) && same_bits(x.pose, y.pose) &&
                   same_bits(x.deflection, y.deflection) && same_bits(x.wrench, y.wrench) &&
                   x.mode == y.mode && same_bits(x.carrier_position, y.carrier_position) &&
                   x.estop == y.estop && x.scenario.outcome == y.scenario.outcome &&
                   same_bits(x.scenario.insertion_depth, y.scenario.insertion_depth) &&
                   same_bits(x.scenario.handle_angle, y.scenario.handle_angle) &&
                   x.scenario.latch_released == y.scenario.latch_released;
          }},
      a);
}

std::string encode(const Message& msg) {
  json j;
  std::visit(
      Overloaded{
          [&](const Command& m) {
            j["type"] = "command";
            j["seq"] = seq_json(m.seq);
            j["t"] = time_json(m.t);
            j["pose"] = vec_json(m.pose, "pose");
            j["mode"] = lock::mode_name(m.mode);
          },
          [&](const Feedback& m) {
            j["type"] = "feedback";
            j["seq"] = seq_json(m.seq);
            j["t"] = time_json(m.t);
            j["wrench"] = vec_json(m.wrench, "wrench");
            j["estop"] = m.estop;
          },
          [&](const Hello& m) {
            if (!valid_role(m.role)) {
              throw Error(ErrorCode::kInvalidArgument, "unknown role '" + m.role + "'", "role");
            }
            j["type"] = "hello";
            j["spec_version"] = m.spec_version;
            j["role"] = m.role;
          },
          [&](const Bye& m) {
            j["type"] = "bye";
            j["reason"] = m.reason;
          },
          [&](const StateFrame& m) {
            j["type"] = "state";
            j["t"] = time_json(m.t);
            j["pose"] = vec_json(m.pose, "pose");
            j["deflection"] = vec_json(m.deflection, "deflection");
            j["wrench"] = vec_json(m.wrench, "wrench");
            j["mode"] = lock::mode_name(m.mode);
            check_finite(m.carrier_position, "carrier_position");
            j["carrier_position"] = m.carrier_position;
            j["estop"] = m.estop;
            json s;
            s["outcome"] = scenario::outcome_name(m.scenario.outcome);
            if (m.scenario.insertion_depth) {
              check_finite(*m.scenario.insertion_depth, "insertion_depth");
              s["insertion_depth"] = *m.scenario.insertion_depth;
            }
            if (m.scenario.handle_angle) {
              check_finite(*m.scenario.handle_angle, "handle_angle");
              s["handle_angle"] = *m.scenario.handle_angle;
            }
            s["latch_released"] = m.scenario.latch_released;
            j["scenario"] = std::move(s);
          }},
      msg);
  // Replacement keeps invalid UTF-8 in a Bye reason from throwing.
  return j.dump(-1, ' ', false, json::error_handler_t::replace) + "\n";
}

DecodeResult decode(std::string_view line, std::size_t base_offset) {
  try {
    if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.size() > kMaxLineBytes) return DecodeError{base_offset, "line exceeds 64 KiB"};
    if (const auto nl = line.find('\n'); nl != std::string_view::npos) {
      return DecodeError{base_offset + nl, "embedded newline"};
    }
    if (line.empty()) return DecodeError{base_offset, "empty line"};
    json j;
    try {
      j = json::parse(line.begin(), line.end());
    } catch (const json::parse_error& e) {
      const std::size_t at = e.byte > 0 ? std::min<std::size_t>(e.byte - 1, line.size()) : 0;
      return DecodeError{base_offset + at, std::string("invalid JSON: ") + e.what()};
    }
    try {
      return from_json(j);
    } catch (const SchemaError& e) {
      return DecodeError{base_offset, e.message};
    }
  } catch (const std::exception& e) {
    return DecodeError{base_offset, std::string("undecodable line: ") + e.what()};
  } catch (...) {
    return DecodeError{base_offset, "undecodable line"};
  }
}

Message decode_or_throw(std::string_view line) {
  DecodeResult r = decode(line);
  if (auto* e = std::get_if<DecodeError>(&r)) {
    throw Error(ErrorCode::kMalformedMessage,
                "malformed message at byte " + std::to_string(e->offset) + ": " + e->message);
  }
  return std::get<Message>(std::move(r));
}

std::vector<DecodeResult> StreamDecoder::feed(std::string_view bytes) {
  std::vector<DecodeResult> out;
  buffer_.append(bytes);
  std::size_t start = 0;
  while (true) {
    const std::size_t nl = buffer_.find('\n', start);
    if (nl == std::string::npos) break;
    const std::string_view line(buffer_.data() + start, nl - start);
    if (discarding_) {
      discarding_ = false;
    } else if (!line.empty() && line != "\r") {
      out.push_back(decode(line, consumed_ + start));
    }
    start = nl + 1;
  }
  buffer_.erase(0, start);
  consumed_ += start;
  if (!discarding_ && buffer_.size() > kMaxLineBytes) {
    out.push_back(DecodeError{consumed_, "line exceeds 64 KiB"});
    discarding_ = true;
  }
  if (discarding_) {
    consumed_ += buffer_.size();
    buffer_.clear();
  }
  return out;
}

StateFrame make_frame(const scenario::ScenarioConfig& config, const scenario::ScenarioState& s) {
  StateFrame f;
  f.t = s.plant.time();
  f.pose = s.plant.tcp_pose;
  f.deflection = s.plant.wrist_deflection;
  f.wrench = s.plant.measured_wrench;
  f.mode = s.lock.mode;
  f.carrier_position = s.lock.carrier_position;
  f.estop = s.monitor.tripped;
  f.scenario.outcome = s.status.outcome;
  if (config.kind == Kind::kPegInHole) f.scenario.insertion_depth = s.status.insertion_depth;
  if (config.kind == Kind::kDoorHandle) f.scenario.handle_angle = s.status.handle_angle;
  f.scenario.latch_released = s.status.latch_released;
  return f;
}

FollowerSession::FollowerSession(scenario::ScenarioConfig config, std::string started)
    : scenario_(std::move(config)),
      state_(scenario_.initial_state()),
      recorder_(scenario_.config(), started.empty() ? iso8601_now() : std::move(started)) {}

std::vector<Message> FollowerSession::close(std::string reason) {
  closed_ = true;
  close_reason_ = reason;
  queue_.clear();
  return {Bye{std::move(reason)}};
}

std::vector<Message> FollowerSession::receive_error(const DecodeError& error) {
  if (closed_) return {};
  return close("malformed-message at byte " + std::to_string(error.offset) + ": " + error.message);
}

std::vector<Message> FollowerSession::receive(const Message& msg) {
  if (closed_) return {};
  if (const auto* h = std::get_if<Hello>(&msg)) {
    if (handshake_done_) return close("protocol-violation: repeated hello");
    if (h->spec_version != kSpecVersion) {
      return close("version-mismatch: leader speaks v" + std::to_string(h->spec_version) +
                   ", follower v" + std::to_string(kSpecVersion));
    }
    if (h->role != "leader") return close("protocol-violation: follower expects a leader");
    handshake_done_ = true;
    return {Hello{kSpecVersion, "follower"}};
  }
  if (!handshake_done_) return close("protocol-violation: expected hello");
  if (const auto* c = std::get_if<Command>(&msg)) {
    if (last_seq_ && c->seq <= *last_seq_) {
      ++dropped_;
      return {};
    }
    if (last_seq_ && c->t < last_t_) return close("protocol-violation: command time went backwards");
    last_seq_ = c->seq;
    last_t_ = c->t;
    queue_.push_back(*c);
    return {};
  }
  if (const auto* b = std::get_if<Bye>(&msg)) {
    closed_ = true;
    close_reason_ = "leader: " + b->reason;
    return {};
  }
  return close("protocol-violation: unexpected " + std::string(type_name(msg)) + " from leader");
}

bool FollowerSession::has_command_for_next_window() const {
  const double tw = static_cast<double>(window_) * control::kCommandPeriod;
  return !queue_.empty() && queue_.back().t >= tw - 1e-9;
}

Feedback FollowerSession::advance() {
  if (!terminal()) {
    const double tw = static_cast<double>(window_) * control::kCommandPeriod;
    scenario::WindowCommand cmd;
    auto due_end = std::find_if(queue_.begin(), queue_.end(),
                                [&](const Command& c) { return c.t > tw + 1e-9; });
    if (due_end != queue_.begin()) {
      const Command& c = *(due_end - 1);
      cmd.pose = c.pose;
      if (c.mode != state_.lever) cmd.lever = c.mode;
      queue_.erase(queue_.begin(), due_end);
    }
    recorder_.observe(state_, window_, cmd);
    state_.events.clear();
    for (int k = 0; k < control::kTicksPerWindow && !terminal(); ++k) {
      scenario_.step(state_, k == 0 ? cmd.pose : std::nullopt,
                     k == 0 ? cmd.lever : std::nullopt);
    }
    ++window_;
    if (terminal()) finish_log();
  }
  return Feedback{++feedback_seq_, state_.plant.time(), state_.plant.measured_wrench,
                  state_.monitor.tripped};
}

void FollowerSession::reset_link() {
  handshake_done_ = false;
  closed_ = false;
  close_reason_.clear();
  last_seq_.reset();
  last_t_ = 0.0;
}

void FollowerSession::finish_log() {
  if (log_finished_) return;
  log_finished_ = true;
  recorder_.finish(state_);
}

}  // namespace claw::teleop
