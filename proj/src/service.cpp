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

#include "claw/service.hpp"

#include <cmath>
#include <cstdio>

#include "claw/config_io.hpp"
#include "claw/format.hpp"
#include "json.hpp"

namespace claw::service {
namespace {

using Steady = std::chrono::steady_clock;
using teleop::Bye;
using teleop::Hello;
using teleop::Message;

Steady::duration window_span(const Pacing& p, std::uint64_t windows) {
  const double seconds = static_cast<double>(windows) * control::kCommandPeriod / p.time_scale;
  return std::chrono::duration_cast<Steady::duration>(std::chrono::duration<double>(seconds));
}

double detent(lock::StiffnessMode m) { return lock::carrier_target(m); }

Clock default_clock(const Clock& c) {
  return c ? c : Clock([] { return iso8601_now(); });
}

}  // namespace

void validate(const Pacing& p) {
  if (!(p.time_scale >= 0.1 && p.time_scale <= 10.0)) {
    throw Error(ErrorCode::kInvalidArgument, "time_scale must lie in [0.1, 10]", "time_scale");
  }
}

std::string_view state_name(SessionState s) {
  switch (s) {
    case SessionState::kIdle: return "idle";
    case SessionState::kRunning: return "running";
    case SessionState::kTerminal: return "terminal";
  }
  return "idle";
}

namespace {

nlohmann::ordered_json descriptor_object(const Descriptor& d) {
  nlohmann::ordered_json j;
  j["session_id"] = d.session_id;
  j["created"] = d.created;
  j["state"] = state_name(d.state);
  j["t"] = d.t;
  j["pacing"] = {{"time_scale", d.pacing.time_scale}, {"lockstep", d.pacing.lockstep}};
  j["scenario"] = nlohmann::ordered_json::parse(config::dump_config(d.scenario));
  return j;
}

}  // namespace

std::string descriptor_json(const Descriptor& d) { return descriptor_object(d).dump(); }

std::string descriptors_json(const std::vector<Descriptor>& list) {
  nlohmann::ordered_json a = nlohmann::ordered_json::array();
  for (const Descriptor& d : list) a.push_back(descriptor_object(d));
  return a.dump();
}

// --- Session ---------------------------------------------------------------

Session::Session(std::string id, scenario::ScenarioConfig config, Pacing pacing, Clock clock,
                 std::optional<std::filesystem::path> log_dir)
    : id_(std::move(id)),
      pacing_(pacing),
      created_(default_clock(clock)()),
      log_dir_(std::move(log_dir)),
      follower_(std::move(config), created_) {
  validate(pacing_);
  worker_ = std::thread([this] { run(); });
}

Session::~Session() { stop(); }

void Session::stop() {
  {
    std::lock_guard lk(mu_);
    if (!stopping_) {
      stopping_ = true;
      for (auto& [cid, c] : clients_) {
        close_client(cid, c, state_ == SessionState::kTerminal
                                 ? std::nullopt
                                 : std::optional<std::string>("session deleted"));
      }
    }
  }
  cv_.notify_all();
  if (worker_.joinable() && worker_.get_id() != std::this_thread::get_id()) worker_.join();
}

Descriptor Session::descriptor() const {
  std::lock_guard lk(mu_);
  return {id_, follower_.config(), created_, state_, pacing_, follower_.time()};
}

bool Session::terminal() const {
  std::lock_guard lk(mu_);
  return state_ == SessionState::kTerminal;
}

episode::EpisodeLog Session::episode() const {
  std::lock_guard lk(mu_);
  return follower_.log();
}

std::chrono::steady_clock::time_point Session::finished_at() const {
  std::lock_guard lk(mu_);
  return finished_at_;
}

bool Session::wait_terminal(std::chrono::milliseconds timeout) const {
  std::unique_lock lk(mu_);
  return cv_.wait_for(lk, timeout, [&] { return state_ == SessionState::kTerminal; });
}

void Session::send(Client& c, const Message& m) {
  if (!c.closed && c.sink.send) c.sink.send(teleop::encode(m));
}

void Session::broadcast(const Message& m) {
  const std::string line = teleop::encode(m);
  for (auto& [cid, c] : clients_) {
    if (!c.closed && !c.replay_row && c.sink.send) c.sink.send(line);
  }
}

void Session::close_client(ClientId, Client& c, const std::optional<std::string>& bye) {
  if (c.closed) return;
  if (bye) send(c, Bye{*bye});
  c.closed = true;
  if (c.sink.close) c.sink.close();
}

void Session::release_leader() {
  leader_.reset();
  leader_gone_ = true;
  follower_.reset_link();
  cv_.notify_all();
}

ClientId Session::attach(Role role, ClientSink sink) {
  std::lock_guard lk(mu_);
  if (stopping_) throw Error(ErrorCode::kUnknownSession, "session " + id_ + " was deleted");
  const ClientId cid = next_client_++;
  Client c;
  c.role = role;
  c.sink = std::move(sink);
  if (state_ == SessionState::kTerminal) {
    if (role == Role::kLeader) {
      throw Error(ErrorCode::kSessionTerminal, "session " + id_ + " has finished; attach read-only");
    }
    c.replay_row = 0;
    send(c, Hello{kSpecVersion, "follower"});
    clients_.emplace(cid, std::move(c));
    replay_origin_ = Steady::now();
    cv_.notify_all();
    return cid;
  }
  if (role == Role::kLeader) {
    if (leader_) {
      throw Error(ErrorCode::kCommanderConflict, "session " + id_ + " already has a leader");
    }
    leader_ = cid;
    leader_gone_ = false;
    follower_.reset_link();
  }
  send(c, Hello{kSpecVersion, "follower"});
  send(c, follower_.frame());
  clients_.emplace(cid, std::move(c));
  if (state_ == SessionState::kIdle) {
    state_ = SessionState::kRunning;
    origin_ = Steady::now();
    origin_window_ = follower_.window();
  }
  cv_.notify_all();
  return cid;
}

void Session::detach(ClientId cid) {
  std::lock_guard lk(mu_);
  auto it = clients_.find(cid);
  if (it == clients_.end()) return;
  if (leader_ && *leader_ == cid) release_leader();
  clients_.erase(it);
  cv_.notify_all();
}

void Session::handle_leader_line(ClientId cid, Client& c, const teleop::DecodeResult& r) {
  std::vector<Message> replies;
  bool leaving = false;
  if (const auto* e = std::get_if<teleop::DecodeError>(&r)) {
    replies = follower_.receive_error(*e);
  } else {
    const Message& m = std::get<Message>(r);
    leaving = std::holds_alternative<Bye>(m);
    replies = follower_.receive(m);
  }
  for (const Message& reply : replies) {
    if (std::holds_alternative<Hello>(reply)) continue;  // sent on attach
    send(c, reply);
  }
  if (leaving || follower_.closed()) {
    close_client(cid, c, std::nullopt);
    release_leader();
  }
}

void Session::deliver(ClientId cid, std::string_view bytes) {
  std::lock_guard lk(mu_);
  auto it = clients_.find(cid);
  if (it == clients_.end() || it->second.closed) return;
  Client& c = it->second;
  for (const teleop::DecodeResult& r : c.decoder.feed(bytes)) {
    if (c.closed) break;
    if (c.role == Role::kLeader && leader_ && *leader_ == cid &&
        state_ != SessionState::kTerminal) {
      handle_leader_line(cid, c, r);
      continue;
    }
    if (const auto* e = std::get_if<teleop::DecodeError>(&r)) {
      close_client(cid, c, "malformed-message at byte " + std::to_string(e->offset) + ": " +
                               e->message);
      continue;
    }
    const Message& m = std::get<Message>(r);
    if (std::holds_alternative<Bye>(m)) {
      close_client(cid, c, std::nullopt);
    } else if (!std::holds_alternative<Hello>(m)) {
      close_client(cid, c,
                   "protocol-violation: observers cannot send " + std::string(teleop::type_name(m)));
    }
  }
  cv_.notify_all();
}

bool Session::may_step() const {
  if (state_ != SessionState::kRunning) return false;
  if (!pacing_.lockstep) return true;
  return leader_gone_ || follower_.has_command_for_next_window();
}

void Session::step_window() {
  try {
    const teleop::Feedback fb = follower_.advance();
    if (leader_) {
      if (auto it = clients_.find(*leader_); it != clients_.end()) send(it->second, fb);
    }
    broadcast(follower_.frame());
    if (follower_.terminal()) {
      finish("terminal: " + std::string(scenario::outcome_name(follower_.state().status.outcome)));
    }
  } catch (const std::exception& e) {
    finish(std::string("internal-error: ") + e.what());
  }
}

void Session::finish(const std::string& reason) {
  state_ = SessionState::kTerminal;
  end_reason_ = reason;
  finished_at_ = Steady::now();
  follower_.finish_log();
  if (log_dir_) {
    try {
      std::filesystem::create_directories(*log_dir_);
      episode::save_episode(*log_dir_ / (id_ + ".csv"), follower_.log());
      config::save_config(*log_dir_ / (id_ + ".config.json"), follower_.config());
    } catch (const std::exception& e) {
      std::fprintf(stderr, "claw: cannot persist episode for %s: %s\n", id_.c_str(), e.what());
    }
  }
  for (auto& [cid, c] : clients_) {
    if (!c.replay_row) close_client(cid, c, reason);
  }
  leader_.reset();
  cv_.notify_all();
}

void Session::serve_replays() {
  const episode::EpisodeLog& log = follower_.log();
  const auto now = Steady::now();
  std::optional<Steady::time_point> next;
  bool latch = false;
  for (auto& [cid, c] : clients_) {
    if (c.closed || !c.replay_row) continue;
    while (*c.replay_row < log.rows.size()) {
      const std::size_t i = *c.replay_row;
      const auto due = replay_origin_ + (pacing_.lockstep ? Steady::duration::zero()
                                                          : window_span(pacing_, i));
      if (due > now) {
        if (!next || due < *next) next = due;
        break;
      }
      const episode::Row& row = log.rows[i];
      teleop::StateFrame f;
      f.t = row.t();
      f.pose = row.pose;
      f.deflection = row.deflection;
      f.wrench = row.wrench;
      f.mode = row.mode;
      f.carrier_position = detent(row.mode);
      f.estop = row.estop;
      for (std::size_t k = 0; k <= i; ++k) {
        for (const std::string& e : log.rows[k].events) latch = latch || e == "latch_released";
      }
      f.scenario.latch_released = latch;
      if (row.is_end()) f.scenario.outcome = log.outcome().value_or(scenario::Outcome::kRunning);
      send(c, f);
      ++*c.replay_row;
    }
    if (*c.replay_row >= log.rows.size()) close_client(cid, c, "replay complete");
  }
  std::unique_lock lk(mu_, std::adopt_lock);
  if (next) {
    cv_.wait_until(lk, *next, [&] { return stopping_; });
  } else {
    cv_.wait(lk, [&] {
      if (stopping_) return true;
      for (const auto& [cid, c] : clients_) {
        if (!c.closed && c.replay_row) return true;
      }
      return false;
    });
  }
  lk.release();
}

void Session::run() {
  std::unique_lock lk(mu_);
  while (!stopping_) {
    switch (state_) {
      case SessionState::kIdle:
        cv_.wait(lk, [&] { return stopping_ || state_ != SessionState::kIdle; });
        break;
      case SessionState::kRunning:
        if (pacing_.lockstep) {
          cv_.wait(lk, [&] { return stopping_ || state_ != SessionState::kRunning || may_step(); });
        } else {
          const auto deadline =
              origin_ + window_span(pacing_, follower_.window() - origin_window_ + 1);
          cv_.wait_until(lk, deadline, [&] { return stopping_; });
        }
        if (!stopping_ && may_step()) step_window();
        break;
      case SessionState::kTerminal:
        serve_replays();
        break;
    }
  }
}

// --- SessionManager ----------------------------------------------------------

SessionManager::SessionManager(ManagerOptions options) : options_(std::move(options)) {
  options_.clock = default_clock(options_.clock);
  validate(options_.pacing);
}

SessionManager::~SessionManager() { stop_all(); }

std::shared_ptr<Session> SessionManager::create(const scenario::ScenarioConfig& config,
                                                std::optional<Pacing> pacing) {
  scenario::validate(config);
  const Pacing p = pacing.value_or(options_.pacing);
  validate(p);
  std::lock_guard lk(mu_);
  const auto now = Steady::now();
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    if (it->second->terminal() && now - it->second->finished_at() > options_.terminal_ttl) {
      it = sessions_.erase(it);
    } else {
      ++it;
    }
  }
  if (sessions_.size() >= options_.max_sessions) {
    throw Error(ErrorCode::kCapacityExceeded,
                "session limit of " + std::to_string(options_.max_sessions) + " reached");
  }
  ++counter_;
  char prefix[16];
  std::snprintf(prefix, sizeof prefix, "s%04llu-", static_cast<unsigned long long>(counter_));
  const std::string id =
      prefix + fnv1a_hex(std::to_string(counter_) + options_.clock() +
                         std::to_string(now.time_since_epoch().count()))
                   .substr(0, 8);
  auto session = std::make_shared<Session>(id, config, p, options_.clock, options_.log_dir);
  sessions_.emplace(id, session);
  return session;
}

std::shared_ptr<Session> SessionManager::find(const std::string& id) const {
  std::lock_guard lk(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::kUnknownSession, "no session '" + id + "'");
  return it->second;
}

std::vector<Descriptor> SessionManager::list() const {
  std::lock_guard lk(mu_);
  std::vector<Descriptor> out;
  for (const auto& [id, s] : sessions_) out.push_back(s->descriptor());
  return out;
}

void SessionManager::remove(const std::string& id) {
  std::shared_ptr<Session> s;
  {
    std::lock_guard lk(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorCode::kUnknownSession, "no session '" + id + "'");
    s = it->second;
    sessions_.erase(it);
  }
  s->stop();
}

void SessionManager::expire() {
  std::vector<std::shared_ptr<Session>> dropped;
  {
    std::lock_guard lk(mu_);
    const auto now = Steady::now();
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      if (it->second->terminal() && now - it->second->finished_at() > options_.terminal_ttl) {
        dropped.push_back(it->second);
        it = sessions_.erase(it);
      } else {
        ++it;
      }
    }
  }
  for (auto& s : dropped) s->stop();
}

std::size_t SessionManager::size() const {
  std::lock_guard lk(mu_);
  return sessions_.size();
}

void SessionManager::stop_all() {
  std::map<std::string, std::shared_ptr<Session>> all;
  {
    std::lock_guard lk(mu_);
    all.swap(sessions_);
  }
  for (auto& [id, s] : all) s->stop();
}

}  // namespace claw::service
