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

// Simulation sessions hosted by `claw serve`.
//
// Each session owns one FollowerSession and one worker thread that steps it
// in 20 ms windows. The clock starts when the first client attaches. With
// real-time pacing window k completes at origin + (k + 1) * 20 ms / scale of
// wall time; in lockstep the worker steps only while the leader's queued
// commands reach the next window, and runs to the end unpaced once the
// leader leaves. Simulated results never depend on wall-clock timing.
//
// Every attached client first receives Hello{follower} and the current
// StateFrame, then one StateFrame per window. The leader also receives
// Feedback and must open with Hello{leader}. When the scenario ends each
// client gets the final frame and Bye{"terminal: <outcome>"}. Clients that
// attach to a finished session get the stored episode replayed as frames,
// read-only.

#ifndef CLAW_SERVICE_HPP_
#define CLAW_SERVICE_HPP_

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "claw/episode.hpp"
#include "claw/scenario.hpp"
#include "claw/teleop.hpp"

namespace claw::service {

struct Pacing {
  double time_scale = 1.0;  // simulated seconds per wall second, [0.1, 10]
  bool lockstep = false;
};

// Throws Error(kInvalidArgument, field "time_scale").
void validate(const Pacing& pacing);

enum class SessionState { kIdle, kRunning, kTerminal };
std::string_view state_name(SessionState state);

struct Descriptor {
  std::string session_id;
  scenario::ScenarioConfig scenario;
  std::string created;
  SessionState state = SessionState::kIdle;
  Pacing pacing;
  double t = 0.0;
};

// JSON object: session_id, created, state, t, pacing, scenario.
std::string descriptor_json(const Descriptor& d);
std::string descriptors_json(const std::vector<Descriptor>& list);

enum class Role { kLeader, kObserver };

// Outbound channel to one client. Called with the session lock held, so
// implementations must only enqueue.
struct ClientSink {
  std::function<void(std::string line)> send;
  std::function<void()> close;  // no more lines follow
};

using ClientId = std::uint64_t;
using Clock = std::function<std::string()>;

class Session {
 public:
  Session(std::string id, scenario::ScenarioConfig config, Pacing pacing, Clock clock,
          std::optional<std::filesystem::path> log_dir);
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const std::string& id() const { return id_; }
  Descriptor descriptor() const;

  // Throws Error(kCommanderConflict) for a second leader. Attaching to a
  // finished session as a leader throws Error(kSessionTerminal).
  ClientId attach(Role role, ClientSink sink);
  void detach(ClientId client);
  // Raw bytes from a client; may hold partial or several lines.
  void deliver(ClientId client, std::string_view bytes);

  bool terminal() const;
  // Episode so far; complete once terminal.
  episode::EpisodeLog episode() const;
  std::chrono::steady_clock::time_point finished_at() const;

  // Blocks until the session is terminal or the timeout passes.
  bool wait_terminal(std::chrono::milliseconds timeout) const;

  void stop();

 private:
  struct Client {
    Role role = Role::kObserver;
    ClientSink sink;
    teleop::StreamDecoder decoder;
    bool closed = false;
    // Read-only replay cursor for clients attached after the end.
    std::optional<std::size_t> replay_row;
  };

  void run();
  bool may_step() const;
  void step_window();
  void finish(const std::string& reason);
  void serve_replays();
  void send(Client& c, const teleop::Message& m);
  void close_client(ClientId id, Client& c, const std::optional<std::string>& bye);
  void broadcast(const teleop::Message& m);
  void handle_leader_line(ClientId id, Client& c, const teleop::DecodeResult& r);
  void release_leader();

  const std::string id_;
  const Pacing pacing_;
  const std::string created_;
  const std::optional<std::filesystem::path> log_dir_;

  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  teleop::FollowerSession follower_;
  SessionState state_ = SessionState::kIdle;
  std::map<ClientId, Client> clients_;
  ClientId next_client_ = 1;
  std::optional<ClientId> leader_;
  bool leader_gone_ = false;
  bool stopping_ = false;
  std::chrono::steady_clock::time_point origin_;
  std::uint64_t origin_window_ = 0;
  std::chrono::steady_clock::time_point replay_origin_;
  std::chrono::steady_clock::time_point finished_at_;
  std::string end_reason_;
  std::thread worker_;
};

struct ManagerOptions {
  std::size_t max_sessions = 16;
  Pacing pacing;
  std::optional<std::filesystem::path> log_dir;
  Clock clock;  // ISO-8601 timestamps; defaults to the system clock
  std::chrono::seconds terminal_ttl{3600};
};

class SessionManager {
 public:
  explicit SessionManager(ManagerOptions options = {});
  ~SessionManager();

  // Throws Error(kInvalidConfig) from validation and Error(kCapacityExceeded)
  // at the cap.
  std::shared_ptr<Session> create(const scenario::ScenarioConfig& config,
                                  std::optional<Pacing> pacing = std::nullopt);
  // Throws Error(kUnknownSession).
  std::shared_ptr<Session> find(const std::string& id) const;
  std::vector<Descriptor> list() const;
  void remove(const std::string& id);
  // Drops finished sessions older than the TTL.
  void expire();
  std::size_t size() const;
  void stop_all();

  const ManagerOptions& options() const { return options_; }

 private:
  ManagerOptions options_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t counter_ = 0;
};

}  // namespace claw::service

#endif  // CLAW_SERVICE_HPP_
