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

#include "claw/server.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "claw/config_io.hpp"
#include "json.hpp"
#include "net_client.hpp"

namespace claw::server {
namespace {

namespace http = boost::beast::http;
using lock::StiffnessMode;
using scenario::Kind;
using teleop::Message;

using claw::testing::Reply;
using claw::testing::request;
using claw::testing::upgrade_status;
using Ws = claw::testing::WsClient;

class ServerTest : public ::testing::Test {
 protected:
  void start(service::ManagerOptions o = {}, std::optional<std::filesystem::path> assets = {}) {
    o.clock = [] { return std::string("2026-01-01T00:00:00Z"); };
    manager_ = std::make_unique<service::SessionManager>(o);
    ServerOptions so;
    so.bind = "127.0.0.1:0";
    so.static_dir = assets;
    server_ = std::make_unique<Server>(*manager_, so);
    server_->start();
    port_ = server_->port();
  }
  void TearDown() override {
    if (server_) server_->stop();
    server_.reset();
    manager_.reset();
  }
  std::string create(Kind kind, const std::string& query = "") {
    const Reply r = request(port_, http::verb::post, "/api/sessions" + query,
                            config::dump_config(scenario::default_config(kind)));
    EXPECT_EQ(r.status, 201) << r.body;
    return nlohmann::json::parse(r.body).at("session_id").get<std::string>();
  }

  std::unique_ptr<service::SessionManager> manager_;
  std::unique_ptr<Server> server_;
  std::uint16_t port_ = 0;
};

TEST(Bind, ParsesHostAndPort) {
  EXPECT_EQ(parse_bind("127.0.0.1:8080"), (std::pair<std::string, std::uint16_t>{"127.0.0.1", 8080}));
  EXPECT_EQ(parse_bind(":9000").first, "0.0.0.0");
  EXPECT_EQ(parse_bind("[::1]:80").first, "::1");
  EXPECT_THROW(parse_bind("localhost"), Error);
  EXPECT_THROW(parse_bind("h:99999"), Error);
  EXPECT_THROW(parse_bind("h:12x"), Error);
}

TEST(Status, DomainErrorsMapToHttp) {
  EXPECT_EQ(http_status(ErrorCode::kInvalidConfig), 400);
  EXPECT_EQ(http_status(ErrorCode::kUnknownSession), 404);
  EXPECT_EQ(http_status(ErrorCode::kCommanderConflict), 409);
  EXPECT_EQ(http_status(ErrorCode::kCapacityExceeded), 503);
}

TEST_F(ServerTest, CreateListGetDelete) {
  start();
  const std::string id = create(Kind::kPegInHole);
  const Reply list = request(port_, http::verb::get, "/api/sessions");
  ASSERT_EQ(list.status, 200);
  const auto arr = nlohmann::json::parse(list.body);
  ASSERT_EQ(arr.size(), 1u);
  EXPECT_EQ(arr[0]["session_id"], id);
  EXPECT_EQ(arr[0]["state"], "idle");
  EXPECT_EQ(arr[0]["scenario"]["kind"], "peg_in_hole");

  const Reply one = request(port_, http::verb::get, "/api/sessions/" + id);
  EXPECT_EQ(one.status, 200);
  EXPECT_EQ(nlohmann::json::parse(one.body)["t"], 0.0);

  EXPECT_EQ(request(port_, http::verb::delete_, "/api/sessions/" + id).status, 204);
  const Reply gone = request(port_, http::verb::delete_, "/api/sessions/" + id);
  EXPECT_EQ(gone.status, 404);
  EXPECT_EQ(nlohmann::json::parse(gone.body)["error"]["code"], "unknown-session");
}

TEST_F(ServerTest, InvalidConfigIsA400WithTheField) {
  start();
  scenario::ScenarioConfig c = scenario::default_config(Kind::kPegInHole);
  auto doc = nlohmann::json::parse(config::dump_config(c));
  doc["geometry"]["hole_clearance"] = -1;
  const Reply r = request(port_, http::verb::post, "/api/sessions", doc.dump());
  ASSERT_EQ(r.status, 400);
  const auto err = nlohmann::json::parse(r.body)["error"];
  EXPECT_EQ(err["code"], "invalid-config");
  EXPECT_EQ(err["field"], "geometry.hole_clearance");
  EXPECT_EQ(request(port_, http::verb::post, "/api/sessions", "{not json").status, 400);
}

TEST_F(ServerTest, PacingQueryIsValidated) {
  start();
  const Reply zero = request(port_, http::verb::post, "/api/sessions?time_scale=0",
                             config::dump_config(scenario::default_config(Kind::kWallTouch)));
  ASSERT_EQ(zero.status, 400);
  EXPECT_EQ(nlohmann::json::parse(zero.body)["error"]["field"], "time_scale");
  const std::string id = create(Kind::kWallTouch, "?time_scale=2.5&pacing=lockstep");
  const auto d = nlohmann::json::parse(request(port_, http::verb::get, "/api/sessions/" + id).body);
  EXPECT_EQ(d["pacing"]["time_scale"], 2.5);
  EXPECT_EQ(d["pacing"]["lockstep"], true);
}

TEST_F(ServerTest, CapacityIsA503) {
  service::ManagerOptions o;
  o.max_sessions = 1;
  start(o);
  create(Kind::kWallTouch);
  const Reply r = request(port_, http::verb::post, "/api/sessions",
                          config::dump_config(scenario::default_config(Kind::kWallTouch)));
  EXPECT_EQ(r.status, 503);
  EXPECT_EQ(nlohmann::json::parse(r.body)["error"]["code"], "capacity-exceeded");
}

TEST_F(ServerTest, UnknownRoutesAre404) {
  start();
  EXPECT_EQ(request(port_, http::verb::get, "/api/nothing").status, 404);
  EXPECT_EQ(request(port_, http::verb::get, "/api/sessions/zzz").status, 404);
  EXPECT_EQ(request(port_, http::verb::put, "/api/sessions").status, 405);
}

TEST_F(ServerTest, ObserverStreamStartsWithHelloAndFrame) {
  start();
  const std::string id = create(Kind::kWallTouch);
  Ws ws;
  ASSERT_TRUE(ws.connect(port_, "/api/sessions/" + id + "/stream?role=observer"));
  const auto hello = teleop::decode_or_throw(*ws.next());
  EXPECT_EQ(std::get<teleop::Hello>(hello).role, "follower");
  const auto frame = teleop::decode_or_throw(*ws.next());
  EXPECT_EQ(std::get<teleop::StateFrame>(frame).deflection, Vec6{});
  const auto next = teleop::decode_or_throw(*ws.next());
  EXPECT_GT(std::get<teleop::StateFrame>(next).t, std::get<teleop::StateFrame>(frame).t);
}

TEST_F(ServerTest, SecondLeaderIsRefusedWith409) {
  start();
  const std::string id = create(Kind::kWallTouch);
  Ws first;
  ASSERT_TRUE(first.connect(port_, "/api/sessions/" + id + "/stream?role=leader"));
  EXPECT_EQ(upgrade_status(port_, "/api/sessions/" + id + "/stream?role=leader"), 409);
  EXPECT_EQ(upgrade_status(port_, "/api/sessions/nope/stream"), 404);
  EXPECT_EQ(upgrade_status(port_, "/api/sessions/" + id + "/stream?role=boss"), 400);
  EXPECT_EQ(upgrade_status(port_, "/api/sessions/" + id + "/stream?role=observer"), 101);
}

TEST_F(ServerTest, LeaderDrivesALockstepSessionToTheEnd) {
  start();
  const std::string id = create(Kind::kWallTouch, "?pacing=lockstep");
  Ws ws;
  ASSERT_TRUE(ws.connect(port_, "/api/sessions/" + id + "/stream?role=leader"));
  // Browser-style messages without the trailing newline are accepted.
  std::string hello = teleop::encode(teleop::Hello{kSpecVersion, "leader"});
  hello.pop_back();
  ws.send(hello);
  ws.send(teleop::encode(teleop::Command{1, 0.0, {0, 14, 0, 0, 0, 0}, StiffnessMode::kFullLock}));
  ws.send(teleop::encode(teleop::Bye{"done"}));
  const auto msgs = ws.drain();
  ASSERT_FALSE(msgs.empty());
  ASSERT_TRUE(manager_->find(id)->wait_terminal(std::chrono::seconds(30)));
  const Reply csv = request(port_, http::verb::get, "/api/sessions/" + id + "/episode");
  ASSERT_EQ(csv.status, 200);
  EXPECT_EQ(csv.content_type, "text/csv");
  const auto log = episode::parse_episode(csv.body);
  EXPECT_EQ(log, manager_->find(id)->episode());
  EXPECT_EQ(log.rows.front().lever_command(), StiffnessMode::kFullLock);
}

TEST_F(ServerTest, StaticAssetsAreServedInsideTheRoot) {
  const auto root = std::filesystem::temp_directory_path() / "claw_server_test_assets";
  std::filesystem::remove_all(root);
  std::filesystem::create_directories(root / "app");
  std::ofstream(root / "index.html") << "<html>claw</html>";
  std::ofstream(root / "app" / "main.js") << "export {};";
  std::ofstream(root.parent_path() / "claw_server_test_secret.txt") << "secret";
  start({}, root);
  const Reply index = request(port_, http::verb::get, "/");
  EXPECT_EQ(index.status, 200);
  EXPECT_EQ(index.body, "<html>claw</html>");
  const Reply js = request(port_, http::verb::get, "/app/main.js");
  EXPECT_EQ(js.status, 200);
  EXPECT_EQ(js.content_type, "text/javascript");
  EXPECT_EQ(request(port_, http::verb::get, "/missing.txt").status, 404);
  EXPECT_NE(request(port_, http::verb::get, "/../claw_server_test_secret.txt").status, 200);
  EXPECT_NE(request(port_, http::verb::get, "/%2e%2e/claw_server_test_secret.txt").status, 200);
  EXPECT_NE(request(port_, http::verb::get, "/app/%2E%2E/%2E%2E/claw_server_test_secret.txt").status,
            200);
  std::filesystem::remove_all(root);
  std::filesystem::remove(root.parent_path() / "claw_server_test_secret.txt");
}

}  // namespace
}  // namespace claw::server
