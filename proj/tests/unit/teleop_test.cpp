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

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>

#include "claw/format.hpp"
#include "json.hpp"
#include "random_messages.hpp"

#ifndef CLAW_VECTOR_DIR
#error "CLAW_VECTOR_DIR must point at tests/vectors"
#endif

namespace claw::teleop {
namespace {

using lock::StiffnessMode;
using scenario::Kind;

nlohmann::json load_vectors() {
  return nlohmann::json::parse(read_file(std::string(CLAW_VECTOR_DIR) + "/teleop_codec.json"));
}

Message must_decode(std::string_view line) {
  DecodeResult r = decode(line);
  if (auto* e = std::get_if<DecodeError>(&r)) {
    ADD_FAILURE() << "decode failed at " << e->offset << ": " << e->message << "\n  " << line;
    return Bye{};
  }
  return std::get<Message>(r);
}

TEST(Vectors, ValidLinesRoundTripByteForByte) {
  const auto v = load_vectors();
  ASSERT_EQ(v["spec_version"], kSpecVersion);
  ASSERT_GE(v["valid"].size(), 10u);
  for (const auto& c : v["valid"]) {
    const std::string wire = c["wire"];
    const Message m = must_decode(wire);
    EXPECT_EQ(encode(m), wire + "\n") << c["name"];
    EXPECT_TRUE(bit_equal(must_decode(encode(m)), m)) << c["name"];
  }
}

TEST(Vectors, LenientLinesCanonicalize) {
  const auto v = load_vectors();
  for (const auto& c : v["lenient"]) {
    const Message m = must_decode(c["wire"].get<std::string>());
    EXPECT_EQ(encode(m), c["canonical"].get<std::string>() + "\n") << c["name"];
  }
}

TEST(Vectors, InvalidLinesReportOffsets) {
  const auto v = load_vectors();
  ASSERT_GE(v["invalid"].size(), 10u);
  for (const auto& c : v["invalid"]) {
    const std::string wire = c["wire"];
    const DecodeResult r = decode(wire);
    const auto* e = std::get_if<DecodeError>(&r);
    ASSERT_NE(e, nullptr) << c["name"];
    EXPECT_FALSE(e->message.empty());
    EXPECT_LE(e->offset, wire.size()) << c["name"];
    if (!c["offset"].is_null()) EXPECT_EQ(e->offset, c["offset"].get<std::size_t>()) << c["name"];
  }
}

TEST(Codec, CommandWithZeroPoseRoundTrips) {
  const Command c{0, 0.0, {}, StiffnessMode::kFree};
  EXPECT_TRUE(bit_equal(decode_or_throw(encode(c)), c));
}

TEST(Codec, TruncatedLineIsMalformed) {
  const std::string line = encode(Command{5, 0.1, {1, 2, 3, 4, 5, 6}, StiffnessMode::kHalfLock});
  for (std::size_t cut = 0; cut + 1 < line.size(); ++cut) {
    const DecodeResult r = decode(std::string_view(line).substr(0, cut));
    EXPECT_TRUE(std::holds_alternative<DecodeError>(r)) << cut;
  }
  try {
    decode_or_throw(line.substr(0, 20));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedMessage);
  }
}

TEST(Codec, EncodeRejectsUnsendableMessages) {
  Command c;
  c.pose[3] = std::nan("");
  EXPECT_THROW(encode(c), Error);
  c = Command{};
  c.seq = kMaxSeq + 1;
  EXPECT_THROW(encode(c), Error);
  EXPECT_THROW(encode(Hello{1, "boss"}), Error);
  Feedback f;
  f.t = -1.0;
  EXPECT_THROW(encode(f), Error);
}

using claw::testing::random_message;

TEST(Codec, RandomMessagesRoundTripBitExactly) {
  std::mt19937_64 rng(20260101);
  for (int i = 0; i < 2000; ++i) {
    const Message m = random_message(rng);
    const std::string line = encode(m);
    const DecodeResult r = decode(line);
    ASSERT_TRUE(std::holds_alternative<Message>(r)) << line;
    ASSERT_TRUE(bit_equal(std::get<Message>(r), m)) << line;
    EXPECT_EQ(encode(std::get<Message>(r)), line);
  }
}

TEST(Codec, DecodeIsTotalOverFuzzedBytes) {
  std::mt19937_64 rng(7);
  const std::string seed = encode(StateFrame{});
  for (int i = 0; i < 5000; ++i) {
    const std::string bytes = claw::testing::fuzz_bytes(rng, seed, i % 2 == 1);
    DecodeResult r = decode(bytes);
    if (auto* e = std::get_if<DecodeError>(&r)) EXPECT_LE(e->offset, bytes.size());
  }
}

TEST(Stream, OffsetsAreStreamRelative) {
  StreamDecoder d;
  const std::string first = encode(Bye{"a"});
  auto out = d.feed(first + "{\"type\":");
  ASSERT_EQ(out.size(), 1u);
  EXPECT_TRUE(std::holds_alternative<Message>(out[0]));
  out = d.feed("\"bye\",\"reason\":7}\n\n");
  ASSERT_EQ(out.size(), 1u);
  const auto* e = std::get_if<DecodeError>(&out[0]);
  ASSERT_NE(e, nullptr);
  EXPECT_EQ(e->offset, first.size());
  EXPECT_EQ(d.consumed(), first.size() + 27);
}

TEST(Stream, OverlongLineIsDiscarded) {
  StreamDecoder d;
  auto out = d.feed(std::string(kMaxLineBytes + 10, 'x'));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_TRUE(std::holds_alternative<DecodeError>(out[0]));
  out = d.feed("yyy\n" + encode(Bye{"ok"}));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_TRUE(std::holds_alternative<Message>(out[0]));
}

// --- follower session -------------------------------------------------------

constexpr const char* kStarted = "2026-01-01T00:00:00Z";

FollowerSession wall_session() {
  FollowerSession s(scenario::default_config(Kind::kWallTouch), kStarted);
  EXPECT_EQ(s.receive(Hello{kSpecVersion, "leader"}).size(), 1u);
  return s;
}

TEST(Follower, HandshakeAnswersHello) {
  FollowerSession s(scenario::default_config(Kind::kWallTouch), kStarted);
  const auto out = s.receive(Hello{kSpecVersion, "leader"});
  ASSERT_EQ(out.size(), 1u);
  const auto* h = std::get_if<Hello>(&out[0]);
  ASSERT_NE(h, nullptr);
  EXPECT_EQ(h->role, "follower");
  EXPECT_TRUE(s.handshake_done());
}

TEST(Follower, CommandBeforeHelloClosesWithBye) {
  FollowerSession s(scenario::default_config(Kind::kWallTouch), kStarted);
  const auto out = s.receive(Command{});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_TRUE(std::holds_alternative<Bye>(out[0]));
  EXPECT_TRUE(s.closed());
  EXPECT_EQ(s.close_reason().rfind("protocol-violation", 0), 0u);
}

TEST(Follower, VersionMismatchClosesWithBye) {
  FollowerSession s(scenario::default_config(Kind::kWallTouch), kStarted);
  const auto out = s.receive(Hello{2, "leader"});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_TRUE(std::holds_alternative<Bye>(out[0]));
  EXPECT_EQ(s.close_reason().rfind("version-mismatch", 0), 0u);
}

TEST(Follower, StaleSeqIsDroppedWithoutEffect) {
  FollowerSession s = wall_session();
  s.receive(Command{7, 0.0, {0, 1, 0, 0, 0, 0}, StiffnessMode::kFree});
  s.advance();
  const Vec6 before = s.state().plant.commanded_pose;
  EXPECT_TRUE(s.receive(Command{5, 0.02, {0, 8, 0, 0, 0, 0}, StiffnessMode::kFullLock}).empty());
  EXPECT_TRUE(s.receive(Command{7, 0.02, {0, 8, 0, 0, 0, 0}, StiffnessMode::kFullLock}).empty());
  EXPECT_EQ(s.dropped_commands(), 2u);
  s.advance();
  EXPECT_EQ(s.state().plant.commanded_pose, before);
  EXPECT_EQ(s.state().lever, StiffnessMode::kFree);
  EXPECT_FALSE(s.closed());
}

TEST(Follower, TimeGoingBackwardsIsAViolation) {
  FollowerSession s = wall_session();
  s.receive(Command{1, 0.5, {}, StiffnessMode::kFree});
  const auto out = s.receive(Command{2, 0.4, {}, StiffnessMode::kFree});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_TRUE(s.closed());
}

TEST(Follower, LeverReachesFullLockWithinCarrierTime) {
  FollowerSession s = wall_session();
  for (int i = 0; i < 5; ++i) s.advance();
  const double received = s.time();
  s.receive(Command{1, received, {}, StiffnessMode::kFullLock});
  while (s.state().lock.mode != StiffnessMode::kFullLock || !s.state().lock.at_detent()) {
    s.advance();
    ASSERT_LT(s.time(), received + 1.0);
  }
  EXPECT_LE(s.time() - received, 0.25 + control::kCommandPeriod + 1e-9);
}

TEST(Follower, HoldsLastPoseWithoutCommands) {
  FollowerSession s = wall_session();
  const Vec6 target{0, 2, 0, 0, 0, 0};
  s.receive(Command{1, 0.0, target, StiffnessMode::kFree});
  for (int i = 0; i < 25; ++i) s.advance();
  const Vec6 settled = s.state().plant.tcp_pose;
  for (int i = 0; i < 50; ++i) s.advance();
  EXPECT_EQ(s.state().plant.commanded_pose, target);
  EXPECT_NEAR(s.state().plant.tcp_pose[1], 2.0, 0.05);
  EXPECT_NEAR(s.state().plant.tcp_pose[1], settled[1], 0.05);
}

TEST(Follower, FutureCommandsWaitForTheirWindow) {
  FollowerSession s = wall_session();
  s.receive(Command{1, 0.0, {0, 1, 0, 0, 0, 0}, StiffnessMode::kFree});
  s.receive(Command{2, 0.06, {0, 2, 0, 0, 0, 0}, StiffnessMode::kFree});
  EXPECT_TRUE(s.has_command_for_next_window());
  s.advance();
  EXPECT_EQ(s.state().plant.commanded_pose[1], 1.0);
  s.advance();
  s.advance();
  EXPECT_EQ(s.state().plant.commanded_pose[1], 1.0);
  EXPECT_FALSE(s.has_command_for_next_window() && s.window() > 3);
  s.advance();
  EXPECT_EQ(s.state().plant.commanded_pose[1], 2.0);
}

TEST(Follower, FeedbackEvery20msCarriesTheMeasuredWrench) {
  FollowerSession s = wall_session();
  s.receive(Command{1, 0.0, {0, 14, 0, 0, 0, 0}, StiffnessMode::kFree});
  double last_t = 0.0;
  std::uint64_t last_seq = 0;
  bool touched = false;
  for (int i = 0; i < 100; ++i) {
    const Feedback f = s.advance();
    EXPECT_NEAR(f.t - last_t, 0.02, 1e-9);
    EXPECT_GT(f.seq, last_seq);
    EXPECT_EQ(f.wrench, s.state().plant.measured_wrench);
    EXPECT_EQ(f.t, s.state().plant.time());
    touched = touched || f.wrench[1] != 0.0;
    last_t = f.t;
    last_seq = f.seq;
  }
  EXPECT_TRUE(touched);
}

TEST(Follower, SessionLogReplaysIdentically) {
  const scenario::ScenarioConfig c = scenario::default_config(Kind::kDoorHandle);
  FollowerSession s(c, kStarted);
  s.receive(Hello{kSpecVersion, "leader"});
  const scenario::CommandSource script = scenario::door_operator_script(c);
  std::uint64_t seq = 0;
  StiffnessMode lever = StiffnessMode::kFree;
  while (!s.terminal()) {
    const scenario::WindowCommand w = script(s.state(), s.window());
    if (w.lever) lever = *w.lever;
    s.receive(Command{++seq, s.time(), w.pose.value_or(s.state().plant.commanded_pose), lever});
    s.advance();
  }
  EXPECT_EQ(s.state().status.outcome, scenario::Outcome::kSuccess);
  const episode::EpisodeLog replayed = episode::replay(s.log(), c);
  EXPECT_EQ(replayed, s.log());
}

TEST(Frame, ReportsKindSpecificProgress) {
  FollowerSession peg(scenario::default_config(Kind::kPegInHole), kStarted);
  EXPECT_TRUE(peg.frame().scenario.insertion_depth.has_value());
  EXPECT_FALSE(peg.frame().scenario.handle_angle.has_value());
  FollowerSession door(scenario::default_config(Kind::kDoorHandle), kStarted);
  EXPECT_TRUE(door.frame().scenario.handle_angle.has_value());
  const StateFrame f = wall_session().frame();
  EXPECT_EQ(f.deflection, Vec6{});
  EXPECT_EQ(f.mode, StiffnessMode::kFree);
}

}  // namespace
}  // namespace claw::teleop
