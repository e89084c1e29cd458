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

#include "claw/scenario.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace claw::scenario {
namespace {

using lock::StiffnessMode;

bool has_event(const std::vector<std::string>& events, const std::string& name) {
  return std::find(events.begin(), events.end(), name) != events.end();
}

// Largest |offset| along one axis such that every grid offset of smaller
// magnitude on that side also succeeded.
double tolerance(const std::vector<SweepPoint>& points, int axis, double sign) {
  std::map<double, bool> ok;
  for (const SweepPoint& p : points) {
    const double along = axis == 0 ? p.offset_x : p.offset_y;
    const double across = axis == 0 ? p.offset_y : p.offset_x;
    if (across != 0.0 || along * sign < 0.0) continue;
    ok[std::abs(along)] = p.outcome == Outcome::kSuccess;
  }
  double best = -1.0;
  for (const auto& [mag, success] : ok) {
    if (!success) break;
    best = mag;
  }
  return best;
}

std::vector<SweepPoint> run_sweep(const ScenarioConfig& base, SweepGripper g) {
  return misalignment_sweep(base, g, axis_offset_grid(5.0, 0.25));
}

TEST(PegContact, CenteredPegIsFree) {
  const PegGeometry g;
  EXPECT_EQ(peg_contact_wrench({0, 0, -5, 0, 0, 0}, g), Vec6{});
  EXPECT_EQ(peg_contact_wrench({0.05, -0.05, -5, 0, 0, 0}, g), Vec6{});
  EXPECT_EQ(peg_contact_wrench({3, 3, 1, 0, 0, 0}, g), Vec6{});
}

TEST(PegContact, RimContactIsPurelyVertical) {
  const PegGeometry g;
  const ContactParams c;
  // Offset beyond clearance + chamfer: the flat rim carries the peg.
  const Vec6 w = peg_contact_wrench({2.0, 0, -0.01, 0, 0, 0}, g, c);
  EXPECT_EQ(w[0], 0.0);
  EXPECT_EQ(w[1], 0.0);
  EXPECT_NEAR(w[2], c.stiffness * 0.01, 1e-9);
}

TEST(PegContact, ChamferPushesTowardCenter) {
  const PegGeometry g;
  // Corner inside the chamfer band at 0.2 mm depth.
  for (double o : {0.95, 1.0, 1.05}) {
    const Vec6 pos = peg_contact_wrench({o, 0, -0.2, 0, 0, 0}, g);
    const Vec6 neg = peg_contact_wrench({-o, 0, -0.2, 0, 0, 0}, g);
    EXPECT_LT(pos[0], 0.0) << o;
    EXPECT_GT(neg[0], 0.0) << o;
    EXPECT_NEAR(pos[0], -neg[0], 1e-12);
    EXPECT_GT(pos[2], 0.0);
    const Vec6 along_y = peg_contact_wrench({0, o, -0.2, 0, 0, 0}, g);
    EXPECT_LT(along_y[1], 0.0);
  }
}

TEST(PegContact, BottomStopsThePeg) {
  const PegGeometry g;
  const ContactParams c;
  const Vec6 w = peg_contact_wrench({0, 0, -g.hole_depth - 0.1, 0, 0, 0}, g, c);
  EXPECT_NEAR(w[2], c.stiffness * 0.1, 1e-9);
}

TEST(PegContact, RejectsDegenerateGeometry) {
  PegGeometry g;
  g.hole_clearance = 0.0;
  try {
    peg_contact_wrench({}, g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kGeometryViolation);
  }
  g = PegGeometry{};
  g.peg_width = -1.0;
  EXPECT_THROW(peg_contact_wrench({}, g), Error);
}

TEST(DoorContact, LinearHandleSpring) {
  const DoorGeometry g;
  EXPECT_EQ(door_contact_wrench({}, 0.0, g, false), Vec6{});
  EXPECT_NEAR(door_contact_wrench({}, 45.0, g, false)[5], 0.9, 1e-12);
}

TEST(DoorContact, FaceSoftensOnceUnlatched) {
  const DoorGeometry g;
  const ContactParams c;
  const Vec6 latched = door_contact_wrench({0, 0, -2, 0, 0, 0}, 0.0, g, false, c);
  const Vec6 open = door_contact_wrench({0, 0, -2, 0, 0, 0}, 0.0, g, true, c);
  EXPECT_NEAR(latched[2], 2.0 * c.stiffness, 1e-9);
  EXPECT_NEAR(open[2], 2.0 * g.door_closer_stiffness, 1e-12);
}

TEST(WallContact, OnlyBeyondTheWall) {
  const WallGeometry g;
  EXPECT_EQ(wall_contact_wrench({0, 9.9, 0, 0, 0, 0}, g), Vec6{});
  EXPECT_LT(wall_contact_wrench({0, 10.5, 0, 0, 0, 0}, g)[1], 0.0);
}

TEST(Config, ValidationNamesTheField) {
  auto expect_field = [](const ScenarioConfig& c, const std::string& field) {
    try {
      validate(c);
      ADD_FAILURE() << "accepted invalid " << field;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kInvalidConfig);
      EXPECT_EQ(e.field(), field);
    }
  };
  ScenarioConfig c = default_config(Kind::kPegInHole);
  c.peg.hole_clearance = 0.0;
  expect_field(c, "geometry.hole_clearance");
  c = default_config(Kind::kDoorHandle);
  c.door.latch_angle = 95.0;
  expect_field(c, "geometry.latch_angle");
  c = default_config(Kind::kPegInHole);
  c.mode_schedule = {{0.0, StiffnessMode::kFree}, {0.0, StiffnessMode::kFullLock}};
  expect_field(c, "mode_schedule[1].t");
  c = default_config(Kind::kPegInHole);
  c.substeps = 0;
  expect_field(c, "substeps");
  for (Kind k : {Kind::kPegInHole, Kind::kDoorHandle, Kind::kWallTouch}) {
    EXPECT_NO_THROW(validate(default_config(k)));
  }
}

TEST(Config, MinimumSupportedClearance) {
  ScenarioConfig c = default_config(Kind::kPegInHole);
  c.peg.hole_clearance = 0.05;
  EXPECT_NO_THROW(validate(c));
}

TEST(Peg, ZeroMisalignmentSucceedsForEveryGripper) {
  const ScenarioConfig base = default_config(Kind::kPegInHole);
  for (SweepGripper g : kAllSweepGrippers) {
    const auto pts = misalignment_sweep(base, g, {{0.0, 0.0}});
    ASSERT_EQ(pts.size(), 1u);
    EXPECT_EQ(pts[0].outcome, Outcome::kSuccess) << sweep_gripper_name(g);
    EXPECT_GE(pts[0].depth, base.peg.hole_depth);
  }
}

TEST(Peg, RimJamTimesOutAtSixtySeconds) {
  ScenarioConfig c = sweep_config(default_config(Kind::kPegInHole), SweepGripper::kClawFree);
  c.initial_misalignment[0] = 3.0;
  const Scenario sc(c);
  const RunResult r = run_scenario(sc, peg_insertion_script(c));
  EXPECT_EQ(r.final_state.status.outcome, Outcome::kTimeout);
  EXPECT_NEAR(r.final_state.status.elapsed, 60.0, 1e-9);
  EXPECT_LT(r.final_state.status.insertion_depth, 0.5);
}

TEST(Status, TerminalOutcomeIsSticky) {
  ScenarioConfig c = sweep_config(default_config(Kind::kPegInHole), SweepGripper::kRigid);
  c.initial_misalignment[1] = 3.0;
  const Scenario sc(c);
  RunResult r = run_scenario(sc, peg_insertion_script(c));
  ASSERT_EQ(r.final_state.status.outcome, Outcome::kEstop);
  ScenarioState s = r.final_state;
  const double elapsed = s.status.elapsed;
  for (int i = 0; i < 50; ++i) sc.step(s, Vec6{0, 0, -50, 0, 0, 0}, StiffnessMode::kFullLock);
  EXPECT_EQ(s.status.outcome, Outcome::kEstop);
  EXPECT_EQ(s.status.elapsed, elapsed);
  EXPECT_EQ(s.plant.tick, r.final_state.plant.tick);
}

TEST(Status, OutcomeOnlyLeavesRunningOnce) {
  ScenarioConfig c = sweep_config(default_config(Kind::kPegInHole), SweepGripper::kClawFree);
  c.initial_misalignment[0] = 0.75;
  const Scenario sc(c);
  int transitions = 0;
  Outcome last = Outcome::kRunning;
  run_scenario(sc, peg_insertion_script(c),
               [&](const ScenarioState& s, std::uint64_t, const WindowCommand&) {
                 if (s.status.outcome != last) ++transitions;
                 last = s.status.outcome;
                 if (last != Outcome::kRunning) EXPECT_EQ(transitions, 1);
               });
}

TEST(Peg, HalvingTheTimeStepKeepsDepth) {
  const ScenarioConfig base = default_config(Kind::kPegInHole);
  for (SweepGripper g : kAllSweepGrippers) {
    for (double o : {0.0, 0.5, 1.0, 2.0}) {
      const auto a = misalignment_sweep(base, g, {{o, 0.0}});
      ScenarioConfig fine = base;
      fine.substeps = 2;
      const auto b = misalignment_sweep(fine, g, {{o, 0.0}});
      EXPECT_LT(std::abs(a[0].depth - b[0].depth), 0.1)
          << sweep_gripper_name(g) << " offset " << o;
      EXPECT_EQ(a[0].outcome, b[0].outcome) << sweep_gripper_name(g) << " offset " << o;
    }
  }
}

TEST(Sweep, ClawFreeRegionIsSymmetric) {
  const auto pts = run_sweep(default_config(Kind::kPegInHole), SweepGripper::kClawFree);
  for (int axis = 0; axis < 2; ++axis) {
    EXPECT_LE(std::abs(tolerance(pts, axis, 1.0) - tolerance(pts, axis, -1.0)), 0.25 + 1e-9);
  }
}

TEST(Sweep, RigidSuccessIsStrictSubsetOfClawFree) {
  const ScenarioConfig base = default_config(Kind::kPegInHole);
  const auto rigid = run_sweep(base, SweepGripper::kRigid);
  const auto claw = run_sweep(base, SweepGripper::kClawFree);
  ASSERT_EQ(rigid.size(), claw.size());
  int strict = 0;
  for (std::size_t i = 0; i < rigid.size(); ++i) {
    if (rigid[i].outcome == Outcome::kSuccess) {
      EXPECT_EQ(claw[i].outcome, Outcome::kSuccess)
          << rigid[i].offset_x << "," << rigid[i].offset_y;
    } else if (claw[i].outcome == Outcome::kSuccess) {
      ++strict;
    }
  }
  EXPECT_GT(strict, 0);
}

class ComplianceOrder : public ::testing::TestWithParam<double> {};

TEST_P(ComplianceOrder, ClawFreeBeatsFinRayBeatsRigid) {
  ScenarioConfig base = default_config(Kind::kPegInHole);
  base.peg.hole_clearance = GetParam();
  const auto claw = run_sweep(base, SweepGripper::kClawFree);
  const auto finray = run_sweep(base, SweepGripper::kFinRay);
  const auto rigid = run_sweep(base, SweepGripper::kRigid);
  for (double sign : {1.0, -1.0}) {
    // The Fin Ray baseline is compliant along y only.
    const double c = tolerance(claw, 1, sign);
    const double f = tolerance(finray, 1, sign);
    const double r = tolerance(rigid, 1, sign);
    EXPECT_GE(c, f);
    EXPECT_GE(f, r);
    EXPECT_GT(c, r);
    EXPECT_GT(tolerance(claw, 0, sign), tolerance(rigid, 0, sign));
    EXPECT_EQ(tolerance(finray, 0, sign), tolerance(rigid, 0, sign));
  }
}

INSTANTIATE_TEST_SUITE_P(Clearances, ComplianceOrder, ::testing::Values(0.05, 0.1, 0.2));

TEST(Door, VariableStiffnessScriptSucceeds) {
  const ScenarioConfig c = default_config(Kind::kDoorHandle);
  const Scenario sc(c);
  std::vector<std::string> events;
  const RunResult r = run_scenario(
      sc, door_operator_script(c),
      [&](const ScenarioState& s, std::uint64_t, const WindowCommand&) {
        events.insert(events.end(), s.events.begin(), s.events.end());
      });
  events.insert(events.end(), r.final_state.events.begin(), r.final_state.events.end());
  EXPECT_EQ(r.final_state.status.outcome, Outcome::kSuccess);
  EXPECT_TRUE(r.final_state.status.latch_released);
  EXPECT_LE(r.final_state.status.handle_angle, c.door.success_angle);
  EXPECT_TRUE(has_event(events, "latch_released"));
  EXPECT_TRUE(has_event(events, "handle_released"));
  EXPECT_TRUE(has_event(events, "mode:free"));
}

TEST(Door, LatchFlagIsSticky) {
  const ScenarioConfig c = default_config(Kind::kDoorHandle);
  const Scenario sc(c);
  bool seen = false;
  run_scenario(sc, door_operator_script(c),
               [&](const ScenarioState& s, std::uint64_t, const WindowCommand&) {
                 if (seen) EXPECT_TRUE(s.status.latch_released);
                 seen = seen || s.status.latch_released;
               });
  EXPECT_TRUE(seen);
}

TEST(Door, FreeModeAloneTripsTheEstop) {
  const ScenarioConfig c = default_config(Kind::kDoorHandle);
  const Scenario sc(c);
  // Record the operator's pose stream, then replay it with the lever in Free.
  std::vector<std::optional<Vec6>> poses;
  run_scenario(sc, door_operator_script(c),
               [&](const ScenarioState&, std::uint64_t, const WindowCommand& cmd) {
                 poses.push_back(cmd.pose);
               });
  ScenarioState s = sc.initial_state();
  for (std::size_t w = 0; w < poses.size() && !is_terminal(s.status.outcome); ++w) {
    for (int k = 0; k < 10 && !is_terminal(s.status.outcome); ++k) {
      sc.step(s, k == 0 ? poses[w] : std::nullopt, StiffnessMode::kFree);
    }
  }
  EXPECT_EQ(s.status.outcome, Outcome::kEstop);
  EXPECT_FALSE(s.status.latch_released);
}

TEST(Wall, CompliantContactStaysBelowThreshold) {
  const ScenarioConfig c = default_config(Kind::kWallTouch);
  const Scenario sc(c);
  const RunResult r = run_scenario(sc, wall_approach_script(c));
  EXPECT_GT(r.final_state.peak_force, 0.0);
  EXPECT_NE(r.final_state.status.outcome, Outcome::kEstop);
}

TEST(Run, DeterministicAcrossRuns) {
  ScenarioConfig c = sweep_config(default_config(Kind::kPegInHole), SweepGripper::kClawHalf);
  c.initial_misalignment[0] = 0.8;
  const Scenario sc(c);
  const RunResult a = run_scenario(sc, peg_insertion_script(c));
  const RunResult b = run_scenario(sc, peg_insertion_script(c));
  EXPECT_EQ(a.ticks, b.ticks);
  EXPECT_EQ(a.final_state.plant.tcp_pose, b.final_state.plant.tcp_pose);
  EXPECT_EQ(a.final_state.raw_deflection, b.final_state.raw_deflection);
}

TEST(Sweep, GridOrderAndCsv) {
  const auto grid = axis_offset_grid(0.5, 0.25);
  ASSERT_EQ(grid.size(), 10u);
  EXPECT_EQ(grid.front(), std::make_pair(-0.5, 0.0));
  EXPECT_EQ(grid[5], std::make_pair(0.0, -0.5));
  EXPECT_THROW(axis_offset_grid(1.0, 0.0), Error);
  SweepPoint p;
  p.offset_x = 0.25;
  p.outcome = Outcome::kSuccess;
  p.depth = 10;
  EXPECT_EQ(sweep_csv_row(p), "0.25,0,claw_free,success,10,0,0");
}

}  // namespace
}  // namespace claw::scenario
