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

#include "claw/wrist.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

namespace claw::wrist {
namespace {

using M = StiffnessMode;

double ratio(Axis a, double d, M num, M den, const StiffnessParams& p) {
  return std::abs(axis_force(a, d, num, p)) / std::abs(axis_force(a, d, den, p));
}

Deflection6 on_axis(Axis a, double d) {
  Deflection6 v{};
  v[index(a)] = d;
  return v;
}

TEST(Reaction, ZeroDeflectionIsZeroWrench) {
  const StiffnessParams p = default_params();
  for (M m : lock::kAllModes) {
    for (double w : reaction_wrench({}, m, p)) EXPECT_EQ(w, 0.0);
  }
}

TEST(Reaction, FreeYReachesBaseScale) {
  const StiffnessParams p = default_params();
  // 0.3 * 15 + (0.5 / 3375) * 15^3 = 5.
  EXPECT_NEAR(reaction_wrench(on_axis(Axis::kY, 15), M::kFree, p)[1], -5.0, 1e-12);
}

TEST(Reaction, OpposesDeflection) {
  const StiffnessParams p = default_params();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-60, 60);
  for (int i = 0; i < 2000; ++i) {
    Deflection6 d{};
    for (double& x : d) x = u(rng);
    for (M m : lock::kAllModes) {
      const Wrench6 w = reaction_wrench(d, m, p);
      for (std::size_t k = 0; k < 6; ++k) {
        if (d[k] > 0) EXPECT_LT(w[k], 0.0);
        if (d[k] < 0) EXPECT_GT(w[k], 0.0);
      }
    }
  }
}

TEST(Reaction, ReferenceRatiosWithDefaults) {
  const StiffnessParams p = default_params();
  EXPECT_NEAR(ratio(Axis::kY, 15, M::kFullLock, M::kFree, p), 2.0, 0.3);
  EXPECT_NEAR(ratio(Axis::kYaw, 30, M::kFullLock, M::kFree, p), 3.0, 0.45);
  EXPECT_NEAR(ratio(Axis::kYaw, 30, M::kHalfLock, M::kFree, p), 2.0, 0.3);
}

TEST(Envelope, ClampsAtTableBounds) {
  const DeformationEnvelope env;
  auto r = apply_envelope(on_axis(Axis::kX, 50), M::kFree, env);
  EXPECT_EQ(r.clamped[0], 40.0);
  EXPECT_EQ(r.at_limit, std::bitset<6>{0b000001});
  r = apply_envelope(on_axis(Axis::kZ, -15), M::kFree, env);
  EXPECT_EQ(r.clamped[2], -10.0);
  EXPECT_TRUE(r.at_limit.test(2));
  r = apply_envelope(on_axis(Axis::kZ, 25), M::kFree, env);
  EXPECT_EQ(r.clamped[2], 20.0);
  r = apply_envelope({}, M::kFullLock, env);
  EXPECT_TRUE(r.at_limit.none());
  for (double v : r.clamped) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(apply_envelope(on_axis(Axis::kYaw, 50), M::kFree, env).clamped[5], 45.0);
  EXPECT_EQ(apply_envelope(on_axis(Axis::kYaw, 50), M::kHalfLock, env).clamped[5], 30.0);
  EXPECT_EQ(apply_envelope(on_axis(Axis::kYaw, -50), M::kFullLock, env).clamped[5], -30.0);
  EXPECT_EQ(apply_envelope(on_axis(Axis::kPitch, 16), M::kFree, env).clamped[4], 15.0);
}

TEST(Envelope, BarrierStiffensBeyondBounds) {
  const StiffnessParams p = default_params();
  const double at = axis_force(Axis::kX, 40, M::kFree, p);
  const double past = axis_force(Axis::kX, 41, M::kFree, p);
  EXPECT_NEAR(past - at, -p.barrier_gain, 1e-9);
}

TEST(Properties, ModeOrdering) {
  const StiffnessParams p = default_params();
  for (Axis a : {Axis::kX, Axis::kY, Axis::kYaw}) {
    const double bound = p.envelope.bounds(a, M::kFullLock).second;
    for (int i = 1; i <= 100; ++i) {
      const double d = bound * i / 100.0;
      const double f = std::abs(axis_force(a, d, M::kFree, p));
      const double h = std::abs(axis_force(a, d, M::kHalfLock, p));
      const double l = std::abs(axis_force(a, d, M::kFullLock, p));
      EXPECT_GE(l, h);
      EXPECT_GE(h, f);
      EXPECT_GT(l, f);
    }
  }
}

TEST(Properties, HalfLockAnisotropy) {
  const StiffnessParams p = default_params();
  for (int i = -40; i <= 40; ++i) {
    if (i == 0) continue;
    const double d = i;
    EXPECT_GT(std::abs(axis_force(Axis::kX, d, M::kHalfLock, p)),
              std::abs(axis_force(Axis::kX, d, M::kFree, p)));
    EXPECT_EQ(axis_force(Axis::kY, d, M::kHalfLock, p),
              axis_force(Axis::kY, d, M::kFree, p));
  }
}

TEST(Properties, ZBitwiseModeInvariant) {
  const StiffnessParams p = calibrate(reference_anchors());
  for (int i = -150; i <= 250; ++i) {
    const double d = i * 0.1;
    const double f = axis_force(Axis::kZ, d, M::kFree, p);
    for (M m : {M::kHalfLock, M::kFullLock}) {
      const double g = axis_force(Axis::kZ, d, m, p);
      EXPECT_EQ(std::memcmp(&f, &g, sizeof f), 0) << d;
    }
  }
}

TEST(Properties, OddSymmetryExceptZ) {
  const StiffnessParams p = default_params();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 50);
  for (int i = 0; i < 500; ++i) {
    const double d = u(rng);
    for (Axis a : {Axis::kX, Axis::kY, Axis::kRoll, Axis::kPitch, Axis::kYaw}) {
      for (M m : lock::kAllModes) {
        EXPECT_EQ(axis_force(a, -d, m, p), -axis_force(a, d, m, p));
      }
    }
  }
  EXPECT_NE(axis_force(Axis::kZ, -5, M::kFree, p), -axis_force(Axis::kZ, 5, M::kFree, p));
}

// Line integral of the wrench along a closed polygon. Each axis force is a
// cubic in the path parameter on a straight segment, so Simpson's rule is
// exact once segments are split where z changes sign.
double loop_work(const std::vector<Deflection6>& pts, M mode, const StiffnessParams& p) {
  auto segment = [&](const Deflection6& a, const Deflection6& b) {
    auto at = [&](double s) {
      Deflection6 q;
      for (std::size_t k = 0; k < 6; ++k) q[k] = a[k] + s * (b[k] - a[k]);
      return reaction_wrench(q, mode, p);
    };
    const Wrench6 w0 = at(0.0), wm = at(0.5), w1 = at(1.0);
    double work = 0;
    for (std::size_t k = 0; k < 6; ++k) {
      work += (w0[k] + 4 * wm[k] + w1[k]) / 6.0 * (b[k] - a[k]);
    }
    return work;
  };
  double total = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Deflection6& a = pts[i];
    const Deflection6& b = pts[(i + 1) % pts.size()];
    if ((a[2] < 0) != (b[2] < 0) && a[2] != b[2]) {
      const double s = a[2] / (a[2] - b[2]);
      Deflection6 mid;
      for (std::size_t k = 0; k < 6; ++k) mid[k] = a[k] + s * (b[k] - a[k]);
      mid[2] = 0.0;
      total += segment(a, mid) + segment(mid, b);
    } else {
      total += segment(a, b);
    }
  }
  return total;
}

TEST(Properties, PassivityOnRandomClosedLoops) {
  const StiffnessParams p = default_params();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> lat(-38, 38), z(-9, 19), rp(-14, 14), yaw(-29, 29);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Deflection6> pts(3 + trial % 5);
    for (auto& q : pts) q = {lat(rng), lat(rng), z(rng), rp(rng), rp(rng), yaw(rng)};
    for (M m : lock::kAllModes) EXPECT_NEAR(loop_work(pts, m, p), 0.0, 1e-6);
  }
}

TEST(Properties, ForceIsNegativeEnergyGradient) {
  const StiffnessParams p = calibrate(reference_anchors());
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 300; ++trial) {
    Deflection6 d = {45 * u(rng), 45 * u(rng), 15 + 10 * u(rng),
                     17 * u(rng), 17 * u(rng), 50 * u(rng)};
    for (M m : lock::kAllModes) {
      const Wrench6 w = reaction_wrench(d, m, p);
      for (std::size_t k = 0; k < 6; ++k) {
        const double h = 1e-4 * std::max(1.0, std::abs(d[k]));
        // Skip the C1 kinks: envelope bounds and the Z compression/extension
        // switch.
        const auto [lo_b, hi_b] = p.envelope.bounds(kAllAxes[k], m);
        if (std::abs(d[k] - lo_b) < 2 * h || std::abs(d[k] - hi_b) < 2 * h ||
            (k == 2 && std::abs(d[k]) < 2 * h)) {
          continue;
        }
        Deflection6 hi = d, lo = d;
        hi[k] += h;
        lo[k] -= h;
        const double grad = (stored_energy(hi, m, p) - stored_energy(lo, m, p)) / (2 * h);
        EXPECT_NEAR(-grad, w[k], 1e-4 * std::max(1e-3, std::abs(w[k])))
            << "axis " << k << " d=" << d[k];
      }
    }
  }
}

TEST(Calibrate, EmptyAnchorsKeepDefaults) {
  const StiffnessParams a = calibrate({});
  const StiffnessParams b = default_params();
  EXPECT_EQ(std::memcmp(&a.coeffs, &b.coeffs, sizeof a.coeffs), 0);
}

TEST(Calibrate, ReferenceAnchorSetReproducesRatios) {
  const StiffnessParams p = calibrate(reference_anchors());
  EXPECT_NEAR(ratio(Axis::kY, 15, M::kFullLock, M::kFree, p), 2.0, 0.02);
  EXPECT_NEAR(ratio(Axis::kYaw, 30, M::kFullLock, M::kFree, p), 3.0, 0.03);
  EXPECT_NEAR(ratio(Axis::kYaw, 30, M::kHalfLock, M::kFree, p), 2.0, 0.02);
}

TEST(Calibrate, SingleForceAnchor) {
  const StiffnessParams p = calibrate({{Axis::kY, M::kFree, 15.0, AnchorKind::kForce, 5.0}});
  EXPECT_NEAR(reaction_wrench(on_axis(Axis::kY, 15), M::kFree, p)[1], -5.0, 0.05);
  const StiffnessParams q = calibrate({{Axis::kY, M::kFree, 15.0, AnchorKind::kForce, 7.0}});
  EXPECT_NEAR(axis_force(Axis::kY, 15, M::kFree, q), -7.0, 0.07);
  // Locked modes follow the rescaled Free curve.
  EXPECT_NEAR(axis_force(Axis::kY, 15, M::kFullLock, q), -14.0, 0.14);
}

TEST(Calibrate, TwoAnchorsSolveExactCubic) {
  // k1*5 + k3*125 = 2, k1*15 + k3*3375 = 8  ->  k3 = 1/1500, k1 = 0.4 - 25 k3.
  const double k3 = 1.0 / 1500.0;
  const double k1 = 0.4 - 25.0 * k3;
  const StiffnessParams p = calibrate({{Axis::kY, M::kFree, 5.0, AnchorKind::kForce, 2.0},
                                       {Axis::kY, M::kFree, 15.0, AnchorKind::kForce, 8.0}});
  EXPECT_NEAR(p.at(Channel::kY, M::kFree).k1, k1, 1e-9);
  EXPECT_NEAR(p.at(Channel::kY, M::kFree).k3, k3, 1e-12);
}

TEST(Calibrate, BaseScaleScalesEverything) {
  const StiffnessParams p = calibrate({}, 10.0);
  EXPECT_NEAR(axis_force(Axis::kY, 15, M::kFree, p), -10.0, 1e-9);
  EXPECT_NEAR(axis_force(Axis::kYaw, 30, M::kFree, p), -0.6, 1e-9);
}

TEST(Calibrate, InfeasibleAndContradictory) {
  auto code_of = [](const std::vector<Anchor>& anchors) {
    try {
      calibrate(anchors);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kIo;
  };
  // Non-monotone targets cannot be met by a non-negative cubic.
  EXPECT_EQ(code_of({{Axis::kY, M::kFree, 5.0, AnchorKind::kForce, 10.0},
                     {Axis::kY, M::kFree, 10.0, AnchorKind::kForce, 1.0},
                     {Axis::kY, M::kFree, 15.0, AnchorKind::kForce, 10.0}}),
            ErrorCode::kInfeasibleCalibration);
  EXPECT_EQ(code_of({{Axis::kY, M::kFree, 15.0, AnchorKind::kForce, 5.0},
                     {Axis::kY, M::kFree, 15.0, AnchorKind::kForce, 6.0}}),
            ErrorCode::kInfeasibleCalibration);
  EXPECT_EQ(code_of({{Axis::kZ, M::kFullLock, 10.0, AnchorKind::kRatioToFree, 2.0}}),
            ErrorCode::kInfeasibleCalibration);
  EXPECT_EQ(code_of({{Axis::kY, M::kFree, 0.0, AnchorKind::kForce, 5.0}}),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of({{Axis::kY, M::kFree, 50.0, AnchorKind::kForce, 5.0}}),
            ErrorCode::kInvalidArgument);
}

TEST(Baselines, RigidAndFinRay) {
  const GripperModel rigid = rigid_gripper();
  EXPECT_EQ(rigid.reaction(on_axis(Axis::kX, 0.01), M::kFree)[0], -10.0);
  const GripperModel fin = finray_gripper();
  EXPECT_NEAR(fin.reaction(on_axis(Axis::kY, 8.0), M::kFree)[1], -10.0, 1e-12);
  EXPECT_NEAR(fin.reaction(on_axis(Axis::kY, -8.0), M::kFree)[1], 10.0, 1e-12);
  EXPECT_EQ(fin.reaction(on_axis(Axis::kX, 0.01), M::kFree)[0], -10.0);
  double prev = 0;
  for (int i = 1; i <= 400; ++i) {
    const double f = -fin.reaction(on_axis(Axis::kY, i * 0.05), M::kFree)[1];
    EXPECT_GT(f, prev);
    prev = f;
  }
  const GripperModel claw = claw_gripper();
  EXPECT_NEAR(claw.stiffness({}, M::kFree)[1], 0.3, 1e-12);
}

TEST(Characterize, SweepsFromZeroToTheEnvelopeBound) {
  const auto pts = characterize(claw_gripper(), Axis::kY, M::kFree, 8);
  ASSERT_EQ(pts.size(), 9u);
  EXPECT_EQ(pts.front().deflection, 0.0);
  EXPECT_EQ(pts.front().load, 0.0);
  EXPECT_EQ(pts.back().deflection, 40.0);
  for (std::size_t i = 1; i < pts.size(); ++i) EXPECT_GT(pts[i].load, pts[i - 1].load);
  EXPECT_NEAR(pts[3].load, 5.0, 0.05);  // 15 mm
}

TEST(Characterize, FullLockDoublesFreeAtFifteenMillimeters) {
  const auto free = characterize(claw_gripper(), Axis::kY, M::kFree, 40);
  const auto full = characterize(claw_gripper(), Axis::kY, M::kFullLock, 40);
  EXPECT_NEAR(full[15].load / free[15].load, 2.0, 0.3);
}

TEST(Characterize, YawBoundDependsOnMode) {
  EXPECT_EQ(characterize(claw_gripper(), Axis::kYaw, M::kFree, 3).back().deflection, 45.0);
  EXPECT_EQ(characterize(claw_gripper(), Axis::kYaw, M::kHalfLock, 3).back().deflection, 30.0);
}

TEST(Characterize, CsvHasUnitsInTheHeader) {
  const auto pts = characterize(claw_gripper(), Axis::kRoll, M::kHalfLock, 1);
  EXPECT_EQ(characterize_csv(Axis::kRoll, M::kHalfLock, pts).substr(0, 36),
            "deflection_deg,torque_Nm,mode\n0,0,ha");
  EXPECT_EQ(characterize_csv_header(Axis::kZ), "deflection_mm,force_N,mode");
  EXPECT_THROW(characterize(claw_gripper(), Axis::kX, M::kFree, 0), Error);
}

}  // namespace
}  // namespace claw::wrist
