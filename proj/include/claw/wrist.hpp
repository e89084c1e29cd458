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

// Anisotropic 6-DoF wrist compliance.
//
// Each axis is an independent nonlinear spring with restoring term
// -(k1 d + k3 d^3), with coefficients chosen per axis and per stiffness mode.
// Translations are in mm with forces in N; rotations are in degrees with
// torques in N*m. Z uses separate compression (d > 0) and extension (d < 0)
// coefficients. Outside the deformation envelope the spring force is held at
// its boundary value and a linear barrier with slope barrier_gain is added,
// which keeps the model conservative.

#ifndef CLAW_WRIST_HPP_
#define CLAW_WRIST_HPP_

#include <array>
#include <bitset>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "claw/core.hpp"
#include "claw/lockstate.hpp"

namespace claw::wrist {

using lock::StiffnessMode;

// x, y, z [mm], roll, pitch, yaw [deg].
using Deflection6 = Vec6;
// fx, fy, fz [N], tx, ty, tz [N*m].
using Wrench6 = Vec6;

struct DeformationEnvelope {
  double x_max = 40.0;
  double y_max = 40.0;
  double z_comp_max = 20.0;
  double z_ext_max = 10.0;
  double roll_max = 15.0;
  double pitch_max = 15.0;
  double yaw_max_locked = 30.0;
  double yaw_max_free = 45.0;

  // Bounds for one axis as (lower, upper).
  std::pair<double, double> bounds(Axis axis, StiffnessMode mode) const;
};

// Spring channels. Z splits into compression and extension.
enum class Channel { kX = 0, kY, kZComp, kZExt, kRoll, kPitch, kYaw };
inline constexpr std::size_t kNumChannels = 7;

Channel channel_for(Axis axis, double deflection);
std::string_view channel_name(Channel c);

struct SpringCoeffs {
  double k1 = 0.0;
  double k3 = 0.0;

  // Spring term, signed like d; the restoring force is its negative.
  double force(double d) const { return k1 * d + k3 * d * d * d; }
  double stiffness(double d) const { return k1 + 3.0 * k3 * d * d; }
  double energy(double d) const {
    const double d2 = d * d;
    return 0.5 * k1 * d2 + 0.25 * k3 * d2 * d2;
  }
};

struct StiffnessParams {
  // coeffs[channel][mode]
  std::array<std::array<SpringCoeffs, 3>, kNumChannels> coeffs{};
  DeformationEnvelope envelope;
  double barrier_gain = 20.0;           // N/mm beyond the translational envelope
  double rotational_barrier_gain = 0.5;  // N*m/deg beyond the rotational envelope
  // Extra pitch stiffness in the locked modes, as a fraction of the Free
  // coefficients. Zero keeps pitch mode-invariant.
  double pitch_coupling = 0.0;

  const SpringCoeffs& at(Channel c, StiffnessMode m) const;
  SpringCoeffs& at(Channel c, StiffnessMode m);
};

inline constexpr double kDefaultBaseScale = 5.0;        // N
inline constexpr double kBaseScaleDeflection = 15.0;    // mm, Free Y reference

// Default curve shapes: Free Y reaches 5 N at 15 mm, Full-lock Y doubles it,
// Half/Full yaw are 2x/3x of Free, Z and roll/pitch ignore the mode.
StiffnessParams default_params();

// Throws kInvalidArgument naming the first bad coefficient.
void validate(const StiffnessParams& params);

struct EnvelopeResult {
  Deflection6 clamped{};
  std::bitset<6> at_limit;
};

EnvelopeResult apply_envelope(const Deflection6& defl, StiffnessMode mode,
                              const DeformationEnvelope& env);

// Restoring wrench of the wrist at a given deflection. Always defined.
Wrench6 reaction_wrench(const Deflection6& defl, StiffnessMode mode,
                        const StiffnessParams& params);

// Stored elastic energy (N*mm for translation, N*m*deg for rotation); the
// reaction is its negative gradient.
double stored_energy(const Deflection6& defl, StiffnessMode mode,
                     const StiffnessParams& params);

// Per-axis restoring term and its slope, including the barrier.
double axis_force(Axis axis, double d, StiffnessMode mode,
                  const StiffnessParams& params);
double axis_stiffness(Axis axis, double d, StiffnessMode mode,
                      const StiffnessParams& params);

enum class AnchorKind {
  kForce,        // |F(axis, mode, deflection)| = value
  kRatioToFree,  // |F(mode)| / |F(Free)| at deflection = value
  kEqualToFree,  // the whole (axis, mode) curve equals Free
};

struct Anchor {
  Axis axis = Axis::kY;
  StiffnessMode mode = StiffnessMode::kFree;
  double deflection = 0.0;
  AnchorKind kind = AnchorKind::kForce;
  double value = 0.0;
};

// Ratios measured on the hardware: Full Y 2x Free at 15 mm, Full yaw 3x and
// Half yaw 2x Free at 30 deg, Half Y equal to Free, Z equal across modes.
std::vector<Anchor> reference_anchors();

// Fits (k1, k3) per anchored channel/mode, starting from default_params()
// scaled so Free Y gives base_scale newtons at 15 mm. One anchor on a curve
// scales its default shape; two or more are fitted by non-negative least
// squares on relative error. Z stays identical across modes. Throws
// kInfeasibleCalibration when an anchor misses by more than 5% or anchors
// contradict each other, kInvalidArgument for malformed anchors.
StiffnessParams calibrate(const std::vector<Anchor>& anchors,
                          double base_scale = kDefaultBaseScale);

inline constexpr double kCalibrationTolerance = 0.05;

// Comparison grippers.
enum class GripperKind { kClaw, kRigid, kFinRay };

struct GripperModel {
  GripperKind kind = GripperKind::kClaw;
  StiffnessParams params = default_params();
  // Rigid coefficient for every non-compliant axis, N/mm or N*m/deg.
  double rigid_k = 1000.0;
  // Fin Ray lateral (Y) curve: (deflection mm, force N), increasing, from 0.
  std::vector<std::pair<double, double>> finray_curve = {
      {0.0, 0.0}, {2.0, 3.5}, {5.0, 7.0}, {8.0, 10.0}, {15.0, 14.0}};

  Wrench6 reaction(const Deflection6& defl, StiffnessMode mode) const;
  // Slope of each axis's restoring term (diagonal Jacobian of -reaction).
  Vec6 stiffness(const Deflection6& defl, StiffnessMode mode) const;
  bool is_claw() const { return kind == GripperKind::kClaw; }
};

GripperModel rigid_gripper();
GripperModel finray_gripper();
GripperModel claw_gripper(StiffnessParams params = default_params());

// One sample of a single-axis load curve.
struct CurvePoint {
  double deflection = 0.0;  // mm or deg
  double load = 0.0;        // N or N*m needed to hold the deflection
};

// Deflects one axis alone from 0 to the upper envelope bound of the model's
// params in `steps` equal increments (steps + 1 rows). Throws
// Error(kInvalidArgument) for steps < 1.
std::vector<CurvePoint> characterize(const GripperModel& gripper, Axis axis,
                                     StiffnessMode mode, int steps);

// "deflection_mm,force_N,mode" for translations,
// "deflection_deg,torque_Nm,mode" for rotations.
std::string characterize_csv_header(Axis axis);
std::string characterize_csv(Axis axis, StiffnessMode mode,
                             const std::vector<CurvePoint>& points);

}  // namespace claw::wrist

#endif  // CLAW_WRIST_HPP_
