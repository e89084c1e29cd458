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

// Leaf-spring loop design analysis.
//
// The compliant module uses two looped convex-tape leaf springs. Each loop is
// approximated by two semicircular arcs of radius R joined by straight
// segments. Points A/A' are the rotary joint axes, C/C' the clamp points on
// the finger unit, B the arc/straight boundary nearest the joint.
//
//   loop width      D     = (L_total + d) / 2 - pi R + 2 R
//   free segment    L_bc  = (L_total - L_clamp) / 2 - L_joint_arm
//   max travel      X_max = sqrt(L_bc^2 - 4 R^2) - X_0
//   allowable       X_allow = 0.8 X_max
//
// X_0 is taken as the unloaded X coordinate of clamp point C measured in the
// joint-axis frame. The reference point is ambiguous, so treat X_0 as a
// calibration handle rather than a measured quantity.
//
// All lengths are millimeters. Functions are pure and thread-safe.

#ifndef CLAW_GEOMETRY_HPP_
#define CLAW_GEOMETRY_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace claw::geometry {

inline constexpr double kAllowableFraction = 0.8;

struct LeafSpringSpec {
  double R = 15.0;            // arc radius
  double L_total = 180.0;     // total spring length L_a-a'
  double d = 0.0;             // inter-axial joint distance
  double L_clamp = 20.0;      // clamped section L_c-c'
  double L_joint_arm = 5.0;   // joint-to-arc length L_a-b
  double X_0 = 0.0;           // unloaded position of clamp point C
};

struct LoopGeometry {
  double D = 0.0;
  double L_bc = 0.0;
  double X_max = 0.0;
  double X_allow = 0.0;
};

// Reference design point: R = 15, L_total = 180, D = 90.
inline constexpr double kDesignR = 15.0;
inline constexpr double kDesignLTotal = 180.0;
inline constexpr double kDesignD = 90.0;
inline constexpr double kDesignXMax = 47.5;  // gives the 38 mm allowable travel

// Default spec: d inverted from D = 90; L_clamp, L_joint_arm and X_0 are not
// measured values and are chosen so that X_max = 47.5 mm exactly.
LeafSpringSpec default_spec();

// Field names whose default values are placeholders rather than measurements.
const std::vector<std::string>& placeholder_fields();

double compute_loop_width(const LeafSpringSpec& spec);
double compute_joint_distance(double D, double L_total, double R);
double compute_free_length(const LeafSpringSpec& spec);
double compute_x_max(const LeafSpringSpec& spec);
double allowable_displacement(double x_max);

// Runs every check and returns the derived loop. Throws Error(kInvalidSpec).
LoopGeometry analyze(const LeafSpringSpec& spec);

// Validates without throwing; returns the first violated rule, if any.
std::optional<std::string> check_spec(const LeafSpringSpec& spec);

struct FieldRange {
  double min = 0.0;
  double step = 1.0;
  double max = 0.0;
};

// Per-field sweep ranges; unset fields stay at the base spec's value.
struct SweepRanges {
  std::optional<FieldRange> R, L_total, d, L_clamp, L_joint_arm, X_0;
};

struct SweepConstraints {
  std::optional<double> max_D;
  std::optional<double> min_X_allow;
};

struct DesignPoint {
  LeafSpringSpec spec;
  LoopGeometry loop;
};

// Absolute slack applied when comparing against sweep constraints, so that a
// design sitting exactly on a bound survives floating-point round-off.
inline constexpr double kConstraintSlack = 1e-9;

// Grid sweep: every valid grid point satisfying the constraints, ordered by
// X_allow descending (ties keep grid order).
std::vector<DesignPoint> sweep_designs(const LeafSpringSpec& base,
                                       const SweepRanges& ranges,
                                       const SweepConstraints& constraints);

// Parses "R=10:5:20,L_total=160:10:200" (min:step:max per field). Field
// names: R, L_total, d, L_clamp, L_joint_arm, X0.
SweepRanges parse_sweep_ranges(std::string_view text);

// CSV header used by `claw design`.
inline constexpr std::string_view kDesignCsvHeader =
    "R_mm,L_total_mm,d_mm,L_clamp_mm,L_joint_arm_mm,X0_mm,D_mm,L_bc_mm,"
    "X_max_mm,X_allow_mm";

std::string design_csv_row(const DesignPoint& point);

}  // namespace claw::geometry

#endif  // CLAW_GEOMETRY_HPP_
