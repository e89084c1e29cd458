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

#include "claw/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "claw/core.hpp"
#include "claw/format.hpp"

namespace claw::geometry {
namespace {

[[noreturn]] void fail(const std::string& msg, const std::string& field = {}) {
  throw Error(ErrorCode::kInvalidSpec, msg, field);
}

double chord(double l_bc, double r) { return std::sqrt(l_bc * l_bc - 4.0 * r * r); }

// Values visited by a min:step:max range. The step count is rounded so that
// accumulated float error does not drop the last grid point.
std::vector<double> grid_values(const FieldRange& range, const char* name) {
  if (!std::isfinite(range.min) || !std::isfinite(range.max) ||
      !std::isfinite(range.step)) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("non-finite sweep range for ") + name, name);
  }
  if (range.step <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("sweep step must be positive for ") + name, name);
  }
  if (range.max < range.min) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("sweep max below min for ") + name, name);
  }
  const auto count =
      static_cast<long>(std::floor((range.max - range.min) / range.step + 1e-9));
  if (count > 100000) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("sweep range too large for ") + name, name);
  }
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count + 1));
  for (long i = 0; i <= count; ++i) {
    out.push_back(range.min + static_cast<double>(i) * range.step);
  }
  return out;
}

std::vector<double> values_or(const std::optional<FieldRange>& range,
                              double fallback, const char* name) {
  if (!range) return {fallback};
  return grid_values(*range, name);
}

}  // namespace

LeafSpringSpec default_spec() {
  LeafSpringSpec spec;
  spec.R = kDesignR;
  spec.L_total = kDesignLTotal;
  spec.L_clamp = 20.0;
  spec.L_joint_arm = 5.0;
  spec.d = compute_joint_distance(kDesignD, kDesignLTotal, kDesignR);
  const double c = chord(compute_free_length(spec), spec.R);
  // Nudge X_0 by single ulps until the subtraction lands on 47.5 exactly.
  double x0 = c - kDesignXMax;
  for (int i = 0; i < 8 && c - x0 != kDesignXMax; ++i) {
    x0 = std::nextafter(x0, c - x0 > kDesignXMax ? c : -c);
  }
  spec.X_0 = x0;
  return spec;
}

const std::vector<std::string>& placeholder_fields() {
  static const std::vector<std::string> kFields = {"L_clamp", "L_joint_arm",
                                                   "X_0"};
  return kFields;
}

double compute_loop_width(const LeafSpringSpec& spec) {
  if (!(spec.R > 0.0)) fail("R must be positive", "R");
  const double D = (spec.L_total + spec.d) / 2.0 - kPi * spec.R + 2.0 * spec.R;
  // Relative slack so the circular-loop limit D == 2R is accepted.
  if (D < 2.0 * spec.R * (1.0 - 1e-12)) {
    fail("loop width D=" + format_double(D) + " is below 2R", "d");
  }
  return D;
}

double compute_joint_distance(double D, double L_total, double R) {
  if (!(D > 0.0) || !(L_total > 0.0) || !(R > 0.0)) {
    fail("D, L_total and R must be positive");
  }
  double d = 2.0 * (D - 2.0 * R + kPi * R) - L_total;
  if (d < 0.0) {
    // Absorb round-off at the circular-loop limit.
    if (d > -1e-9 * L_total) {
      d = 0.0;
    } else {
      fail("joint distance d=" + format_double(d) + " is negative", "d");
    }
  }
  return d;
}

double compute_free_length(const LeafSpringSpec& spec) {
  return (spec.L_total - spec.L_clamp) / 2.0 - spec.L_joint_arm;
}

double compute_x_max(const LeafSpringSpec& spec) {
  const double l_bc = compute_free_length(spec);
  if (!(l_bc > 2.0 * spec.R)) {
    fail("free length L_bc=" + format_double(l_bc) + " must exceed 2R",
         "L_clamp");
  }
  const double x_max = chord(l_bc, spec.R) - spec.X_0;
  if (!(x_max > 0.0)) {
    fail("X_max=" + format_double(x_max) + " must be positive", "X_0");
  }
  return x_max;
}

double allowable_displacement(double x_max) { return kAllowableFraction * x_max; }

std::optional<std::string> check_spec(const LeafSpringSpec& spec) {
  const double fields[] = {spec.R, spec.L_total, spec.d,
                           spec.L_clamp, spec.L_joint_arm, spec.X_0};
  for (double v : fields) {
    if (!std::isfinite(v)) return "all fields must be finite";
  }
  if (!(spec.R > 0.0)) return "R must be positive";
  if (spec.L_total < 0.0 || spec.d < 0.0 || spec.L_clamp < 0.0 ||
      spec.L_joint_arm < 0.0) {
    return "lengths must be non-negative";
  }
  if (!(spec.L_total > spec.L_clamp + 2.0 * spec.L_joint_arm)) {
    return "L_total must exceed L_clamp + 2 L_joint_arm";
  }
  try {
    compute_loop_width(spec);
    compute_x_max(spec);
  } catch (const Error& e) {
    return std::string(e.what());
  }
  return std::nullopt;
}

LoopGeometry analyze(const LeafSpringSpec& spec) {
  if (auto problem = check_spec(spec)) fail(*problem);
  LoopGeometry g;
  g.D = compute_loop_width(spec);
  g.L_bc = compute_free_length(spec);
  g.X_max = compute_x_max(spec);
  g.X_allow = allowable_displacement(g.X_max);
  return g;
}

std::vector<DesignPoint> sweep_designs(const LeafSpringSpec& base,
                                       const SweepRanges& ranges,
                                       const SweepConstraints& constraints) {
  const auto rs = values_or(ranges.R, base.R, "R");
  const auto lts = values_or(ranges.L_total, base.L_total, "L_total");
  const auto ds = values_or(ranges.d, base.d, "d");
  const auto lcs = values_or(ranges.L_clamp, base.L_clamp, "L_clamp");
  const auto ljs = values_or(ranges.L_joint_arm, base.L_joint_arm, "L_joint_arm");
  const auto x0s = values_or(ranges.X_0, base.X_0, "X0");

  std::vector<DesignPoint> out;
  for (double r : rs) {
    for (double lt : lts) {
      for (double d : ds) {
        for (double lc : lcs) {
          for (double lj : ljs) {
            for (double x0 : x0s) {
              const LeafSpringSpec s{r, lt, d, lc, lj, x0};
              if (check_spec(s)) continue;
              const LoopGeometry g = analyze(s);
              if (constraints.max_D && g.D > *constraints.max_D + kConstraintSlack) {
                continue;
              }
              if (constraints.min_X_allow &&
                  g.X_allow < *constraints.min_X_allow - kConstraintSlack) {
                continue;
              }
              out.push_back({s, g});
            }
          }
        }
      }
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const DesignPoint& a, const DesignPoint& b) {
                     return a.loop.X_allow > b.loop.X_allow;
                   });
  return out;
}

SweepRanges parse_sweep_ranges(std::string_view text) {
  SweepRanges ranges;
  std::string item;
  std::istringstream in{std::string(text)};
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument,
                  "sweep entry '" + item + "' needs name=min:step:max");
    }
    const std::string name = item.substr(0, eq);
    const std::string spec = item.substr(eq + 1);
    FieldRange range;
    const auto c1 = spec.find(':');
    const auto c2 = c1 == std::string::npos ? c1 : spec.find(':', c1 + 1);
    bool ok = false;
    if (c1 == std::string::npos) {
      ok = parse_double(spec, range.min);
      range.max = range.min;
      range.step = 1.0;
    } else if (c2 != std::string::npos) {
      ok = parse_double(spec.substr(0, c1), range.min) &&
           parse_double(spec.substr(c1 + 1, c2 - c1 - 1), range.step) &&
           parse_double(spec.substr(c2 + 1), range.max);
    }
    if (!ok) {
      throw Error(ErrorCode::kInvalidArgument,
                  "cannot parse sweep range '" + spec + "' for " + name, name);
    }
    grid_values(range, name.c_str());
    if (name == "R") ranges.R = range;
    else if (name == "L_total") ranges.L_total = range;
    else if (name == "d") ranges.d = range;
    else if (name == "L_clamp") ranges.L_clamp = range;
    else if (name == "L_joint_arm") ranges.L_joint_arm = range;
    else if (name == "X0" || name == "X_0") ranges.X_0 = range;
    else {
      throw Error(ErrorCode::kInvalidArgument,
                  "unknown sweep field '" + name + "'", name);
    }
  }
  return ranges;
}

std::string design_csv_row(const DesignPoint& p) {
  const double vals[] = {p.spec.R,      p.spec.L_total, p.spec.d,
                         p.spec.L_clamp, p.spec.L_joint_arm, p.spec.X_0,
                         p.loop.D,      p.loop.L_bc,    p.loop.X_max,
                         p.loop.X_allow};
  std::string row;
  for (std::size_t i = 0; i < std::size(vals); ++i) {
    if (i) row += ',';
    row += format_double(vals[i]);
  }
  return row;
}

}  // namespace claw::geometry
