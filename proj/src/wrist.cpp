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

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "claw/format.hpp"

namespace claw::wrist {
namespace {

std::size_t mode_index(StiffnessMode m) { return static_cast<std::size_t>(m); }
std::size_t channel_index(Channel c) { return static_cast<std::size_t>(c); }

// Default stiffness of each mode relative to Free, per channel.
constexpr double kModeMultiplier[kNumChannels][3] = {
    {1.0, 2.0, 2.0},  // x: locked in Half and Full
    {1.0, 1.0, 2.0},  // y: locked in Full only
    {1.0, 1.0, 1.0},  // z compression
    {1.0, 1.0, 1.0},  // z extension
    {1.0, 1.0, 1.0},  // roll
    {1.0, 1.0, 1.0},  // pitch
    {1.0, 2.0, 3.0},  // yaw
};

// Free-mode curve shapes. Lateral: 4.5 N linear + 0.5 N cubic at 15 mm.
// Yaw: 0.24 N*m linear + 0.06 N*m cubic at 30 deg.
constexpr SpringCoeffs kFreeShape[kNumChannels] = {
    {0.3, 0.5 / 3375.0},     // x
    {0.3, 0.5 / 3375.0},     // y
    {0.5, 2.5e-4},           // z compression
    {0.8, 5e-4},             // z extension
    {0.02, 1e-5},            // roll
    {0.02, 1e-5},            // pitch
    {0.008, 0.06 / 27000.0}  // yaw
};

SpringCoeffs scaled(const SpringCoeffs& c, double s) { return {c.k1 * s, c.k3 * s}; }

SpringCoeffs effective_coeffs(Channel ch, StiffnessMode mode,
                              const StiffnessParams& p) {
  SpringCoeffs c = p.at(ch, mode);
  if (ch == Channel::kPitch && mode != StiffnessMode::kFree &&
      p.pitch_coupling != 0.0) {
    const SpringCoeffs& f = p.at(ch, StiffnessMode::kFree);
    c.k1 += p.pitch_coupling * f.k1;
    c.k3 += p.pitch_coupling * f.k3;
  }
  return c;
}

double barrier_for(Axis axis, const StiffnessParams& p) {
  return is_rotational(axis) ? p.rotational_barrier_gain : p.barrier_gain;
}

[[noreturn]] void infeasible(const std::string& msg) {
  throw Error(ErrorCode::kInfeasibleCalibration, msg);
}

bool within(double got, double want, double tol) {
  return std::abs(got - want) <= tol * std::abs(want);
}

struct Target {
  double deflection;  // signed
  double force;       // magnitude
};

// Relative-error least squares for F = k1 |d| + k3 |d|^3 with k1, k3 >= 0.
SpringCoeffs fit_nnls(const std::vector<Target>& targets) {
  double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
  for (const Target& t : targets) {
    const double u = std::abs(t.deflection) / t.force;
    const double v = u * t.deflection * t.deflection;
    a11 += u * u;
    a12 += u * v;
    a22 += v * v;
    b1 += u;
    b2 += v;
  }
  auto cost = [&](double k1, double k3) {
    double s = 0;
    for (const Target& t : targets) {
      const double d = std::abs(t.deflection);
      const double r = (k1 * d + k3 * d * d * d) / t.force - 1.0;
      s += r * r;
    }
    return s;
  };
  const double det = a11 * a22 - a12 * a12;
  if (det > 1e-300) {
    const double k1 = (b1 * a22 - b2 * a12) / det;
    const double k3 = (a11 * b2 - a12 * b1) / det;
    if (k1 >= 0.0 && k3 >= 0.0) return {k1, k3};
  }
  const SpringCoeffs only_k1{b1 / a11, 0.0};
  const SpringCoeffs only_k3{0.0, b2 / a22};
  return cost(only_k1.k1, 0.0) <= cost(0.0, only_k3.k3) ? only_k1 : only_k3;
}

// Fits one curve. A single distinct |deflection| rescales the given shape.
SpringCoeffs fit_curve(const SpringCoeffs& shape,
                       const std::vector<Target>& targets) {
  std::vector<double> mags;
  for (const Target& t : targets) mags.push_back(std::abs(t.deflection));
  std::sort(mags.begin(), mags.end());
  mags.erase(std::unique(mags.begin(), mags.end()), mags.end());
  if (mags.size() == 1) {
    const double base = shape.force(mags[0]);
    if (!(base > 0.0)) infeasible("anchored curve has zero default shape");
    return scaled(shape, targets.front().force / base);
  }
  return fit_nnls(targets);
}

}  // namespace

std::pair<double, double> DeformationEnvelope::bounds(Axis axis,
                                                      StiffnessMode mode) const {
  switch (axis) {
    case Axis::kX: return {-x_max, x_max};
    case Axis::kY: return {-y_max, y_max};
    case Axis::kZ: return {-z_ext_max, z_comp_max};
    case Axis::kRoll: return {-roll_max, roll_max};
    case Axis::kPitch: return {-pitch_max, pitch_max};
    case Axis::kYaw: {
      const double b = mode == StiffnessMode::kFree ? yaw_max_free : yaw_max_locked;
      return {-b, b};
    }
  }
  return {0.0, 0.0};
}

Channel channel_for(Axis axis, double deflection) {
  switch (axis) {
    case Axis::kX: return Channel::kX;
    case Axis::kY: return Channel::kY;
    case Axis::kZ: return deflection < 0.0 ? Channel::kZExt : Channel::kZComp;
    case Axis::kRoll: return Channel::kRoll;
    case Axis::kPitch: return Channel::kPitch;
    case Axis::kYaw: return Channel::kYaw;
  }
  return Channel::kX;
}

std::string_view channel_name(Channel c) {
  static constexpr std::string_view kNames[] = {"x",    "y",     "z_comp", "z_ext",
                                                "roll", "pitch", "yaw"};
  return kNames[channel_index(c)];
}

const SpringCoeffs& StiffnessParams::at(Channel c, StiffnessMode m) const {
  return coeffs[channel_index(c)][mode_index(m)];
}

SpringCoeffs& StiffnessParams::at(Channel c, StiffnessMode m) {
  return coeffs[channel_index(c)][mode_index(m)];
}

StiffnessParams default_params() {
  StiffnessParams p;
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    for (std::size_t m = 0; m < 3; ++m) {
      p.coeffs[c][m] = scaled(kFreeShape[c], kModeMultiplier[c][m]);
    }
  }
  return p;
}

void validate(const StiffnessParams& p) {
  for (std::size_t c = 0; c < kNumChannels; ++c) {
    for (StiffnessMode m : lock::kAllModes) {
      const SpringCoeffs& k = p.coeffs[c][mode_index(m)];
      const std::string where = std::string(channel_name(static_cast<Channel>(c))) +
                                "." + std::string(lock::mode_name(m));
      if (!std::isfinite(k.k1) || !std::isfinite(k.k3) || k.k1 < 0.0 ||
          k.k3 < 0.0 || (k.k1 == 0.0 && k.k3 == 0.0)) {
        throw Error(ErrorCode::kInvalidArgument,
                    "invalid stiffness coefficients for " + where, where);
      }
    }
  }
  const DeformationEnvelope& e = p.envelope;
  const double bounds[] = {e.x_max,    e.y_max,     e.z_comp_max,    e.z_ext_max,
                           e.roll_max, e.pitch_max, e.yaw_max_locked, e.yaw_max_free};
  for (double b : bounds) {
    if (!(b > 0.0) || !std::isfinite(b)) {
      throw Error(ErrorCode::kInvalidArgument, "envelope bounds must be positive",
                  "envelope");
    }
  }
  if (!(p.barrier_gain > 0.0) || !(p.rotational_barrier_gain > 0.0) ||
      !(p.pitch_coupling >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid barrier or coupling gain");
  }
}

EnvelopeResult apply_envelope(const Deflection6& defl, StiffnessMode mode,
                              const DeformationEnvelope& env) {
  EnvelopeResult r;
  for (Axis a : kAllAxes) {
    const auto [lo, hi] = env.bounds(a, mode);
    const double d = defl[index(a)];
    if (d > hi) {
      r.clamped[index(a)] = hi;
      r.at_limit.set(index(a));
    } else if (d < lo) {
      r.clamped[index(a)] = lo;
      r.at_limit.set(index(a));
    } else {
      r.clamped[index(a)] = d;
    }
  }
  return r;
}

double axis_force(Axis axis, double d, StiffnessMode mode,
                  const StiffnessParams& p) {
  const SpringCoeffs c = effective_coeffs(channel_for(axis, d), mode, p);
  const auto [lo, hi] = p.envelope.bounds(axis, mode);
  const double g = barrier_for(axis, p);
  double spring;
  if (d > hi) {
    spring = c.force(hi) + g * (d - hi);
  } else if (d < lo) {
    spring = c.force(lo) + g * (d - lo);
  } else {
    spring = c.force(d);
  }
  return -spring;
}

double axis_stiffness(Axis axis, double d, StiffnessMode mode,
                      const StiffnessParams& p) {
  const auto [lo, hi] = p.envelope.bounds(axis, mode);
  if (d > hi || d < lo) return barrier_for(axis, p);
  return effective_coeffs(channel_for(axis, d), mode, p).stiffness(d);
}

Wrench6 reaction_wrench(const Deflection6& defl, StiffnessMode mode,
                        const StiffnessParams& params) {
  Wrench6 w{};
  for (Axis a : kAllAxes) w[index(a)] = axis_force(a, defl[index(a)], mode, params);
  return w;
}

double stored_energy(const Deflection6& defl, StiffnessMode mode,
                     const StiffnessParams& p) {
  double total = 0.0;
  for (Axis a : kAllAxes) {
    const double d = defl[index(a)];
    const SpringCoeffs c = effective_coeffs(channel_for(a, d), mode, p);
    const auto [lo, hi] = p.envelope.bounds(a, mode);
    const double g = barrier_for(a, p);
    const double b = d > hi ? hi : (d < lo ? lo : d);
    const double excess = d - b;
    total += c.energy(b) + c.force(b) * excess + 0.5 * g * excess * excess;
  }
  return total;
}

std::vector<Anchor> reference_anchors() {
  using M = StiffnessMode;
  return {
      {Axis::kY, M::kFullLock, 15.0, AnchorKind::kRatioToFree, 2.0},
      {Axis::kYaw, M::kFullLock, 30.0, AnchorKind::kRatioToFree, 3.0},
      {Axis::kYaw, M::kHalfLock, 30.0, AnchorKind::kRatioToFree, 2.0},
      {Axis::kY, M::kHalfLock, 15.0, AnchorKind::kEqualToFree, 1.0},
      {Axis::kZ, M::kHalfLock, 10.0, AnchorKind::kEqualToFree, 1.0},
      {Axis::kZ, M::kFullLock, 10.0, AnchorKind::kEqualToFree, 1.0},
  };
}

StiffnessParams calibrate(const std::vector<Anchor>& anchors, double base_scale) {
  if (!(base_scale > 0.0) || !std::isfinite(base_scale)) {
    throw Error(ErrorCode::kInvalidArgument, "base_scale must be positive",
                "base_scale");
  }
  StiffnessParams p = default_params();
  if (base_scale != kDefaultBaseScale) {
    const double s =
        base_scale / p.at(Channel::kY, StiffnessMode::kFree).force(kBaseScaleDeflection);
    for (auto& row : p.coeffs) {
      for (auto& c : row) c = scaled(c, s);
    }
  }
  if (anchors.empty()) return p;

  for (const Anchor& a : anchors) {
    const auto [lo, hi] = p.envelope.bounds(a.axis, a.mode);
    if (!std::isfinite(a.deflection) || a.deflection == 0.0 || a.deflection < lo ||
        a.deflection > hi) {
      throw Error(ErrorCode::kInvalidArgument,
                  "anchor deflection must be nonzero and inside the envelope");
    }
    if (a.kind != AnchorKind::kEqualToFree && !(a.value > 0.0 && std::isfinite(a.value))) {
      throw Error(ErrorCode::kInvalidArgument, "anchor value must be positive");
    }
    const bool mode_free_axis = a.axis == Axis::kZ || a.mode == StiffnessMode::kFree;
    if (a.kind == AnchorKind::kRatioToFree && mode_free_axis &&
        !within(a.value, 1.0, kCalibrationTolerance)) {
      infeasible("ratio anchor on a mode-invariant curve must be 1");
    }
  }

  // Z is shared by all modes, so its force anchors count as Free anchors.
  auto fits_free = [](const Anchor& a) {
    return a.kind == AnchorKind::kForce &&
           (a.mode == StiffnessMode::kFree || a.axis == Axis::kZ);
  };

  // Contradictions: several force targets on one point must agree.
  std::map<std::tuple<int, int, double>, double> seen;
  auto record = [&](Channel ch, StiffnessMode m, double d, double f) {
    const auto key = std::make_tuple(static_cast<int>(ch), static_cast<int>(m),
                                     std::abs(d));
    auto [it, inserted] = seen.emplace(key, f);
    if (!inserted && !within(f, it->second, 1e-9)) {
      infeasible("contradictory anchors on " + std::string(channel_name(ch)) + "." +
                 std::string(lock::mode_name(m)));
    }
  };

  for (std::size_t c = 0; c < kNumChannels; ++c) {
    std::vector<Target> targets;
    for (const Anchor& a : anchors) {
      if (!fits_free(a) || channel_index(channel_for(a.axis, a.deflection)) != c) continue;
      record(static_cast<Channel>(c), StiffnessMode::kFree, a.deflection, a.value);
      targets.push_back({a.deflection, a.value});
    }
    if (targets.empty()) continue;
    const SpringCoeffs free = fit_curve(p.coeffs[c][0], targets);
    for (std::size_t m = 0; m < 3; ++m) {
      p.coeffs[c][m] = scaled(free, kModeMultiplier[c][m]);
    }
  }

  for (std::size_t c = 0; c < kNumChannels; ++c) {
    const Channel ch = static_cast<Channel>(c);
    if (ch == Channel::kZComp || ch == Channel::kZExt) continue;
    const SpringCoeffs free = p.coeffs[c][0];
    for (StiffnessMode m : {StiffnessMode::kHalfLock, StiffnessMode::kFullLock}) {
      bool equal = false;
      std::vector<Target> targets;
      for (const Anchor& a : anchors) {
        if (a.mode != m || channel_index(channel_for(a.axis, a.deflection)) != c) continue;
        if (a.kind == AnchorKind::kEqualToFree) {
          equal = true;
          continue;
        }
        const double f = a.kind == AnchorKind::kForce
                             ? a.value
                             : a.value * std::abs(free.force(a.deflection));
        record(ch, m, a.deflection, f);
        targets.push_back({a.deflection, f});
      }
      SpringCoeffs& k = p.coeffs[c][mode_index(m)];
      if (equal) {
        k = free;
      } else if (!targets.empty()) {
        k = fit_curve(k, targets);
      }
    }
  }

  for (StiffnessMode m : {StiffnessMode::kHalfLock, StiffnessMode::kFullLock}) {
    p.at(Channel::kZComp, m) = p.at(Channel::kZComp, StiffnessMode::kFree);
    p.at(Channel::kZExt, m) = p.at(Channel::kZExt, StiffnessMode::kFree);
  }

  // Every anchor must hold on the final model.
  for (const Anchor& a : anchors) {
    const double got = std::abs(axis_force(a.axis, a.deflection, a.mode, p));
    const double free = std::abs(axis_force(a.axis, a.deflection, StiffnessMode::kFree, p));
    double want = 0.0;
    switch (a.kind) {
      case AnchorKind::kForce: want = a.value; break;
      case AnchorKind::kRatioToFree: want = a.value * free; break;
      case AnchorKind::kEqualToFree: want = free; break;
    }
    if (!within(got, want, kCalibrationTolerance)) {
      infeasible("calibration misses anchor on " + std::string(axis_name(a.axis)) +
                 "." + std::string(lock::mode_name(a.mode)) + " at " +
                 format_double(a.deflection) + ": got " + format_double(got) +
                 ", want " + format_double(want));
    }
  }
  validate(p);
  return p;
}

namespace {

// Odd piecewise-linear interpolation with linear extrapolation past the end.
std::pair<double, double> finray_eval(
    const std::vector<std::pair<double, double>>& curve, double d) {
  const double m = std::abs(d);
  const double sign = d < 0.0 ? -1.0 : 1.0;
  std::size_t i = 1;
  while (i + 1 < curve.size() && m > curve[i].first) ++i;
  const auto& [x0, f0] = curve[i - 1];
  const auto& [x1, f1] = curve[i];
  const double slope = (f1 - f0) / (x1 - x0);
  return {sign * (f0 + slope * (m - x0)), slope};
}

}  // namespace

Wrench6 GripperModel::reaction(const Deflection6& defl, StiffnessMode mode) const {
  if (kind == GripperKind::kClaw) return reaction_wrench(defl, mode, params);
  Wrench6 w{};
  for (Axis a : kAllAxes) {
    const double d = defl[index(a)];
    if (kind == GripperKind::kFinRay && a == Axis::kY) {
      w[index(a)] = -finray_eval(finray_curve, d).first;
    } else {
      w[index(a)] = -rigid_k * d;
    }
  }
  return w;
}

Vec6 GripperModel::stiffness(const Deflection6& defl, StiffnessMode mode) const {
  Vec6 k{};
  for (Axis a : kAllAxes) {
    const double d = defl[index(a)];
    if (kind == GripperKind::kClaw) {
      k[index(a)] = axis_stiffness(a, d, mode, params);
    } else if (kind == GripperKind::kFinRay && a == Axis::kY) {
      k[index(a)] = finray_eval(finray_curve, d).second;
    } else {
      k[index(a)] = rigid_k;
    }
  }
  return k;
}

GripperModel rigid_gripper() {
  GripperModel g;
  g.kind = GripperKind::kRigid;
  return g;
}

GripperModel finray_gripper() {
  GripperModel g;
  g.kind = GripperKind::kFinRay;
  return g;
}

GripperModel claw_gripper(StiffnessParams params) {
  GripperModel g;
  g.kind = GripperKind::kClaw;
  g.params = std::move(params);
  return g;
}

std::vector<CurvePoint> characterize(const GripperModel& gripper, Axis axis,
                                     StiffnessMode mode, int steps) {
  if (steps < 1) throw Error(ErrorCode::kInvalidArgument, "steps must be >= 1", "steps");
  const double bound = gripper.params.envelope.bounds(axis, mode).second;
  std::vector<CurvePoint> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) {
    const double d = bound * i / steps;
    Deflection6 defl{};
    defl[index(axis)] = d;
    out.push_back({d, -gripper.reaction(defl, mode)[index(axis)]});
  }
  return out;
}

std::string characterize_csv_header(Axis axis) {
  return is_rotational(axis) ? "deflection_deg,torque_Nm,mode" : "deflection_mm,force_N,mode";
}

std::string characterize_csv(Axis axis, StiffnessMode mode,
                             const std::vector<CurvePoint>& points) {
  std::string out = characterize_csv_header(axis) + "\n";
  const std::string m(lock::mode_name(mode));
  for (const CurvePoint& p : points) {
    out += format_double(p.deflection) + "," + format_double(p.load) + "," + m + "\n";
  }
  return out;
}

}  // namespace claw::wrist
