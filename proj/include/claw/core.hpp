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

#ifndef CLAW_CORE_HPP_
#define CLAW_CORE_HPP_

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace claw {

// Wire/file schema version shared by configs, episode logs and the stream
// protocol.
inline constexpr int kSpecVersion = 1;

// Pose/velocity/wrench-like 6-vector: x, y, z, roll, pitch, yaw.
// Translations in millimeters, rotations in degrees unless stated otherwise.
using Vec6 = std::array<double, 6>;

enum class Axis { kX = 0, kY, kZ, kRoll, kPitch, kYaw };

inline constexpr std::array<Axis, 6> kAllAxes = {Axis::kX,    Axis::kY,
                                                 Axis::kZ,    Axis::kRoll,
                                                 Axis::kPitch, Axis::kYaw};

constexpr std::size_t index(Axis a) { return static_cast<std::size_t>(a); }
constexpr bool is_rotational(Axis a) { return index(a) >= 3; }

std::string_view axis_name(Axis a);
// Accepts "x", "y", "z", "roll", "pitch", "yaw".
Axis parse_axis(std::string_view name);

enum class ErrorCode {
  kInvalidSpec,
  kInfeasibleCalibration,
  kInvalidArgument,
  kGeometryViolation,
  kInvalidConfig,
  kMalformedMessage,
  kProtocolViolation,
  kVersionMismatch,
  kScheduleConflict,
  kEstopTripped,
  kCapacityExceeded,
  kUnknownSession,
  kCommanderConflict,
  kSessionTerminal,
  kIo,
};

std::string_view error_code_name(ErrorCode code);

// Domain error carrying a machine-readable code. `field` names the offending
// input (e.g. "geometry.hole_clearance") when one can be identified.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string field = {})
      : std::runtime_error(message), code_(code), field_(std::move(field)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorCode code_;
  std::string field_;
};

inline bool all_finite(const Vec6& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

}  // namespace claw

#endif  // CLAW_CORE_HPP_
