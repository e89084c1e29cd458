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

// Random teleop messages and fuzzed byte strings for codec properties.

#ifndef CLAW_TESTS_RANDOM_MESSAGES_HPP_
#define CLAW_TESTS_RANDOM_MESSAGES_HPP_

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <string>

#include "claw/teleop.hpp"

namespace claw::testing {

// Finite doubles drawn from raw bit patterns, so subnormals, negative zero
// and extreme exponents appear.
inline double random_finite(std::mt19937_64& rng) {
  while (true) {
    const std::uint64_t bits = rng();
    double d;
    std::memcpy(&d, &bits, sizeof d);
    if (std::isfinite(d)) return d;
  }
}

inline teleop::Message random_message(std::mt19937_64& rng) {
  using namespace teleop;
  auto vec = [&] {
    Vec6 v;
    for (double& x : v) x = random_finite(rng);
    return v;
  };
  auto time = [&] { return std::abs(random_finite(rng)); };
  auto text = [&] {
    std::string s;
    const int n = static_cast<int>(rng() % 24);
    for (int i = 0; i < n; ++i) s += static_cast<char>(0x20 + rng() % 0x5f);
    return s;
  };
  const lock::StiffnessMode mode = lock::kAllModes[rng() % 3];
  switch (rng() % 5) {
    case 0: return Command{rng() & kMaxSeq, time(), vec(), mode};
    case 1: return Feedback{rng() & kMaxSeq, time(), vec(), (rng() & 1) != 0};
    case 2: {
      static const char* roles[] = {"leader", "follower", "observer"};
      return Hello{static_cast<int>(rng() % 4), roles[rng() % 3]};
    }
    case 3: return Bye{text()};
    default: {
      StateFrame f;
      f.t = time();
      f.pose = vec();
      f.deflection = vec();
      f.wrench = vec();
      f.mode = mode;
      f.carrier_position = random_finite(rng);
      f.estop = (rng() & 1) != 0;
      f.scenario.outcome = static_cast<scenario::Outcome>(rng() % 5);
      if (rng() & 1) f.scenario.insertion_depth = random_finite(rng);
      if (rng() & 1) f.scenario.handle_angle = random_finite(rng);
      f.scenario.latch_released = (rng() & 1) != 0;
      return f;
    }
  }
}

// Even draws: uniform random bytes. Odd draws: a valid line with a few
// bytes overwritten.
inline std::string fuzz_bytes(std::mt19937_64& rng, const std::string& valid, bool mutate) {
  std::string bytes;
  if (!mutate) {
    const std::size_t n = rng() % 200;
    for (std::size_t k = 0; k < n; ++k) bytes += static_cast<char>(rng() & 0xff);
    return bytes;
  }
  bytes = valid;
  const int flips = 1 + static_cast<int>(rng() % 4);
  for (int k = 0; k < flips; ++k) bytes[rng() % bytes.size()] = static_cast<char>(rng() & 0xff);
  return bytes;
}

}  // namespace claw::testing

#endif  // CLAW_TESTS_RANDOM_MESSAGES_HPP_
