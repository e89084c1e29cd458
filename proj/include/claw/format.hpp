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

#ifndef CLAW_FORMAT_HPP_
#define CLAW_FORMAT_HPP_

#include <filesystem>
#include <string>
#include <string_view>

namespace claw {

// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);

// Strict full-string parse; returns false on trailing garbage or overflow.
bool parse_double(std::string_view text, double& out);

// Writes to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents);

std::string read_file(const std::filesystem::path& path);

// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

// Current UTC time as ISO-8601 with seconds resolution.
std::string iso8601_now();

}  // namespace claw

#endif  // CLAW_FORMAT_HPP_
