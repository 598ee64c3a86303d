// Copyright 2026 The HPGT Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <ostream>

namespace hpgt::cli {

/// Exit codes of the hpgt tool.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kUsage = 2;      // bad flags, bad config, unreadable or malformed input
inline constexpr int kIo = 3;         // output could not be written
inline constexpr int kDegenerate = 4; // motion does not excite the calibration
inline constexpr int kNumerical = 5;  // non-finite cost or Jacobian
inline constexpr int kNoMatches = 6;  // trajectories share no timestamps

/// Runs one subcommand. stdout carries `RESULT key=value` lines.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hpgt::cli
