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

#include "hpgt/errors.hpp"

namespace hpgt {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDegenerateScrew: return "DegenerateScrew";
    case ErrorCode::kUnsupportedOrder: return "UnsupportedOrder";
    case ErrorCode::kOutOfDomain: return "OutOfDomain";
    case ErrorCode::kInsufficientCoverage: return "InsufficientCoverage";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kNonMonotonicTime: return "NonMonotonicTime";
    case ErrorCode::kBadQuaternion: return "BadQuaternion";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kEmptyStream: return "EmptyStream";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kNoOverlap: return "NoOverlap";
    case ErrorCode::kFlatSignal: return "FlatSignal";
    case ErrorCode::kDegenerateMotion: return "DegenerateMotion";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kEmptyProblem: return "EmptyProblem";
    case ErrorCode::kDomainMismatch: return "DomainMismatch";
    case ErrorCode::kNumericalFailure: return "NumericalFailure";
    case ErrorCode::kBadConfig: return "BadConfig";
    case ErrorCode::kNoMatches: return "NoMatches";
    case ErrorCode::kDegenerate: return "Degenerate";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

ParseFailure::ParseFailure(ErrorCode code, std::size_t line, const std::string& what)
    : Error(code, "line " + std::to_string(line) + ": " + what), line_(line) {}

}  // namespace hpgt
