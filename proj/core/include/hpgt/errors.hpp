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

#include <stdexcept>
#include <string>
#include <string_view>

namespace hpgt {

enum class ErrorCode {
  kDegenerateScrew,
  kUnsupportedOrder,
  kOutOfDomain,
  kInsufficientCoverage,
  kParseError,
  kNonMonotonicTime,
  kBadQuaternion,
  kIoError,
  kEmptyStream,
  kTooFewSamples,
  kNoOverlap,
  kFlatSignal,
  kDegenerateMotion,
  kRankDeficient,
  kEmptyProblem,
  kDomainMismatch,
  kNumericalFailure,
  kBadConfig,
  kNoMatches,
  kDegenerate,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; the code carries the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Parse-time failure that remembers the offending 1-based line number.
class ParseFailure : public Error {
 public:
  ParseFailure(ErrorCode code, std::size_t line, const std::string& what);

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace hpgt
