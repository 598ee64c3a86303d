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

#include <string>

#include "hpgt/initializer.hpp"
#include "hpgt/measurements.hpp"
#include "hpgt/problem.hpp"
#include "hpgt/solver.hpp"

namespace hpgt {

struct EstimateResult {
  InitResult init;
  State seed;
  SolveResult solved;
  Trajectory trajectory;  // DUT frame, DUT clock, opt.output_rate
  std::size_t n_mocap = 0, n_imu = 0, n_pairs = 0;
  std::size_t dropped_mocap = 0, dropped_imu = 0, dropped_dut = 0;
  bool fd_checked = false;
  FdCheckReport fd;
};

/// Initialization, batch solve and extraction. Errors keep their code and
/// are prefixed with the failing stage (init, build, solve, extract).
EstimateResult estimate(const MeasurementSet& set, const EstimatorOptions& opt);

/// Calibration, offsets and solve statistics as key=value lines.
std::string report_text(const EstimateResult& r);

}  // namespace hpgt
